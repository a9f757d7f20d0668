"""Embedded emission intensity of goods over their bill of materials.

A good's embedded intensity is its own scope-1 intensity plus, for every
input inside the system boundary, the input quantity times that input's
embedded intensity.  Inputs outside the boundary contribute nothing and are
not expanded further.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping, Optional

from cbam.errors import NegativeQuantity, UnitMismatch, UnknownGood
from cbam.registry import TONNE, GoodSpec, GoodsRegistry
from cbam.taxonomy import AnnexList, is_covered

TOLERANCE = 1e-9


@dataclass(frozen=True)
class Boundary:
    """Which inputs count towards a complex good's embedded emissions.

    annex
        Inputs whose CN code is covered by this list are in-boundary.
    include_scope2
        Whether electricity inputs (goods on a MWh basis) count.  Electricity
        is governed by this switch alone, regardless of annex coverage.
    max_depth
        Cut the expansion after this many BOM levels; None means unlimited.
    """

    annex: AnnexList
    include_scope2: bool = False
    max_depth: Optional[int] = None

    def __post_init__(self) -> None:
        if self.max_depth is not None and (isinstance(self.max_depth, bool) or self.max_depth < 1):
            raise ValueError(f"max_depth must be >= 1 or None, got {self.max_depth!r}")

    def admits(self, good: GoodSpec) -> bool:
        if good.is_electricity:
            return self.include_scope2
        return is_covered(good.cn_code, self.annex)


@dataclass(frozen=True)
class Contribution:
    good_id: str
    depth: int
    value: float  # tCO2e per tonne of the root product


@dataclass(frozen=True)
class EmbeddedResult:
    good_id: str
    intensity: float
    direct: float
    contributions: tuple[Contribution, ...]
    truncated: bool


@lru_cache(maxsize=16)
def intensity_table(registry: GoodsRegistry, boundary: Boundary) -> Mapping[str, float]:
    """Unlimited-depth embedded intensity of every good, one pass over the
    topological order.  Cached per (registry, boundary)."""
    if boundary.max_depth is not None:
        raise ValueError("intensity_table only covers unlimited-depth boundaries")
    goods = registry.goods
    admitted = {gid: boundary.admits(g) for gid, g in goods.items()}
    out: dict[str, float] = {}
    for gid in registry.order:
        g = goods[gid]
        out[gid] = g.direct_intensity + math.fsum(
            qty * out[input_id] for input_id, qty in g.inputs if admitted[input_id]
        )
    return MappingProxyType(out)


def embedded_intensity(
    registry: GoodsRegistry, good_id: str, boundary: Boundary, basis: str = TONNE
) -> EmbeddedResult:
    if good_id not in registry:
        raise UnknownGood(good_id)
    root = registry[good_id]
    if root.unit != basis:
        raise UnitMismatch(f"good {good_id!r} is measured per {root.unit}, not per {basis}")

    goods = registry.goods
    position = {gid: i for i, gid in enumerate(registry.order)}
    contributions: list[Contribution] = []
    frontier: dict[str, float] = {good_id: 1.0}
    depth = 0
    truncated = False
    while frontier:
        depth += 1
        nxt: dict[str, float] = defaultdict(float)
        for gid in sorted(frontier, key=position.__getitem__, reverse=True):
            mult = frontier[gid]
            for input_id, qty in goods[gid].inputs:
                if boundary.admits(goods[input_id]):
                    nxt[input_id] += mult * qty
        if not nxt:
            break
        if boundary.max_depth is not None and depth > boundary.max_depth:
            truncated = True
            break
        for gid in sorted(nxt, key=position.__getitem__, reverse=True):
            contributions.append(Contribution(gid, depth, nxt[gid] * goods[gid].direct_intensity))
        frontier = nxt

    if boundary.max_depth is None:
        intensity = intensity_table(registry, boundary)[good_id]
    else:
        intensity = root.direct_intensity + math.fsum(c.value for c in contributions)
    return EmbeddedResult(good_id, intensity, root.direct_intensity, tuple(contributions), truncated)


def embedded_total(intensity: float, quantity: float) -> float:
    """Total embedded tCO2e of `quantity` tonnes at `intensity` tCO2e/t."""
    if quantity < 0:
        raise NegativeQuantity(f"quantity must be >= 0, got {quantity}")
    return intensity * quantity
