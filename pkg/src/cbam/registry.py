"""Goods catalogue, carbon price tables, default intensities and exemptions.

Everything here is loaded once, validated, and then treated as immutable.
"""

from __future__ import annotations

import bisect
import csv
import datetime as dt
import heapq
import io
import json
import math
from dataclasses import dataclass
from importlib import resources
from types import MappingProxyType
from typing import Iterable, Mapping

from cbam.errors import (
    CycleDetected,
    DanglingInput,
    MissingDefault,
    NegativeQuantity,
    ParseError,
    UnitMismatch,
)
from cbam.taxonomy import CnCode, Sector, parse_cn

EU_MEMBERS = frozenset(
    "AT BE BG HR CY CZ DK EE FI FR DE GR HU IE IT LV LT LU MT NL PL PT RO SK SI ES SE".split()
)
EFTA = frozenset({"IS", "LI", "NO", "CH"})

EU = "EU"
WILDCARD = "*"

# Product bases.  Electricity is measured per MWh, everything else per tonne.
TONNE = "t"
MWH = "MWh"
UNITS = (TONNE, MWH)


def parse_country(text: str) -> str:
    code = text.strip().upper()
    if len(code) != 2 or not code.isascii() or not code.isalpha():
        raise ParseError(f"bad country code {text!r}; expected ISO 3166-1 alpha-2")
    return code


def _nonneg(value, what: str) -> float:
    if isinstance(value, bool):
        raise ParseError(f"{what}: expected a number, got {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{what}: expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ParseError(f"{what}: must be finite, got {value!r}")
    if x < 0:
        raise NegativeQuantity(f"{what}: must be >= 0, got {value!r}")
    return x


# -- goods ------------------------------------------------------------------


@dataclass(frozen=True)
class GoodSpec:
    id: str
    cn_code: CnCode
    name: str
    direct_intensity: float
    inputs: tuple[tuple[str, float], ...] = ()
    unit: str = TONNE

    def __post_init__(self) -> None:
        if self.direct_intensity < 0:
            raise NegativeQuantity(f"good {self.id!r}: direct_intensity must be >= 0")
        for input_id, qty in self.inputs:
            if qty < 0:
                raise NegativeQuantity(f"good {self.id!r}: input {input_id!r} has qty {qty}")
        if self.unit not in UNITS:
            raise UnitMismatch(f"good {self.id!r}: unit {self.unit!r} not in {UNITS}")

    @property
    def is_electricity(self) -> bool:
        return self.unit == MWH


@dataclass(frozen=True, eq=False)
class GoodsRegistry:
    """Validated, acyclic goods catalogue.  Compared and hashed by identity
    so it can key per-registry caches."""

    goods: Mapping[str, GoodSpec]
    order: tuple[str, ...]  # inputs always precede the goods consuming them

    def __contains__(self, good_id: object) -> bool:
        return good_id in self.goods

    def __getitem__(self, good_id: str) -> GoodSpec:
        return self.goods[good_id]

    def __len__(self) -> int:
        return len(self.goods)


def topological_order(goods: Mapping[str, GoodSpec]) -> tuple[str, ...]:
    """Kahn's algorithm, inputs first; ties resolved by catalogue order.

    Raises CycleDetected with one concrete cycle when the graph is not a DAG.
    """
    position = {gid: i for i, gid in enumerate(goods)}
    pending = {gid: len(g.inputs) for gid, g in goods.items()}
    consumers: dict[str, list[str]] = {gid: [] for gid in goods}
    for gid, g in goods.items():
        for input_id, _ in g.inputs:
            consumers[input_id].append(gid)

    ready = [(position[gid], gid) for gid, n in pending.items() if n == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        _, gid = heapq.heappop(ready)
        order.append(gid)
        for c in consumers[gid]:
            pending[c] -= 1
            if pending[c] == 0:
                heapq.heappush(ready, (position[c], c))

    if len(order) < len(goods):
        stuck = {gid for gid, n in pending.items() if n > 0}
        raise CycleDetected(_find_cycle(goods, stuck))
    return tuple(order)


def _find_cycle(goods: Mapping[str, GoodSpec], stuck: set[str]) -> list[str]:
    # Every stuck node has at least one stuck input, so walking stuck inputs
    # must revisit a node.
    start = min(stuck, key=list(goods).index)
    path: list[str] = []
    seen: dict[str, int] = {}
    node = start
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = next(i for i, _ in goods[node].inputs if i in stuck)
    return path[seen[node]:] + [node]


def _good_from_doc(entry: Mapping) -> GoodSpec:
    if not isinstance(entry, Mapping):
        raise ParseError(f"good entry must be an object, got {entry!r}")
    try:
        gid = entry["id"]
        cn = entry["cn_code"]
    except KeyError as exc:
        raise ParseError(f"good entry missing field {exc.args[0]!r}: {entry!r}") from None
    if not isinstance(gid, str) or not gid:
        raise ParseError(f"good id must be a non-empty string, got {gid!r}")
    inputs = []
    for item in entry.get("inputs", []):
        if not isinstance(item, Mapping) or "id" not in item or "qty" not in item:
            raise ParseError(f"good {gid!r}: input entries need 'id' and 'qty', got {item!r}")
        inputs.append((str(item["id"]), _nonneg(item["qty"], f"good {gid!r} input {item['id']!r}")))
    return GoodSpec(
        id=gid,
        cn_code=parse_cn(cn),
        name=str(entry.get("name", gid)),
        direct_intensity=_nonneg(entry.get("direct_intensity", 0.0), f"good {gid!r} direct_intensity"),
        inputs=tuple(inputs),
        unit=entry.get("unit", TONNE),
    )


def load_registry(doc: Mapping) -> GoodsRegistry:
    """Validate a goods document and return an immutable registry.

    The document has the shape ``{"goods": [{"id", "cn_code", "name",
    "direct_intensity", "inputs": [{"id", "qty"}], "unit"?}]}``.
    """
    if not isinstance(doc, Mapping) or not isinstance(doc.get("goods", []), list):
        raise ParseError("registry document needs a 'goods' array")
    goods: dict[str, GoodSpec] = {}
    for entry in doc.get("goods", []):
        g = _good_from_doc(entry)
        if g.id in goods:
            raise ParseError(f"duplicate good id {g.id!r}")
        goods[g.id] = g
    for g in goods.values():
        for input_id, _ in g.inputs:
            if input_id not in goods:
                raise DanglingInput(g.id, input_id)
    order = topological_order(goods)
    return GoodsRegistry(MappingProxyType(goods), order)


def empty_registry() -> GoodsRegistry:
    return GoodsRegistry(MappingProxyType({}), ())


def read_registry(path) -> GoodsRegistry:
    with open(path, encoding="utf-8") as fh:
        return load_registry(json.load(fh))


# -- carbon prices -----------------------------------------------------------


@dataclass(frozen=True)
class CarbonPriceTable:
    """Step-function price schedule per country; the EU ETS reference is
    stored under the pseudo-country ``EU``."""

    rows: Mapping[str, tuple[tuple[dt.date, ...], tuple[float, ...]]]

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, dt.date, float]]) -> "CarbonPriceTable":
        by_country: dict[str, list[tuple[dt.date, float]]] = {}
        for country, valid_from, price in rows:
            by_country.setdefault(country, []).append((valid_from, _nonneg(price, f"price for {country}")))
        table = {}
        for country, entries in by_country.items():
            dates = [d for d, _ in entries]
            if any(a >= b for a, b in zip(dates, dates[1:])):
                raise ParseError(f"price rows for {country} must have strictly increasing valid_from")
            table[country] = (tuple(dates), tuple(p for _, p in entries))
        return cls(MappingProxyType(table))

    def has_scheme(self, country: str) -> bool:
        return country in self.rows

    def eu_price(self, date: dt.date) -> float:
        return carbon_price(self, EU, date)


def price_in_force(table: CarbonPriceTable, country: str, date: dt.date) -> float | None:
    """Price of the latest row with valid_from <= date, or None."""
    entry = table.rows.get(country)
    if entry is None:
        return None
    dates, prices = entry
    i = bisect.bisect_right(dates, date)
    return prices[i - 1] if i else None


def carbon_price(table: CarbonPriceTable, country: str, date: dt.date) -> float:
    """Price in force on `date`; 0 when the country has no row yet or at all."""
    price = price_in_force(table, country, date)
    return 0.0 if price is None else price


def _csv_rows(text: str, header: list[str], what: str):
    reader = csv.reader(io.StringIO(text))
    first = next(reader, None)
    if first is None or [h.strip() for h in first] != header:
        raise ParseError(f"{what}: header must be {','.join(header)}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{what} line {lineno}: expected {len(header)} columns, got {len(row)}")
        yield lineno, [c.strip() for c in row]


def load_price_table(text: str) -> CarbonPriceTable:
    rows = []
    for lineno, (country, valid_from, price) in _csv_rows(text, ["country", "valid_from", "price_eur"], "price table"):
        try:
            day = dt.date.fromisoformat(valid_from)
        except ValueError:
            raise ParseError(f"price table line {lineno}: bad date {valid_from!r}") from None
        rows.append((parse_country(country), day, price))
    return CarbonPriceTable.from_rows(rows)


# -- default intensities -----------------------------------------------------


@dataclass(frozen=True)
class IntensityDefaults:
    rows: Mapping[tuple[str, Sector], float]

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, Sector, float]]) -> "IntensityDefaults":
        table: dict[tuple[str, Sector], float] = {}
        for country, sector, value in rows:
            key = (country, sector)
            if key in table:
                raise ParseError(f"duplicate default intensity for {country}/{sector.value}")
            table[key] = _nonneg(value, f"default intensity {country}/{sector.value}")
        return cls(MappingProxyType(table))


def default_intensity(
    defaults: IntensityDefaults, country: str, sector: Sector, basis: str = TONNE
) -> float:
    """Fallback emission intensity for goods of `sector` made in `country`.

    Looks up the exact country row, then the ``EU`` row for member states,
    then the ``*`` wildcard row.
    """
    if (sector is Sector.ELECTRICITY) != (basis == MWH):
        raise UnitMismatch(f"sector {sector.value} cannot be assessed on a {basis!r} basis")
    keys = [(country, sector)]
    if country in EU_MEMBERS:
        keys.append((EU, sector))
    keys.append((WILDCARD, sector))
    for key in keys:
        value = defaults.rows.get(key)
        if value is not None:
            return value
    raise MissingDefault(f"no default intensity for {country}/{sector.value} and no wildcard row")


def load_intensity_defaults(text: str) -> IntensityDefaults:
    rows = []
    for _, (country, sector, value) in _csv_rows(text, ["country", "sector", "intensity"], "defaults"):
        if country not in (WILDCARD, EU):
            country = parse_country(country)
        rows.append((country, Sector.parse(sector), value))
    return IntensityDefaults.from_rows(rows)


# -- exemptions --------------------------------------------------------------


def load_exemptions(doc) -> frozenset[str]:
    if not isinstance(doc, list) or not doc or not all(isinstance(c, str) for c in doc):
        raise ParseError("exemptions must be a non-empty JSON array of country codes")
    return frozenset(parse_country(c) for c in doc)


# -- shipped defaults --------------------------------------------------------


def _data(name: str) -> str:
    return resources.files("cbam.data").joinpath(name).read_text(encoding="utf-8")


def default_prices() -> CarbonPriceTable:
    return load_price_table(_data("prices.csv"))


def default_intensities() -> IntensityDefaults:
    return load_intensity_defaults(_data("intensity_defaults.csv"))


def default_exemptions() -> frozenset[str]:
    return load_exemptions(json.loads(_data("exemptions.json")))


__all__ = [
    "EFTA",
    "EU_MEMBERS",
    "CarbonPriceTable",
    "GoodSpec",
    "GoodsRegistry",
    "IntensityDefaults",
    "carbon_price",
    "default_intensity",
    "load_registry",
    "topological_order",
]
