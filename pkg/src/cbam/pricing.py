"""Certificate obligations for import declarations.

The per-tonne border rate is the carbon price gap between the EU and the
country of origin times the product's emission intensity, clamped at zero.
Certificates owed scale with the share of free allowances already phased
out in the declaration year.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from cbam.emissions import Boundary, embedded_intensity, intensity_table
from cbam.errors import CbamError, NegativeQuantity, ParseError, UnitMismatch, UnknownGood
from cbam.registry import (
    TONNE,
    CarbonPriceTable,
    GoodSpec,
    GoodsRegistry,
    IntensityDefaults,
    default_exemptions,
    default_intensities,
    default_intensity,
    default_prices,
    empty_registry,
    price_in_force,
)
from cbam.taxonomy import CnCode, Sector, Taxonomy, default_taxonomy, is_covered, parse_cn, sector_of

NOTE_NO_SCHEME = "no-scheme default price"
NOTE_CLAMPED = "negative differential clamped"
NOTE_BETA_DECLARED = "beta: declared"
NOTE_BETA_EMBEDDED = "beta: embedded"
NOTE_BETA_DEFAULT = "beta: default"
NOTE_FOREIGN_PAID = "foreign price: declared"


@dataclass(frozen=True)
class PhaseSchedule:
    transitional_start: int = 2023
    levy_start: int = 2026
    full_year: int = 2035

    def __post_init__(self) -> None:
        if not self.transitional_start < self.levy_start <= self.full_year:
            raise ValueError(
                "phase schedule needs transitional_start < levy_start <= full_year, got "
                f"{self.transitional_start}/{self.levy_start}/{self.full_year}"
            )


def phase_factor(schedule: PhaseSchedule, year: int) -> float:
    """Share of embedded emissions that must be covered by certificates.

    Rises linearly from 1/n in ``levy_start`` to 1 in ``full_year``, with
    n the number of years in that range.
    """
    if year < schedule.levy_start:
        return 0.0
    if year > schedule.full_year:
        return 1.0
    span = schedule.full_year - schedule.levy_start + 1
    return (year - schedule.levy_start + 1) / span


def cbam_rate(cp_eu: float, cp_i: float, beta: float) -> float:
    """EUR per tonne of product: ``max(0, cp_eu - cp_i) * beta``."""
    return max(0.0, cp_eu - cp_i) * beta


class Status(str, Enum):
    EXEMPT = "Exempt"
    TRANSITIONAL = "TransitionalReportOnly"
    PRICED = "Priced"
    NOT_COVERED = "NotCovered"


@dataclass(frozen=True)
class ImportDeclaration:
    id: str
    date: dt.date
    origin: str
    good: str  # registry id, or a bare CN code
    quantity: float  # tonnes
    declared_intensity: Optional[float] = None
    foreign_price_paid: Optional[float] = None


@dataclass(frozen=True)
class Obligation:
    declaration_id: str
    status: Status
    origin: str
    good: str
    sector: Sector
    year: int
    quantity: float
    certificates: float
    unit_rate: float
    cost: float
    phase_factor: float
    beta: Optional[float] = None
    embedded_tco2e: float = 0.0
    cp_eu: float = 0.0
    cp_i: float = 0.0
    price_differential: float = 0.0
    notes: tuple[str, ...] = ()


@dataclass
class AssessmentContext:
    """Everything `assess` needs besides the declaration itself."""

    registry: GoodsRegistry = field(default_factory=empty_registry)
    prices: CarbonPriceTable = field(default_factory=default_prices)
    defaults: IntensityDefaults = field(default_factory=default_intensities)
    exemptions: frozenset[str] = field(default_factory=default_exemptions)
    taxonomy: Taxonomy = field(default_factory=default_taxonomy)
    boundary: Optional[Boundary] = None
    schedule: PhaseSchedule = field(default_factory=PhaseSchedule)
    _goods: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _embedded: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.boundary is None:
            self.boundary = Boundary(self.taxonomy.annex)

    def resolve(self, good: str) -> tuple[CnCode, Sector, bool, Optional[GoodSpec]]:
        """(cn code, sector, annex-covered, registry entry or None)."""
        hit = self._goods.get(good)
        if hit is None:
            spec = self.registry.goods.get(good)
            if spec is not None:
                code = spec.cn_code
            else:
                try:
                    code = parse_cn(good)
                except ParseError:
                    raise UnknownGood(good) from None
            hit = (
                code,
                sector_of(code, self.taxonomy.sectors),
                is_covered(code, self.taxonomy.annex),
                spec,
            )
            self._goods[good] = hit
        return hit

    def embedded(self, good_id: str) -> float:
        value = self._embedded.get(good_id)
        if value is None:
            if self.boundary.max_depth is None:
                value = intensity_table(self.registry, self.boundary)[good_id]
            else:
                value = embedded_intensity(self.registry, good_id, self.boundary).intensity
            self._embedded[good_id] = value
        return value


def _check_nonneg(value: Optional[float], what: str) -> None:
    if value is not None and not value >= 0:
        raise NegativeQuantity(f"{what} must be >= 0, got {value}")


def resolve_beta(
    decl: ImportDeclaration, ctx: AssessmentContext, sector: Sector, spec: Optional[GoodSpec]
) -> tuple[float, str]:
    """Intensity precedence: declared, then registry BOM, then sector default."""
    if decl.declared_intensity is not None:
        return decl.declared_intensity, NOTE_BETA_DECLARED
    if spec is not None and spec.inputs:
        return ctx.embedded(spec.id), NOTE_BETA_EMBEDDED
    return default_intensity(ctx.defaults, decl.origin, sector, TONNE), NOTE_BETA_DEFAULT


def certificates_owed(quantity: float, beta: float, factor: float) -> float:
    # Free allowances still granted reduce the emissions owed, not the price.
    return quantity * beta * factor


def assess(decl: ImportDeclaration, ctx: AssessmentContext) -> Obligation:
    _check_nonneg(decl.quantity, "quantity")
    _check_nonneg(decl.declared_intensity, "declared_intensity")
    _check_nonneg(decl.foreign_price_paid, "foreign_price_paid")

    year = decl.date.year
    exempt = decl.origin in ctx.exemptions
    try:
        _, sector, covered, spec = ctx.resolve(decl.good)
    except UnknownGood:
        if not exempt:
            raise
        sector, covered, spec = Sector.OTHER, False, None
    if not exempt and (
        (spec is not None and spec.unit != TONNE) or (spec is None and sector is Sector.ELECTRICITY)
    ):
        raise UnitMismatch(f"good {decl.good!r} is not measured in tonnes")
    factor = phase_factor(ctx.schedule, year)
    base = dict(
        declaration_id=decl.id,
        origin=decl.origin,
        good=decl.good,
        sector=sector,
        year=year,
        quantity=decl.quantity,
        phase_factor=factor,
    )
    zero = dict(certificates=0.0, unit_rate=0.0, cost=0.0)

    if exempt:
        return Obligation(status=Status.EXEMPT, **base, **zero)
    if not covered:
        return Obligation(status=Status.NOT_COVERED, **base, **zero)

    beta, beta_note = resolve_beta(decl, ctx, sector, spec)
    notes = [beta_note]
    embedded = decl.quantity * beta
    cp_eu = ctx.prices.eu_price(decl.date)
    if decl.foreign_price_paid is not None:
        cp_i = decl.foreign_price_paid
        notes.append(NOTE_FOREIGN_PAID)
    else:
        cp_i = price_in_force(ctx.prices, decl.origin, decl.date)
        if cp_i is None:
            cp_i = 0.0
            notes.append(NOTE_NO_SCHEME)
    if cp_i > cp_eu:
        notes.append(NOTE_CLAMPED)
    differential = max(0.0, cp_eu - cp_i)
    priced = dict(
        beta=beta,
        embedded_tco2e=embedded,
        cp_eu=cp_eu,
        cp_i=cp_i,
        price_differential=differential,
    )

    if year < ctx.schedule.levy_start:
        return Obligation(status=Status.TRANSITIONAL, **base, **zero, **priced, notes=tuple(notes))

    certificates = certificates_owed(decl.quantity, beta, factor)
    return Obligation(
        status=Status.PRICED,
        **base,
        certificates=certificates,
        unit_rate=cbam_rate(cp_eu, cp_i, beta),
        cost=certificates * differential,
        **priced,
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class RowError:
    index: int  # 1-based position in the input (line number when read from CSV)
    declaration_id: str
    code: str
    message: str


@dataclass(frozen=True)
class Aggregate:
    origin: str
    sector: Sector
    declarations: int
    embedded_tco2e: float
    ln_embedded: Optional[float]  # natural log of embedded_tco2e, None unless > 0
    certificates: float
    cost: float


@dataclass(frozen=True)
class BatchResult:
    obligations: list[Obligation]
    aggregates: list[Aggregate]
    errors: list[RowError]


def aggregate(obligations: Iterable[Obligation]) -> list[Aggregate]:
    """Per (origin, sector) totals, sorted by key.  Sums use math.fsum so the
    result does not depend on row order."""
    groups: dict[tuple[str, Sector], list[Obligation]] = {}
    for ob in obligations:
        groups.setdefault((ob.origin, ob.sector), []).append(ob)
    out = []
    for (origin, sector) in sorted(groups, key=lambda k: (k[0], k[1].value)):
        rows = groups[(origin, sector)]
        embedded = math.fsum(r.embedded_tco2e for r in rows)
        out.append(
            Aggregate(
                origin=origin,
                sector=sector,
                declarations=len(rows),
                embedded_tco2e=embedded,
                ln_embedded=math.log(embedded) if embedded > 0 else None,
                certificates=math.fsum(r.certificates for r in rows),
                cost=math.fsum(r.cost for r in rows),
            )
        )
    return out


def assess_batch(
    decls: Sequence[ImportDeclaration],
    ctx: AssessmentContext,
    lines: Optional[Sequence[int]] = None,
) -> BatchResult:
    """Assess every declaration in order; failures become RowErrors.

    `lines` gives the position reported for each row's error (defaults to
    1-based index).
    """
    obligations: list[Obligation] = []
    errors: list[RowError] = []
    if lines is None:
        lines = range(1, len(decls) + 1)
    for i, decl in zip(lines, decls):
        try:
            obligations.append(assess(decl, ctx))
        except CbamError as exc:
            errors.append(RowError(i, decl.id, type(exc).__name__, str(exc)))
    return BatchResult(obligations, aggregate(obligations), errors)
