"""Circumvention monitoring over monthly trade flows.

The pattern of interest: exports of an Annex-I good from a country drop
while exports of a non-Annex downstream good that uses it as an input rise
over the same window.  Each series is compared window-on-window by mean.
"""

from __future__ import annotations

import re
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Optional

from cbam.errors import BaselineTooSmall, InsufficientHistory, NegativeQuantity, ParseError
from cbam.registry import GoodsRegistry
from cbam.taxonomy import AnnexList, CnCode, is_covered

_MONTH = re.compile(r"(\d{4})-(\d{2})")


def parse_month(text: str) -> int:
    """``YYYY-MM`` to a month ordinal (``year * 12 + month - 1``)."""
    m = _MONTH.fullmatch(text.strip())
    if not m or not 1 <= int(m.group(2)) <= 12:
        raise ParseError(f"bad month {text!r}; expected YYYY-MM")
    return int(m.group(1)) * 12 + int(m.group(2)) - 1


def format_month(ordinal: int) -> str:
    year, month0 = divmod(ordinal, 12)
    return f"{year:04d}-{month0 + 1:02d}"


@dataclass(frozen=True)
class TradeFlowSeries:
    country: str
    cn_code: CnCode
    points: tuple[tuple[int, float], ...]  # (month ordinal, tonnes)

    def __post_init__(self) -> None:
        months = [m for m, _ in self.points]
        if any(a >= b for a, b in zip(months, months[1:])):
            raise ParseError(f"series {self.country}/{self.cn_code}: months must strictly increase")
        for m, q in self.points:
            if not q >= 0:
                raise NegativeQuantity(
                    f"series {self.country}/{self.cn_code}: quantity {q} in {format_month(m)}"
                )

    @classmethod
    def from_pairs(cls, country: str, cn_code: str, pairs: Iterable[tuple[str, float]]):
        return cls(country, CnCode(cn_code), tuple((parse_month(m), float(q)) for m, q in pairs))

    @property
    def months(self) -> list[int]:
        return [m for m, _ in self.points]

    def scaled(self, k: float) -> "TradeFlowSeries":
        return TradeFlowSeries(self.country, self.cn_code, tuple((m, q * k) for m, q in self.points))


@dataclass(frozen=True)
class SurveillanceParams:
    window_months: int = 6
    theta_dec: float = 0.30
    theta_inc: float = 0.30
    min_baseline: float = 1.0

    def __post_init__(self) -> None:
        if not (isinstance(self.window_months, int) and self.window_months > 0):
            raise ValueError(f"window_months must be a positive integer, got {self.window_months!r}")
        for name in ("theta_dec", "theta_inc"):
            value = getattr(self, name)
            if not 0 < value <= 10:
                raise ValueError(f"{name} must lie in (0, 10], got {value!r}")
        if not self.min_baseline > 0:
            raise ValueError(f"min_baseline must be positive, got {self.min_baseline!r}")


@dataclass(frozen=True)
class CircumventionAlert:
    country: str
    annex_code: CnCode
    downstream_code: CnCode
    window: tuple[str, str]
    delta_annex: float
    delta_downstream: float
    score: float


def relative_shift(
    series: TradeFlowSeries, window_months: int, at: int, min_baseline: float = 1.0
) -> float:
    """Mean of the last `window_months` months up to `at`, relative to the
    mean of the window before it.  Both windows must be fully populated."""
    by_month = dict(series.points)
    span = range(at - 2 * window_months + 1, at + 1)
    missing = [m for m in span if m not in by_month]
    if missing:
        raise InsufficientHistory(
            f"{series.country}/{series.cn_code}: no data for {format_month(missing[0])} "
            f"({len(missing)} of {2 * window_months} months missing)"
        )
    values = [by_month[m] for m in span]
    baseline = statistics.fmean(values[:window_months])
    recent = statistics.fmean(values[window_months:])
    if baseline < min_baseline:
        raise BaselineTooSmall(
            f"{series.country}/{series.cn_code}: baseline mean {baseline} below {min_baseline}"
        )
    return (recent - baseline) / baseline


def detect_pair(
    annex_series: TradeFlowSeries,
    downstream_series: TradeFlowSeries,
    params: SurveillanceParams,
    at: int,
) -> Optional[CircumventionAlert]:
    w = params.window_months
    delta_a = relative_shift(annex_series, w, at, params.min_baseline)
    delta_d = relative_shift(downstream_series, w, at, params.min_baseline)
    if delta_a <= -params.theta_dec and delta_d >= params.theta_inc:
        return CircumventionAlert(
            country=annex_series.country,
            annex_code=annex_series.cn_code,
            downstream_code=downstream_series.cn_code,
            window=(format_month(at - 2 * w + 1), format_month(at)),
            delta_annex=delta_a,
            delta_downstream=delta_d,
            score=min(-delta_a, delta_d),
        )
    return None


def transitive_inputs(registry: GoodsRegistry) -> dict[str, frozenset[str]]:
    """Every good's transitive inputs (itself excluded), via topological order."""
    reach: dict[str, frozenset[str]] = {}
    for gid in registry.order:
        acc: set[str] = set()
        for input_id, _ in registry[gid].inputs:
            acc.add(input_id)
            acc |= reach[input_id]
        reach[gid] = frozenset(acc)
    return reach


def candidate_pairs(
    flows: Iterable[TradeFlowSeries], registry: GoodsRegistry, annex: AnnexList
) -> list[tuple[TradeFlowSeries, TradeFlowSeries]]:
    """(annex series, downstream series) pairs worth testing, same country.

    A downstream series qualifies when its code is not covered and some
    registry good under its code transitively consumes a good under the
    annex series' code.
    """
    reach = transitive_inputs(registry)
    goods = registry.goods
    by_country: dict[str, list[TradeFlowSeries]] = {}
    for s in flows:
        by_country.setdefault(s.country, []).append(s)

    pairs = []
    for country in sorted(by_country):
        series = sorted(by_country[country], key=lambda s: s.cn_code)
        covered = [s for s in series if is_covered(s.cn_code, annex)]
        uncovered = [s for s in series if not is_covered(s.cn_code, annex)]
        for d in uncovered:
            input_codes = {
                goods[i].cn_code
                for gid, g in goods.items()
                if g.cn_code.startswith(d.cn_code)
                for i in reach[gid]
            }
            for a in covered:
                if any(code.startswith(a.cn_code) for code in input_codes):
                    pairs.append((a, d))
    return pairs


@dataclass
class ScanSummary:
    candidates: int = 0
    evaluated: int = 0
    alerts: int = 0
    skipped: dict[str, int] = field(default_factory=dict)


def scan_with_summary(
    flows: Iterable[TradeFlowSeries],
    registry: GoodsRegistry,
    annex: AnnexList,
    params: SurveillanceParams,
) -> tuple[list[CircumventionAlert], ScanSummary]:
    summary = ScanSummary()
    alerts = []
    for a, d in candidate_pairs(flows, registry, annex):
        summary.candidates += 1
        common = set(a.months) & set(d.months)
        if not common:
            summary.skipped["InsufficientHistory"] = summary.skipped.get("InsufficientHistory", 0) + 1
            continue
        try:
            alert = detect_pair(a, d, params, max(common))
        except (InsufficientHistory, BaselineTooSmall) as exc:
            reason = type(exc).__name__
            summary.skipped[reason] = summary.skipped.get(reason, 0) + 1
            continue
        summary.evaluated += 1
        if alert is not None:
            alerts.append(alert)
    alerts.sort(key=lambda al: (-al.score, al.country, al.annex_code, al.downstream_code))
    summary.alerts = len(alerts)
    return alerts, summary


def scan(
    flows: Iterable[TradeFlowSeries],
    registry: GoodsRegistry,
    annex: AnnexList,
    params: SurveillanceParams,
) -> list[CircumventionAlert]:
    return scan_with_summary(flows, registry, annex, params)[0]
