"""Run reports: assembly, fixed-width text rendering, JSON round-trip."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from decimal import ROUND_HALF_EVEN, Context, Decimal
from typing import Iterable, Optional, Sequence

from cbam.pricing import Aggregate, BatchResult, Obligation, RowError, Status
from cbam.taxonomy import Sector

_CENT = Decimal("0.01")
_MICRO = Decimal("0.000001")
# wide enough for any finite double at 6 decimals
_CTX = Context(prec=400, rounding=ROUND_HALF_EVEN)


def _fixed(x: float, quantum: Decimal) -> str:
    q = Decimal(repr(float(x))).quantize(quantum, context=_CTX)
    if q == 0:
        q = abs(q)
    return str(q)


def fmt_eur(x: float) -> str:
    """EUR amount, 2 decimals, half-even on the shortest decimal repr."""
    return _fixed(x, _CENT)


def fmt_t(x: Optional[float]) -> str:
    """tCO2e (or tCO2e/t) amount, 6 decimals; '-' when absent."""
    return "-" if x is None else _fixed(x, _MICRO)


@dataclass
class RunReport:
    rows: list[Obligation] = field(default_factory=list)
    aggregates: list[Aggregate] = field(default_factory=list)
    summary: dict[str, int] = field(default_factory=dict)
    errors: list[RowError] = field(default_factory=list)

    @classmethod
    def from_batch(cls, batch: BatchResult, diagnostics: Iterable[RowError] = ()) -> "RunReport":
        errors = sorted([*diagnostics, *batch.errors], key=lambda e: e.index)
        return cls(
            rows=list(batch.obligations),
            aggregates=list(batch.aggregates),
            summary=summarize(batch.obligations, len(errors)),
            errors=errors,
        )


def summarize(obligations: Sequence[Obligation], n_errors: int) -> dict[str, int]:
    counts = {s.value: 0 for s in Status}
    for ob in obligations:
        counts[ob.status.value] += 1
    counts["Error"] = n_errors
    return counts


# -- JSON -------------------------------------------------------------------


def _flat(obj) -> dict:
    # shallow; dataclasses.asdict deep-copies every field and is ~10x slower
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def report_to_dict(report: RunReport) -> dict:
    rows = []
    for ob in report.rows:
        d = _flat(ob)
        d["status"] = ob.status.value
        d["sector"] = ob.sector.value
        d["notes"] = list(ob.notes)
        rows.append(d)
    aggregates = []
    for ag in report.aggregates:
        d = _flat(ag)
        d["sector"] = ag.sector.value
        aggregates.append(d)
    return {
        "rows": rows,
        "aggregates": aggregates,
        "summary": dict(report.summary),
        "errors": [_flat(e) for e in report.errors],
    }


def report_from_dict(doc: dict) -> RunReport:
    rows = [
        Obligation(
            **{
                **d,
                "status": Status(d["status"]),
                "sector": Sector(d["sector"]),
                "notes": tuple(d["notes"]),
            }
        )
        for d in doc["rows"]
    ]
    aggregates = [Aggregate(**{**d, "sector": Sector(d["sector"])}) for d in doc["aggregates"]]
    errors = [RowError(**d) for d in doc["errors"]]
    return RunReport(rows, aggregates, dict(doc["summary"]), errors)


def render_json(report: RunReport) -> str:
    """One JSON document, one list element per line."""
    doc = report_to_dict(report)
    dump = json.JSONEncoder(allow_nan=False, ensure_ascii=False).encode
    parts = []
    for key, value in doc.items():
        if isinstance(value, list) and value:
            body = "[\n" + ",\n".join(dump(v) for v in value) + "\n]"
        else:
            body = dump(value)
        parts.append(f"{dump(key)}: {body}")
    return "{\n" + ",\n".join(parts) + "\n}\n"


def parse_report(text: str) -> RunReport:
    return report_from_dict(json.loads(text))


# -- text -------------------------------------------------------------------


def table(headers: Sequence[str], rows: Sequence[Sequence[str]], right: set[int]) -> list[str]:
    """Fixed-width table; columns in `right` are right-aligned."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))

    def line(cells: Sequence[str]) -> str:
        parts = [c.rjust(w) if i in right else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths))]
        return "  ".join(parts).rstrip()

    out = [line(headers), "  ".join("-" * w for w in widths)]
    out.extend(line(r) for r in rows)
    return out


ROW_HEADERS = (
    "id", "status", "origin", "sector", "good", "year", "beta_t", "embedded_t",
    "phase", "certificates_t", "cp_eu", "cp_i", "cost_eur", "notes",
)
AGG_HEADERS = ("origin", "sector", "n", "embedded_t", "ln_embedded", "certificates_t", "cost_eur")


def render_text(report: RunReport) -> str:
    rows = [
        (
            ob.declaration_id, ob.status.value, ob.origin, ob.sector.value, ob.good, str(ob.year),
            fmt_t(ob.beta), fmt_t(ob.embedded_tco2e), fmt_t(ob.phase_factor), fmt_t(ob.certificates),
            fmt_eur(ob.cp_eu), fmt_eur(ob.cp_i), fmt_eur(ob.cost), "; ".join(ob.notes),
        )
        for ob in report.rows
    ]
    aggs = [
        (
            ag.origin, ag.sector.value, str(ag.declarations), fmt_t(ag.embedded_tco2e),
            fmt_t(ag.ln_embedded), fmt_t(ag.certificates), fmt_eur(ag.cost),
        )
        for ag in report.aggregates
    ]
    lines = ["DECLARATIONS"]
    lines += table(ROW_HEADERS, rows, right=set(range(5, 13)))
    lines += ["", "AGGREGATES"]
    lines += table(AGG_HEADERS, aggs, right=set(range(2, 7)))
    lines += ["", "SUMMARY"]
    lines += [f"{k}: {v}" for k, v in report.summary.items()]
    if report.errors:
        lines += ["", "ERRORS"]
        errs = [(str(e.index), e.declaration_id, e.code, e.message) for e in report.errors]
        lines += table(("line", "id", "code", "message"), errs, right={0})
    return "\n".join(lines) + "\n"


def render_report(report: RunReport, fmt: str = "text") -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown format {fmt!r}")
