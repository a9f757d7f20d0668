"""Command line entry point.

Exit codes: 0 success, 1 fatal input error, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from cbam.emissions import embedded_intensity
from cbam.errors import CbamError
from cbam.ingest import EngineConfig, build_context, build_taxonomy, load_config, parse_declarations, parse_flows
from cbam.pricing import PhaseSchedule, assess_batch, cbam_rate, phase_factor
from cbam.report import RunReport, fmt_eur, fmt_t, render_report, table
from cbam.surveillance import SurveillanceParams, scan_with_summary
from cbam.taxonomy import is_covered, parse_cn, sector_of

SCHEDULE_YEARS = range(2023, 2037)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a finite number >= 0: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="JSON config (default: $CBAM_CONFIG)")
    g.add_argument("--format", choices=("text", "json"))
    for name in ("registry", "annex", "prices", "defaults", "exemptions"):
        g.add_argument(f"--{name}", type=Path)
    g.add_argument("--transitional-start", type=int)
    g.add_argument("--levy-start", type=int)
    g.add_argument("--full-year", type=int)
    g.add_argument("--include-scope2", action="store_true", default=None)
    g.add_argument("--max-depth", type=int)
    g.add_argument("--window-months", type=int)
    g.add_argument("--theta-dec", type=float)
    g.add_argument("--theta-inc", type=float)
    g.add_argument("--min-baseline", type=float)

    parser = _Parser(prog="cbam", description="Border carbon adjustment assessment engine.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", parents=[common], help="Annex coverage and sector of a CN code")
    p.add_argument("code")
    p = sub.add_parser("emissions", parents=[common], help="embedded intensity breakdown of a good")
    p.add_argument("good")
    p = sub.add_parser("rate", parents=[common], help="per-tonne border rate")
    p.add_argument("--cp-eu", type=_nonneg_float, required=True)
    p.add_argument("--cp-i", type=_nonneg_float, required=True)
    p.add_argument("--beta", type=_nonneg_float, required=True)
    p = sub.add_parser("assess", parents=[common], help="assess a declarations CSV")
    p.add_argument("declarations", type=Path)
    p = sub.add_parser("monitor", parents=[common], help="scan a flows CSV for circumvention")
    p.add_argument("flows", type=Path)
    sub.add_parser("schedule", parents=[common], help="phase factor by year")
    return parser


def resolve_config(args: argparse.Namespace) -> EngineConfig:
    cfg = load_config(args.config)
    for name in ("registry", "annex", "prices", "defaults", "exemptions", "format", "max_depth"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    if args.include_scope2:
        cfg.include_scope2 = True
    try:
        schedule = {
            k: getattr(args, k) for k in ("transitional_start", "levy_start", "full_year")
            if getattr(args, k) is not None
        }
        cfg.schedule = dataclasses.replace(cfg.schedule, **schedule) if schedule else cfg.schedule
        params = {
            k: getattr(args, k) for k in ("window_months", "theta_dec", "theta_inc", "min_baseline")
            if getattr(args, k) is not None
        }
        cfg.surveillance = dataclasses.replace(cfg.surveillance, **params) if params else cfg.surveillance
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg.check()
    return cfg


def _emit(out, fmt: str, text: str, doc) -> None:
    if fmt == "json":
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(text)


def cmd_classify(args, cfg, out, err) -> int:
    taxonomy = build_taxonomy(cfg)
    code = parse_cn(args.code)
    covered = is_covered(code, taxonomy.annex)
    sector = sector_of(code, taxonomy.sectors)
    text = f"{'covered' if covered else 'not covered'}, sector={sector.value}\n"
    _emit(out, cfg.format, text, {"code": code, "covered": covered, "sector": sector.value})
    return 0


def cmd_emissions(args, cfg, out, err) -> int:
    ctx = build_context(cfg)
    res = embedded_intensity(ctx.registry, args.good, ctx.boundary)
    if cfg.format == "json":
        doc = {
            "good": res.good_id,
            "intensity": res.intensity,
            "direct": res.direct,
            "truncated": res.truncated,
            "contributions": [dataclasses.asdict(c) for c in res.contributions],
        }
        _emit(out, "json", "", doc)
        return 0
    rows = [(str(c.depth), c.good_id, fmt_t(c.value)) for c in res.contributions]
    lines = [f"good: {res.good_id}", f"direct: {fmt_t(res.direct)}"]
    lines += table(("depth", "input", "tco2e_per_t"), rows, right={0, 2})
    lines.append(f"embedded intensity: {fmt_t(res.intensity)} tCO2e/t")
    if res.truncated:
        lines.append(f"truncated at depth {ctx.boundary.max_depth}")
    out.write("\n".join(lines) + "\n")
    return 0


def cmd_rate(args, cfg, out, err) -> int:
    rate = cbam_rate(args.cp_eu, args.cp_i, args.beta)
    _emit(out, cfg.format, fmt_eur(rate) + "\n", {"rate_eur_per_t": rate})
    return 0


def cmd_assess(args, cfg, out, err) -> int:
    ctx = build_context(cfg)
    with open(args.declarations, encoding="utf-8", newline="") as fh:
        parsed = parse_declarations(fh)
    batch = assess_batch(parsed.declarations, ctx, parsed.lines)
    report = RunReport.from_batch(batch, parsed.diagnostics)
    out.write(render_report(report, cfg.format))
    err.write(f"{len(report.rows)} declarations assessed, {len(report.errors)} rejected\n")
    return 0


def cmd_monitor(args, cfg, out, err) -> int:
    ctx = build_context(cfg)
    with open(args.flows, encoding="utf-8", newline="") as fh:
        flows = parse_flows(fh)
    alerts, summary = scan_with_summary(flows, ctx.registry, ctx.taxonomy.annex, cfg.surveillance)
    rows = [
        (a.country, a.annex_code, a.downstream_code, f"{a.window[0]}..{a.window[1]}",
         fmt_t(a.delta_annex), fmt_t(a.delta_downstream), fmt_t(a.score))
        for a in alerts
    ]
    lines = table(("country", "annex", "downstream", "window", "d_annex", "d_downstream", "score"),
                  rows, right={4, 5, 6})
    doc = {
        "alerts": [dataclasses.asdict(a) for a in alerts],
        "summary": dataclasses.asdict(summary),
    }
    _emit(out, cfg.format, "\n".join(lines) + "\n", doc)
    skipped = ", ".join(f"{k}={v}" for k, v in sorted(summary.skipped.items())) or "none"
    err.write(f"{summary.candidates} candidate pairs, {summary.alerts} alerts, skipped: {skipped}\n")
    return 0


def cmd_schedule(args, cfg, out, err) -> int:
    s: PhaseSchedule = cfg.schedule
    rows, doc = [], []
    for year in SCHEDULE_YEARS:
        f = phase_factor(s, year)
        stage = (
            "pre-transitional" if year < s.transitional_start
            else "transitional" if year < s.levy_start
            else "phase-in" if year < s.full_year
            else "full"
        )
        rows.append((str(year), f"{f:.6f}", stage))
        doc.append({"year": year, "phase_factor": f, "stage": stage})
    text = "\n".join(table(("year", "phase_factor", "stage"), rows, right={0, 1})) + "\n"
    _emit(out, cfg.format, text, doc)
    return 0


COMMANDS = {
    "classify": cmd_classify,
    "emissions": cmd_emissions,
    "rate": cmd_rate,
    "assess": cmd_assess,
    "monitor": cmd_monitor,
    "schedule": cmd_schedule,
}


def run_cli(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except CbamError as exc:
        err.write(f"error: {exc}\n")
        return 1
    try:
        return COMMANDS[args.command](args, cfg, out, err)
    except (CbamError, OSError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
