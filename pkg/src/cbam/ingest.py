"""Strict file ingestion: declarations CSV, trade flows CSV, engine config.

Declarations are parsed leniently per row (bad rows become diagnostics and
the rest of the file still goes through).  Flows and config are all-or-
nothing: any defect raises.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO

from cbam.emissions import Boundary
from cbam.errors import ConfigError, MissingHeader, ParseError
from cbam.pricing import AssessmentContext, ImportDeclaration, PhaseSchedule, RowError
from cbam.registry import (
    default_exemptions,
    default_intensities,
    default_prices,
    empty_registry,
    load_exemptions,
    load_intensity_defaults,
    load_price_table,
    load_registry,
    parse_country,
)
from cbam.surveillance import SurveillanceParams, TradeFlowSeries, parse_month
from cbam.taxonomy import Taxonomy, default_taxonomy, load_taxonomy, parse_cn

DECLARATION_HEADER = [
    "id",
    "date",
    "origin",
    "good",
    "quantity_t",
    "declared_intensity",
    "foreign_price_eur",
]
FLOW_HEADER = ["country", "cn_code", "month", "quantity_t"]


class _RowProblem(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class ParsedDeclarations:
    declarations: list[ImportDeclaration] = field(default_factory=list)
    lines: list[int] = field(default_factory=list)  # starting line of each declaration
    diagnostics: list[RowError] = field(default_factory=list)

    @property
    def records(self) -> int:
        return len(self.declarations) + len(self.diagnostics)


def _number(text: str, column: str, optional: bool) -> Optional[float]:
    text = text.strip()
    if not text:
        if optional:
            return None
        raise _RowProblem("MissingField", f"{column} is required")
    try:
        value = float(text)
    except ValueError:
        raise _RowProblem("BadNumber", f"{column}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise _RowProblem("BadNumber", f"{column}: must be finite, got {text!r}")
    if value < 0:
        raise _RowProblem("NegativeQuantity", f"{column} must be >= 0, got {text!r}")
    return value


def _declaration(row: list[str]) -> ImportDeclaration:
    if len(row) != len(DECLARATION_HEADER):
        raise _RowProblem(
            "UnknownColumnCount", f"expected {len(DECLARATION_HEADER)} columns, got {len(row)}"
        )
    ident, date, origin, good, qty, declared, foreign = (c.strip() for c in row)
    if not ident:
        raise _RowProblem("MissingField", "id is required")
    try:
        day = dt.date.fromisoformat(date)
    except ValueError:
        raise _RowProblem("BadDate", f"date: expected YYYY-MM-DD, got {date!r}") from None
    try:
        origin = parse_country(origin)
    except ParseError as exc:
        raise _RowProblem("BadCountry", str(exc)) from None
    if not good:
        raise _RowProblem("MissingField", "good is required")
    return ImportDeclaration(
        id=ident,
        date=day,
        origin=origin,
        good=good,
        quantity=_number(qty, "quantity_t", optional=False),
        declared_intensity=_number(declared, "declared_intensity", optional=True),
        foreign_price_paid=_number(foreign, "foreign_price_eur", optional=True),
    )


def parse_declarations(stream: TextIO) -> ParsedDeclarations:
    """Read a declarations CSV.  Raises MissingHeader if the first record is
    absent or not exactly the expected header; every later record becomes
    either a declaration or a diagnostic.  Blank lines are ignored."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader("declarations file is empty") from None
    except csv.Error as exc:
        raise MissingHeader(f"unreadable header: {exc}") from None
    if header and header[0].startswith("\ufeff"):
        header[0] = header[0][1:]
    if [h.strip() for h in header] != DECLARATION_HEADER:
        raise MissingHeader("header must be exactly: " + ",".join(DECLARATION_HEADER))

    out = ParsedDeclarations()
    seen: set[str] = set()
    end = reader.line_num
    while True:
        start = end + 1
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            out.diagnostics.append(RowError(start, "", "MalformedRow", str(exc)))
            if reader.line_num == end:
                break
            end = reader.line_num
            continue
        end = reader.line_num
        if not row:
            continue
        ident = row[0].strip()
        try:
            decl = _declaration(row)
            if decl.id in seen:
                raise _RowProblem("DuplicateId", f"id {decl.id!r} already used")
        except _RowProblem as exc:
            out.diagnostics.append(RowError(start, ident, exc.code, str(exc)))
            continue
        seen.add(decl.id)
        out.declarations.append(decl)
        out.lines.append(start)
    return out


def parse_flows(stream: TextIO) -> list[TradeFlowSeries]:
    """Read a flows CSV into one series per (country, CN code).  Strict."""
    reader = csv.reader(stream)
    try:
        header = next(reader, None)
    except csv.Error as exc:
        raise MissingHeader(f"unreadable header: {exc}") from None
    if header is None:
        raise MissingHeader("flows file is empty")
    if header and header[0].startswith("\ufeff"):
        header[0] = header[0][1:]
    if [h.strip() for h in header] != FLOW_HEADER:
        raise MissingHeader("header must be exactly: " + ",".join(FLOW_HEADER))

    points: dict[tuple[str, str], dict[int, float]] = {}
    try:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(FLOW_HEADER):
                raise ParseError(f"flows line {line}: expected 4 columns, got {len(row)}")
            country, code, month, qty = (c.strip() for c in row)
            try:
                key = (parse_country(country), parse_cn(code))
                m = parse_month(month)
                q = float(qty)
            except ValueError as exc:
                raise ParseError(f"flows line {line}: {exc}") from None
            if not math.isfinite(q) or q < 0:
                raise ParseError(f"flows line {line}: quantity must be a finite number >= 0")
            series = points.setdefault(key, {})
            if m in series:
                raise ParseError(f"flows line {line}: duplicate month {month} for {key[0]}/{key[1]}")
            series[m] = q
    except csv.Error as exc:
        raise ParseError(f"flows line {reader.line_num}: {exc}") from None
    return [
        TradeFlowSeries(country, code, tuple(sorted(series.items())))
        for (country, code), series in sorted(points.items())
    ]


# -- configuration ------------------------------------------------------------

_PATH_KEYS = ("registry", "annex", "prices", "defaults", "exemptions")
_TOP_KEYS = set(_PATH_KEYS) | {"schedule", "boundary", "surveillance", "format"}


@dataclass
class EngineConfig:
    registry: Optional[Path] = None
    annex: Optional[Path] = None
    prices: Optional[Path] = None
    defaults: Optional[Path] = None
    exemptions: Optional[Path] = None
    schedule: PhaseSchedule = field(default_factory=PhaseSchedule)
    include_scope2: bool = False
    max_depth: Optional[int] = None
    surveillance: SurveillanceParams = field(default_factory=SurveillanceParams)
    format: str = "text"

    def check(self) -> None:
        for key in _PATH_KEYS:
            path = getattr(self, key)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{key} file not found: {path}")
        if self.format not in ("text", "json"):
            raise ConfigError(f"format must be 'text' or 'json', got {self.format!r}")


def _section(doc: dict, key: str, allowed: set[str]) -> dict:
    section = doc.get(key, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {key!r} must be an object")
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {key!r}: {', '.join(sorted(extra))}")
    return section


def config_from_dict(doc: dict, base: Path = Path(".")) -> EngineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
    paths = {k: base / doc[k] for k in _PATH_KEYS if doc.get(k) is not None}
    boundary = _section(doc, "boundary", {"include_scope2", "max_depth"})
    try:
        cfg = EngineConfig(
            **paths,
            schedule=PhaseSchedule(**_section(doc, "schedule", {"transitional_start", "levy_start", "full_year"})),
            include_scope2=bool(boundary.get("include_scope2", False)),
            max_depth=boundary.get("max_depth"),
            surveillance=SurveillanceParams(
                **_section(doc, "surveillance", {"window_months", "theta_dec", "theta_inc", "min_baseline"})
            ),
            format=doc.get("format", "text"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    cfg.check()
    return cfg


def load_config(path: Optional[os.PathLike] = None) -> EngineConfig:
    """Load the JSON config at `path`, else $CBAM_CONFIG, else built-in defaults."""
    if path is None:
        path = os.environ.get("CBAM_CONFIG") or None
    if path is None:
        return EngineConfig()
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    return config_from_dict(doc, base=path.parent)


def _read(path: Path) -> str:
    return Path(path).read_text(encoding="utf-8")


def build_taxonomy(cfg: EngineConfig) -> Taxonomy:
    if cfg.annex is None:
        return default_taxonomy()
    return load_taxonomy(json.loads(_read(cfg.annex)), name=Path(cfg.annex).stem)


def build_context(cfg: EngineConfig) -> AssessmentContext:
    taxonomy = build_taxonomy(cfg)
    return AssessmentContext(
        registry=load_registry(json.loads(_read(cfg.registry))) if cfg.registry else empty_registry(),
        prices=load_price_table(_read(cfg.prices)) if cfg.prices else default_prices(),
        defaults=load_intensity_defaults(_read(cfg.defaults)) if cfg.defaults else default_intensities(),
        exemptions=load_exemptions(json.loads(_read(cfg.exemptions))) if cfg.exemptions else default_exemptions(),
        taxonomy=taxonomy,
        boundary=Boundary(taxonomy.annex, cfg.include_scope2, cfg.max_depth),
        schedule=cfg.schedule,
    )
