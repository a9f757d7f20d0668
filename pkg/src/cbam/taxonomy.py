"""CN code parsing, Annex-I coverage and sector lookup.

CN codes are hierarchical: every 2-digit chapter contains 4-digit
headings, which contain 6-digit subheadings and 8-digit CN lines.  A
shorter code therefore denotes the whole family of longer codes that
start with it, and every lookup here is a prefix match.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Mapping

from cbam.errors import ParseError

VALID_LENGTHS = (2, 4, 6, 8)


class CnCode(str):
    """A normalized CN code: 2, 4, 6 or 8 decimal digits, no spaces."""

    def __new__(cls, text: str) -> "CnCode":
        if isinstance(text, CnCode):
            return text
        return super().__new__(cls, _normalize(text))

    def covers(self, other: str) -> bool:
        """True if `other` is this code or one of its descendants."""
        return other.startswith(self)

    def ancestors(self) -> list["CnCode"]:
        """All prefixes of valid length, shortest first, including self."""
        return [CnCode(self[:n]) for n in VALID_LENGTHS if n <= len(self)]


def _normalize(text: str) -> str:
    if not isinstance(text, str):
        raise ParseError(f"CN code must be a string, got {text!r}")
    digits = "".join(text.split())
    if not digits.isascii() or not digits.isdigit():
        raise ParseError(f"CN code {text!r} contains non-digit characters")
    if len(digits) not in VALID_LENGTHS:
        raise ParseError(f"CN code {text!r} has {len(digits)} digits; expected 2, 4, 6 or 8")
    return digits


def parse_cn(text: str) -> CnCode:
    return CnCode(text)


class Sector(str, Enum):
    CEMENT = "Cement"
    ELECTRICITY = "Electricity"
    FERTILIZERS = "Fertilizers"
    IRON_STEEL = "IronSteel"
    ALUMINIUM = "Aluminium"
    OTHER = "Other"

    @classmethod
    def parse(cls, text: str) -> "Sector":
        try:
            return cls(text.strip())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ParseError(f"unknown sector {text!r}; expected one of {names}") from None


@dataclass(frozen=True)
class AnnexList:
    """Set of CN prefixes in scope.  No entry may be a prefix of another."""

    entries: tuple[CnCode, ...]
    name: str = "annex"
    _lookup: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        entries = tuple(CnCode(e) for e in self.entries)
        if not entries:
            raise ParseError(f"annex list {self.name!r} is empty")
        seen: set[str] = set()
        for e in entries:
            if e in seen:
                raise ParseError(f"annex list {self.name!r} repeats entry {e}")
            seen.add(e)
        for e in entries:
            for shorter in e.ancestors()[:-1]:
                if shorter in seen:
                    raise ParseError(
                        f"annex list {self.name!r}: entry {e} is redundant under {shorter}"
                    )
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_lookup", frozenset(entries))

    def __contains__(self, code: object) -> bool:
        return isinstance(code, str) and is_covered(CnCode(code), self)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def is_covered(code: CnCode, annex: AnnexList) -> bool:
    lookup = annex._lookup
    for n in VALID_LENGTHS:
        if n > len(code):
            break
        if code[:n] in lookup:
            return True
    return False


SectorMap = Mapping[str, Sector]


def sector_of(code: CnCode, sector_map: SectorMap) -> Sector:
    """Sector of the longest mapped prefix of `code`, else Other."""
    for n in reversed(VALID_LENGTHS):
        if n <= len(code):
            hit = sector_map.get(code[:n])
            if hit is not None:
                return hit
    return Sector.OTHER


@dataclass(frozen=True)
class Taxonomy:
    annex: AnnexList
    sectors: Mapping[str, Sector]

    def classify(self, code: CnCode) -> tuple[bool, Sector]:
        return is_covered(code, self.annex), sector_of(code, self.sectors)


def load_taxonomy(doc: Mapping, name: str = "annex") -> Taxonomy:
    """Build a Taxonomy from ``{"annex": [...], "sectors": {code: sector}}``."""
    if not isinstance(doc, Mapping) or "annex" not in doc:
        raise ParseError("taxonomy document needs an 'annex' array")
    annex_raw = doc["annex"]
    if not isinstance(annex_raw, list):
        raise ParseError("'annex' must be an array of CN codes")
    annex = AnnexList(tuple(parse_cn(e) for e in annex_raw), name=doc.get("name", name))
    sectors_raw = doc.get("sectors", {})
    if not isinstance(sectors_raw, Mapping):
        raise ParseError("'sectors' must be an object mapping CN prefixes to sectors")
    sectors = {parse_cn(k): Sector.parse(v) for k, v in sectors_raw.items()}
    return Taxonomy(annex, sectors)


def default_taxonomy() -> Taxonomy:
    text = resources.files("cbam.data").joinpath("annex.json").read_text(encoding="utf-8")
    return load_taxonomy(json.loads(text), name="default")
