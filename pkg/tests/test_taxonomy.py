import itertools

import pytest
from hypothesis import given, strategies as st

from cbam.errors import ParseError
from cbam.taxonomy import (
    AnnexList,
    CnCode,
    Sector,
    is_covered,
    load_taxonomy,
    parse_cn,
    sector_of,
)

from conftest import SAMPLE_ANNEX

codes = st.sampled_from([2, 4, 6, 8]).flatmap(
    lambda n: st.text(alphabet="0123456789", min_size=n, max_size=n)
)


@pytest.mark.parametrize(
    "raw, expected",
    [("2523 21 00", "25232100"), ("7607", "7607"), ("73 05", "7305"), ("3105 20", "310520"), (" 72 ", "72")],
)
def test_parse_cn_normalizes(raw, expected):
    assert parse_cn(raw) == expected


@pytest.mark.parametrize("raw", ["25232", "", "7", "123456789", "76O7", "７６０７", "25-23", "1e10"])
def test_parse_cn_rejects(raw):
    with pytest.raises(ParseError) as exc:
        parse_cn(raw)
    assert repr(raw) in str(exc.value)


@given(codes, st.lists(st.sampled_from([" ", "\t"]), max_size=3))
def test_parse_idempotent(code, spaces):
    spaced = "".join(spaces) + code[:2] + "".join(spaces) + code[2:]
    once = parse_cn(spaced)
    assert once == code
    assert parse_cn(once) == once


def test_is_covered_examples():
    assert is_covered(parse_cn("73051100"), AnnexList(("7305",)))
    assert is_covered(parse_cn("7305"), AnnexList(("7305",)))
    assert not is_covered(parse_cn("48010000"), SAMPLE_ANNEX)
    # a shorter code is not covered by a more specific entry
    assert not is_covered(parse_cn("73"), AnnexList(("7305",)))


def brute_covered(code, annex):
    return any(code[: len(e)] == e for e in annex.entries)


@given(codes, st.lists(codes, min_size=1, max_size=6, unique=True))
def test_is_covered_matches_brute_force(code, entries):
    # drop redundant entries so the annex is valid
    kept = [e for e in entries if not any(o != e and e.startswith(o) for o in entries)]
    annex = AnnexList(tuple(kept))
    assert is_covered(CnCode(code), annex) == brute_covered(code, annex)


@given(codes, st.text(alphabet="0123456789", max_size=6))
def test_prefix_monotonicity(code, suffix):
    annex = AnnexList((code,))
    child = code + suffix
    if len(child) in (2, 4, 6, 8):
        assert is_covered(CnCode(child), annex)


def test_annex_rejects_redundant_and_empty():
    with pytest.raises(ParseError):
        AnnexList(("76", "7607"))
    with pytest.raises(ParseError):
        AnnexList(())
    with pytest.raises(ParseError):
        AnnexList(("7305", "7305"))


def test_sector_of_examples(taxonomy):
    assert sector_of(parse_cn("25232100"), taxonomy.sectors) is Sector.CEMENT
    assert sector_of(parse_cn("7607"), taxonomy.sectors) is Sector.ALUMINIUM
    assert sector_of(parse_cn("99999999"), taxonomy.sectors) is Sector.OTHER


def test_sector_longest_prefix_wins():
    smap = {"73": Sector.IRON_STEEL, "7326": Sector.OTHER, "732690": Sector.ALUMINIUM}
    assert sector_of(parse_cn("73051100"), smap) is Sector.IRON_STEEL
    assert sector_of(parse_cn("73269010"), smap) is Sector.ALUMINIUM
    assert sector_of(parse_cn("73261100"), smap) is Sector.OTHER


def test_sector_of_exhaustive_against_brute_force():
    # every 4-digit code built from a small alphabet, every subset-shaped map
    smap = {"12": Sector.CEMENT, "1234": Sector.FERTILIZERS, "123456": Sector.ALUMINIUM, "34": Sector.IRON_STEEL}
    for digits in itertools.product("1234", repeat=8):
        code = "".join(digits)
        for n in (2, 4, 6, 8):
            c = CnCode(code[:n])
            matches = [k for k in smap if c.startswith(k)]
            expected = smap[max(matches, key=len)] if matches else Sector.OTHER
            assert sector_of(c, smap) is expected


def test_default_taxonomy(taxonomy):
    assert set(taxonomy.annex.entries) == {"2523", "2716", "2808", "2814", "3102", "310520", "72", "73", "76"}
    assert taxonomy.classify(parse_cn("76070000")) == (True, Sector.ALUMINIUM)
    assert taxonomy.classify(parse_cn("2716")) == (True, Sector.ELECTRICITY)


def test_load_taxonomy_errors():
    with pytest.raises(ParseError):
        load_taxonomy({"sectors": {}})
    with pytest.raises(ParseError):
        load_taxonomy({"annex": ["7305"], "sectors": {"7305": "Steel"}})
    tax = load_taxonomy({"annex": ["7305"], "sectors": {"73": "IronSteel"}})
    assert tax.sectors == {"73": Sector.IRON_STEEL}
