import random

import pytest
from hypothesis import given, settings, strategies as st

from cbam.emissions import Boundary, embedded_intensity, embedded_total, intensity_table
from cbam.errors import NegativeQuantity, UnitMismatch, UnknownGood
from cbam.registry import default_intensities, load_registry
from cbam.taxonomy import AnnexList, Sector, is_covered

from conftest import foil_doc
from graphs import naive_intensity, random_dag_doc

TOL = 1e-9


def test_foil_boundary_excludes_paper(foil_registry, boundary):
    res = embedded_intensity(foil_registry, "foil", boundary)
    assert res.intensity == pytest.approx(1.25, abs=TOL)
    assert [(c.good_id, c.depth) for c in res.contributions] == [("aluminium", 1)]
    assert not res.truncated


def test_foil_boundary_covering_paper(foil_registry, taxonomy):
    wide = Boundary(AnnexList(taxonomy.annex.entries + ("4801",)))
    res = embedded_intensity(foil_registry, "foil", wide)
    assert res.intensity == pytest.approx(1.26, abs=TOL)


def test_leaf_is_direct(foil_registry, boundary):
    assert embedded_intensity(foil_registry, "paper", boundary).intensity == 0.5
    assert embedded_intensity(foil_registry, "paper", boundary).contributions == ()


def test_unknown_good(foil_registry, boundary):
    with pytest.raises(UnknownGood):
        embedded_intensity(foil_registry, "nope", boundary)


def chain_doc():
    # pipe <- steel <- pig_iron, plus electricity into steel
    return {
        "goods": [
            {"id": "pig_iron", "cn_code": "7201", "direct_intensity": 1.5},
            {"id": "power", "cn_code": "2716", "direct_intensity": 0.4, "unit": "MWh"},
            {"id": "steel", "cn_code": "7208", "direct_intensity": 0.3,
             "inputs": [{"id": "pig_iron", "qty": 1.1}, {"id": "power", "qty": 2.0}]},
            {"id": "pipe", "cn_code": "7305", "direct_intensity": 0.1, "inputs": [{"id": "steel", "qty": 1.02}]},
        ]
    }


def test_scope2_switch(boundary, taxonomy):
    reg = load_registry(chain_doc())
    base = 0.1 + 1.02 * (0.3 + 1.1 * 1.5)
    assert embedded_intensity(reg, "pipe", boundary).intensity == pytest.approx(base, abs=TOL)
    with_power = Boundary(taxonomy.annex, include_scope2=True)
    assert embedded_intensity(reg, "pipe", with_power).intensity == pytest.approx(base + 1.02 * 2.0 * 0.4, abs=TOL)


def test_electricity_root_unit_mismatch(boundary):
    reg = load_registry(chain_doc())
    with pytest.raises(UnitMismatch):
        embedded_intensity(reg, "power", boundary)
    assert embedded_intensity(reg, "power", boundary, basis="MWh").intensity == 0.4


def test_max_depth_truncates(taxonomy):
    reg = load_registry(chain_doc())
    shallow = Boundary(taxonomy.annex, max_depth=1)
    res = embedded_intensity(reg, "pipe", shallow)
    assert res.truncated
    assert res.intensity == pytest.approx(0.1 + 1.02 * 0.3, abs=TOL)
    deep = embedded_intensity(reg, "pipe", Boundary(taxonomy.annex, max_depth=2))
    assert not deep.truncated
    assert deep.intensity == pytest.approx(embedded_intensity(reg, "pipe", Boundary(taxonomy.annex)).intensity, abs=TOL)


def test_max_depth_validation(taxonomy):
    with pytest.raises(ValueError):
        Boundary(taxonomy.annex, max_depth=0)


def test_diamond_counts_both_paths(boundary):
    doc = {
        "goods": [
            {"id": "ore", "cn_code": "7201", "direct_intensity": 2.0},
            {"id": "a", "cn_code": "7208", "direct_intensity": 0.0, "inputs": [{"id": "ore", "qty": 1.0}]},
            {"id": "b", "cn_code": "7209", "direct_intensity": 0.0, "inputs": [{"id": "ore", "qty": 0.5}]},
            {"id": "top", "cn_code": "7305", "direct_intensity": 0.0,
             "inputs": [{"id": "a", "qty": 1.0}, {"id": "b", "qty": 2.0}, {"id": "ore", "qty": 1.0}]},
        ]
    }
    res = embedded_intensity(load_registry(doc), "top", boundary)
    assert res.intensity == pytest.approx(2.0 + 2.0 + 2.0, abs=TOL)
    by = {(c.good_id, c.depth): c.value for c in res.contributions}
    assert by[("ore", 1)] == pytest.approx(2.0)
    assert by[("ore", 2)] == pytest.approx(4.0)


ANNEXES = [
    AnnexList(("7305",)),
    AnnexList(("7305", "7208", "7607")),
    AnnexList(("73", "72", "76", "2523")),
    AnnexList(("73", "72", "76", "2523", "48", "94", "28", "38")),
]


@settings(max_examples=150)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.sampled_from(ANNEXES), st.booleans())
def test_memo_matches_naive_and_contributions(seed, n, annex, scope2):
    doc = random_dag_doc(random.Random(seed), n)
    reg = load_registry(doc)
    b = Boundary(annex, include_scope2=scope2)
    admits = lambda g: is_covered(g["cn_code"], annex)
    table = intensity_table(reg, b)
    for gid in reg.order:
        expected = naive_intensity(doc, gid, admits)
        assert table[gid] == pytest.approx(expected, abs=TOL, rel=1e-12)
        res = embedded_intensity(reg, gid, b)
        assert res.intensity == pytest.approx(res.direct + sum(c.value for c in res.contributions), abs=TOL, rel=1e-12)
        assert res.intensity >= 0


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_boundary_monotone(seed, n):
    reg = load_registry(random_dag_doc(random.Random(seed), n))
    values = [intensity_table(reg, Boundary(a)) for a in ANNEXES]
    for small, big in zip(values, values[1:]):
        for gid in reg.order:
            assert big[gid] >= small[gid] - TOL


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 4))
def test_depth_limit_never_exceeds_unlimited(seed, n, depth):
    reg = load_registry(random_dag_doc(random.Random(seed), n))
    annex = ANNEXES[-1]
    full = intensity_table(reg, Boundary(annex))
    for gid in reg.order:
        cut = embedded_intensity(reg, gid, Boundary(annex, max_depth=depth))
        assert cut.intensity <= full[gid] + TOL
        if not cut.truncated:
            assert cut.intensity == pytest.approx(full[gid], abs=TOL, rel=1e-12)


def test_embedded_total_examples():
    assert embedded_total(2.3, 100) == pytest.approx(230, abs=TOL)
    assert embedded_total(1.9, 10) == pytest.approx(19, abs=TOL)
    assert embedded_total(123.4, 0) == 0
    with pytest.raises(NegativeQuantity):
        embedded_total(1.0, -1)


@given(st.floats(0, 50), st.floats(0, 1e6), st.floats(0, 1e6))
def test_embedded_total_linear(i, q1, q2):
    assert embedded_total(i, q1 + q2) == pytest.approx(
        embedded_total(i, q1) + embedded_total(i, q2), abs=1e-9, rel=1e-12
    )


def test_steel_defaults_consistent():
    d = default_intensities().rows
    world, eu = d[("*", Sector.IRON_STEEL)], d[("EU", Sector.IRON_STEEL)]
    implied = world * (1 - 0.17)
    assert implied == pytest.approx(1.909)
    assert abs(implied - eu) / eu <= 0.005
