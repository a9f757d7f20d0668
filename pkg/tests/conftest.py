import datetime as dt

import pytest

from cbam.emissions import Boundary
from cbam.pricing import AssessmentContext, ImportDeclaration
from cbam.registry import CarbonPriceTable, load_registry
from cbam.taxonomy import AnnexList, default_taxonomy

SAMPLE_ANNEX = AnnexList(("2523", "2716", "3105", "7305", "7607"), name="examples")


def foil_doc(paper_direct=0.5):
    return {
        "goods": [
            {"id": "aluminium", "cn_code": "7601", "name": "aluminium", "direct_intensity": 1.0},
            {"id": "paper", "cn_code": "4801", "name": "paper", "direct_intensity": paper_direct},
            {
                "id": "foil",
                "cn_code": "7607",
                "name": "foil",
                "direct_intensity": 0.2,
                "inputs": [{"id": "aluminium", "qty": 1.05}, {"id": "paper", "qty": 0.02}],
            },
        ]
    }


@pytest.fixture
def foil_registry():
    return load_registry(foil_doc())


@pytest.fixture
def taxonomy():
    return default_taxonomy()


@pytest.fixture
def boundary(taxonomy):
    return Boundary(taxonomy.annex)


@pytest.fixture
def prices():
    return CarbonPriceTable.from_rows(
        [("EU", dt.date(2022, 1, 1), 80.0), ("CN", dt.date(2022, 1, 1), 35.0)]
    )


@pytest.fixture
def ctx(foil_registry, prices):
    return AssessmentContext(registry=foil_registry, prices=prices)


def decl(id="D", date=dt.date(2030, 3, 1), origin="RU", good="72081000", quantity=100.0, **kw):
    return ImportDeclaration(id=id, date=date, origin=origin, good=good, quantity=quantity, **kw)


# Acceptance criteria report one line each at the end of the run.
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
