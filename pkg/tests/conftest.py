import pytest

from modrewrite.associate import AssociationSet
from modrewrite.model import AVPair, Catalog, Product


def av(a, v):
    return AVPair(a, v)


@pytest.fixture
def hand_catalog():
    rows = {"p1": {"a": "x", "b": "y"}, "p2": {"a": "x", "b": "z"}, "p3": {"a": "w", "b": "y"}}
    return Catalog.from_products("c", [Product(pid, "c", r) for pid, r in rows.items()])


@pytest.fixture
def hand_assoc():
    return AssociationSet("c", "m", ((av("a", "x"), 0.6), (av("b", "y"), 0.8)))


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
