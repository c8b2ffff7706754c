import pytest

from hexoverlap.overlap import build_graph, enumerate_classes
from hexoverlap.rulefile import load_rules
from hexoverlap.substitution import find_generating_patch
from hexoverlap.tsdata import build_ruleset


@pytest.fixture(scope="session")
def ts():
    return build_ruleset()


@pytest.fixture(scope="session")
def ts_gen(ts):
    return find_generating_patch(ts)


@pytest.fixture(scope="session")
def tm():
    return load_rules("builtin:thue-morse-2d")


@pytest.fixture(scope="session")
def ts_enum(ts, ts_gen):
    return enumerate_classes(ts, ts_gen)


@pytest.fixture(scope="session")
def ts_graph(ts, ts_enum):
    G, added = build_graph(ts, ts_enum)
    return G, added


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
