import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rclab.graph import Graph, complete_graph, cycle_graph, generate_random_regular  # noqa: E402


@pytest.fixture
def triangle() -> Graph:
    return cycle_graph(3)


@pytest.fixture
def k4() -> Graph:
    return complete_graph(4)


@pytest.fixture
def c6() -> Graph:
    return cycle_graph(6)


@pytest.fixture
def single_edge() -> Graph:
    return Graph.from_edges(2, [(0, 1)])


@pytest.fixture(scope="session")
def cubic8() -> Graph:
    return generate_random_regular(8, 3, seed=3)


@pytest.fixture(scope="session")
def cubic12() -> Graph:
    return generate_random_regular(12, 3, seed=0)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance.py::test_criterion_" not in rep.nodeid:
                continue
            name = rep.nodeid.split("::")[-1][len("test_criterion_"):]
            detail = dict(rep.user_properties).get("verdict", "")
            lines.append((name, "PASS" if outcome == "passed" else "FAIL", detail))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict, detail in sorted(lines):
            terminalreporter.write_line(f"criterion {name}: {verdict}  {detail}")
