from pathlib import Path

import pytest

from clpi.harness import write_synthetic_as

DATA = Path(__file__).resolve().parent.parent / "data" / "as_synthetic.txt"


@pytest.fixture(scope="session")
def as_graph_path(tmp_path_factory):
    """The bundled AS-like edge list, regenerated if missing."""
    if DATA.exists():
        return DATA
    path = tmp_path_factory.mktemp("data") / "as_synthetic.txt"
    write_synthetic_as(path)
    return path


@pytest.fixture(scope="session")
def as_graph(as_graph_path):
    from clpi.graph import read_edge_list

    return read_edge_list(as_graph_path, treat_as_undirected=True)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    def _report(num, ok, detail):
        ACCEPTANCE_LINES[num] = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[num])
