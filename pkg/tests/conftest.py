import itertools

import numpy as np
import pytest

from templink.temporal_graph import ingest, view_from_edges

_CRITERIA: list = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        _CRITERIA.append((marker.args[0], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in _CRITERIA:
        line = f"{status}  {name}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


def random_edges(rng, n, p):
    return [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]


def view_of(n, edges, present=None):
    """Undirected view over an explicit edge list."""
    eu = np.array([e[0] for e in edges], dtype=np.int64)
    ev = np.array([e[1] for e in edges], dtype=np.int64)
    present = np.ones(n, dtype=bool) if present is None else present
    return view_from_edges(n, eu, ev, present)


def graph_of(edges_with_days):
    return ingest(edges_with_days)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
