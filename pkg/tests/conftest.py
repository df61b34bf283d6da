import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}
_OUTCOMES = {}
_DETAILS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _CRITERIA[item.nodeid] = (number, title)


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.when == "call":
        _DETAILS.extend(line for line in report.capstdout.splitlines() if line.startswith("criterion"))
    if report.failed:
        _OUTCOMES[report.nodeid] = "FAIL"
    elif report.when == "call" and report.passed:
        _OUTCOMES.setdefault(report.nodeid, "PASS")
    elif report.skipped:
        _OUTCOMES[report.nodeid] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    by_number = {}
    for nodeid, (number, title) in _CRITERIA.items():
        status = _OUTCOMES.get(nodeid, "NOT RUN")
        prev = by_number.get(number, (title, "PASS"))[1]
        worst = status if status != "PASS" else prev
        by_number[number] = (title, worst)
    terminalreporter.section("acceptance criteria")
    for number in sorted(by_number):
        title, status = by_number[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status:<7} {title}")
    if _DETAILS:
        terminalreporter.section("measured values")
        for line in _DETAILS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def warm_jit():
    """Compile the numba kernels once so timed suites measure steady state."""
    import numpy as np

    from lazyspca.matrix import SparseMatrix
    from lazyspca.metrics import chordal_distance, residual_projector_gap
    from lazyspca.reducers import ReducerConfig, reduce_lazy_spca, reduce_spca

    X = SparseMatrix.from_dense(np.random.default_rng(0).standard_normal((30, 20)))
    for kind, density in (("gaussian", 1.0), ("very_sparse", 0.5)):
        a = reduce_spca(X, ReducerConfig.build("spca", 4, 20, 4, kind, density))
        b = reduce_lazy_spca(X, ReducerConfig.build("lazy_spca", 4, 20, 4, kind, density))
        chordal_distance(a.v, b.v)
    residual_projector_gap(X, np.random.default_rng(1).standard_normal((30, 4)))
    return True
