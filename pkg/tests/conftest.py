from __future__ import annotations

import pytest

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    # One pass/fail line per acceptance criterion.
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE):
        name = nodeid.split("::")[-1]
        outcome = "PASS" if _ACCEPTANCE[nodeid] == "passed" else _ACCEPTANCE[nodeid].upper()
        terminalreporter.write_line(f"{name}: {outcome}")


@pytest.fixture(scope="session")
def small_benchmark():
    from flare_rag.synthetic import make_benchmark

    return make_benchmark(n=40, seed=11)


@pytest.fixture(scope="session")
def small_setup(small_benchmark):
    """Index + strict mock answerer over the small benchmark."""
    from flare_rag.bm25 import build_index
    from flare_rag.engine import MockOracleAnswerer

    index = build_index(small_benchmark.corpus)
    answerer = MockOracleAnswerer(small_benchmark.behaviors)
    return small_benchmark, index, answerer
