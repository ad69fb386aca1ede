import time
import warnings

import pytest

from relbelief.quantile import NormalGammaQuantile

COVERAGE_NS = (10, 20, 50, 100)
ACCEPTANCE_LINES: list[str] = []
TIMINGS: dict[str, float] = {}


@pytest.fixture(scope="session")
def quantile_coverages():
    """Coverage reports for the 0.95 quantile at the tabulated sample sizes (default settings, seed 0)."""
    out = {}
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in COVERAGE_NS:
            out[n] = NormalGammaQuantile(n=n, gamma=0.95).coverage(seed=0)
    TIMINGS["coverage"] = time.perf_counter() - start
    return out


@pytest.fixture(scope="session")
def quantile_avg_favor():
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = NormalGammaQuantile(n=10, gamma=0.95).avg_bias_favor_mc(0.5, reps=200, seed=0)
    TIMINGS["avg_favor"] = time.perf_counter() - start
    return rep


@pytest.fixture
def criterion(capsys):
    """``check(label, ok, detail)`` prints one PASS/FAIL line and asserts ``ok``."""

    def check(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
