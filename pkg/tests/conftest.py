import numpy as np
import pytest

from rare_event.timeseries import TimeSeries

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_record():
    """Record one pass/fail line per acceptance criterion for the summary."""

    def record(number: int, title: str, passed: bool, detail: str):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_series(rng: np.random.Generator, n: int, d: int = 2, p_event: float = 0.05,
                  run: int = 3) -> TimeSeries:
    """Gaussian readings with events as short runs started at random."""
    starts = rng.random(n) < p_event
    y = np.zeros(n, dtype=np.int8)
    for s in np.flatnonzero(starts):
        y[s:s + rng.integers(1, run + 1)] = 1
    return TimeSeries(rng.standard_normal((n, d)), y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
