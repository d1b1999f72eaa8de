import numpy as np
import pytest

from qmeas.measurement import random_measurement


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def random_measurements(rng):
    """A few random measurements per dimension and outcome count."""
    return [random_measurement(d, n, rng) for d in (2, 3, 4) for n in (1, 2, 3) for _ in range(3)]


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str, elapsed: float, limit: float):
        within = elapsed < limit
        status = "PASS" if ok and within else "FAIL"
        line = f"criterion {number} [{status}] {title}: {detail} ({elapsed:.2f} s, limit {limit:g} s)"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok and within

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
