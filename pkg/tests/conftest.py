import numpy as np
import pytest
from hypothesis import settings

from kerrcrit import ModelParams
from kerrcrit.criticality import critical_analysis

settings.register_profile("kerr", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("kerr")

DESK_N = [3, 4, 5, 6, 7, 8, 9, 10, 11, 12]


@pytest.fixture(scope="session")
def bistable_pipeline():
    """Full finite-size pipeline at delta=2, U~=1 over N=3..12 (about 2.5 minutes on one core)."""
    cf, records = critical_analysis(ModelParams(2.0, 1.0, 0.0), DESK_N, bracket=(0.7, 1.2),
                                    offsets=0.005 * np.arange(1, 101))
    return cf, records


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line and fail the test when it does not pass."""
    def report(k, ok, detail):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((k, line))
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
