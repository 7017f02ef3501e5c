import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tvpkernel.estimator import TimeSeriesData

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_data(rng, T=60, p=2, noise=1.0):
    X = rng.standard_normal((T, p))
    if p > 1:
        X[:, 0] = 1.0
    beta = rng.standard_normal(p)
    y = X @ beta + noise * rng.standard_normal(T)
    return TimeSeriesData(y=y, X=X)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
