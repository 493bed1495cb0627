import numpy as np
import pytest

from censtail.core import CensoredSample, order

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_censored(rng, n, p=0.7, xi=0.5):
    """Exact Pareto observations with independent Bernoulli(p) flags."""
    z = rng.pareto(1.0 / xi, n) + 1.0
    delta = (rng.random(n) < p).astype(int)
    return CensoredSample(z, delta)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pareto_ordered(rng):
    return order(random_censored(rng, 400))
