import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_mesh(rng, n):
    """Strictly increasing nodes on [0, 1] with cell ratios bounded by ~10."""
    from llgbubble.mesh import RadialMesh

    h = rng.uniform(0.3, 3.0, n - 1)
    r = np.concatenate([[0.0], np.cumsum(h)])
    return RadialMesh(r / r[-1])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
