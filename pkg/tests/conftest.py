import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, max_points=5, k=None, equal=False):
    M = int(rng.integers(1, max_points + 1))
    N = M if equal else int(rng.integers(1, max_points + 1))
    k = int(rng.integers(1, 4)) if k is None else k
    return rng.normal(size=(M, k)), rng.normal(size=(N, k))


def mean_cost(a, b):
    return float(np.linalg.norm(a[:, None] - b[None], axis=-1).mean())


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
