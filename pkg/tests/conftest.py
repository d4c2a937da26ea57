import numpy as np
import pytest
from scipy.stats import ortho_group


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_orthogonal(d, rng):
    # independent of the package sampler
    return ortho_group.rvs(d, random_state=rng) if d > 1 else np.array([[1.0]])


def random_projector(d, q, rng):
    Q = random_orthogonal(d, rng)
    return Q[:, :q] @ Q[:, :q].T


def random_symmetric(d, rng):
    A = rng.standard_normal((d, d))
    return 0.5 * (A + A.T)


def block_orthogonal(mults, rng):
    """A random element of O(q_1) x ... x O(q_r)."""
    d = sum(mults)
    H = np.zeros((d, d))
    k = 0
    for q in mults:
        H[k:k + q, k:k + q] = random_orthogonal(q, rng) if q > 1 else rng.choice([-1.0, 1.0])
        k += q
    return H


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
