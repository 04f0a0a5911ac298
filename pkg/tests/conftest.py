from pathlib import Path

import numpy as np
import pytest

from genbl import BeliefStructure

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

WORKED_D = np.array([3.0, 6.5])


def worked():
    return BeliefStructure(
        ex=[1.0, 1.0],
        ed=[1.0, 1.0],
        var_x=[[0.54, 0.09], [0.09, 0.54]],
        var_d=[[1.0, -0.2], [-0.2, 1.0]],
        cov_xd=[[0.4, -0.1], [-0.1, -0.3]],
    )


def random_structure(rng, n, m, ridge=0.1):
    """Coherent structure from a random joint covariance S S' + ridge I."""
    s = rng.standard_normal((n + m, n + m))
    joint = s @ s.T + ridge * np.eye(n + m)
    mean = rng.standard_normal(n + m)
    return BeliefStructure(mean[:n], mean[n:], joint[:n, :n], joint[n:, n:], joint[:n, n:])


def random_spd(rng, n, ridge=0.1):
    s = rng.standard_normal((n, n))
    return s @ s.T + ridge * np.eye(n)


def random_polyhedron(rng, n, k):
    """Random feasible {A q >= b}: rows through a random interior-or-boundary point."""
    a = rng.standard_normal((k, n))
    q0 = rng.standard_normal(n)
    slack = np.where(rng.random(k) < 0.3, 0.0, rng.exponential(0.5, k))
    return a, a @ q0 - slack


@pytest.fixture
def worked_bs():
    return worked()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
