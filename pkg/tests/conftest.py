import numpy as np
import pytest

from parity_opt.barycenter import GroupedScores
from parity_opt.empirical import WeightedSample1D
from parity_opt.unaware import DiscreteJoint2

BETA_SHAPES = [(2, 5), (5, 2), (3, 3), (2, 2), (4, 1.5)]

# lines reported by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES = []


def matched_instance(seed, k=2, n=40):
    """Equal-size uniform groups with random priors; a grid of size n matches every group's ranks."""
    rng = np.random.default_rng(seed)
    groups = {}
    for s in range(k):
        a, b = BETA_SHAPES[(seed + s) % len(BETA_SHAPES)]
        groups[f"g{s}"] = WeightedSample1D(rng.beta(a, b, n))
    priors = rng.dirichlet(np.full(k, 4.0))
    return GroupedScores(groups, dict(zip(groups, priors)))


def symmetric_pair():
    return GroupedScores.from_samples({1: [0.1, 0.3, 0.5, 0.7], 2: [0.3, 0.5, 0.7, 0.9]})


def dp_feasible_joint(seed, m=None):
    """Joint whose reduced supports have equal size and uniform mass, so exact DP is reachable."""
    rng = np.random.default_rng(seed)
    m = m or int(rng.integers(3, 13))
    k = int(rng.integers(1, (m - 1) // 2 + 1))
    perm = rng.permutation(m)
    a, b = perm[:k], perm[k:2 * k]
    tv = rng.uniform(0.2, 0.95)
    common = rng.dirichlet(np.ones(m)) * (1.0 - tv)
    p1, p2 = common.copy(), common.copy()
    p1[a] += tv / k
    p2[b] += tv / k
    prior = rng.uniform(0.2, 0.8)
    return DiscreteJoint2([f"x{i}" for i in range(m)], p1, p2, (prior, 1.0 - prior), rng.uniform(0, 1, m))


def zero_tv_joint(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 10))
    cond = rng.dirichlet(np.ones(m))
    return DiscreteJoint2(list(range(m)), cond, cond.copy(), (0.4, 0.6), rng.uniform(0, 1, m))


@pytest.fixture
def pair():
    return symmetric_pair()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
