"""Two-group fairness without access to the sensitive attribute at prediction time.

The conditional feature laws ``P(.|S=1)`` and ``P(.|S=2)`` live on a finite
support.  Their difference is split by its Hahn decomposition into two
mutually singular parts, each normalized by the total variation; on those
parts the unaware problem becomes an aware one with two groups of prior 1/2
and the rescaled score ``eta_tilde``.  Points where the two conditionals agree
carry no group information and keep the Bayes decision.

``eta_tilde`` is defined on the union of the two reduced supports.  It can
fall outside ``[0, 1]``; it is handed to the dual solver unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import dual
from .errors import ZeroTotalVariationError

COND_TOL = 1e-12
# |P(x|1) - P(x|2)| at or below this counts as equality (Bayes region)
BAYES_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class DiscreteJoint2:
    points: tuple
    p1: np.ndarray
    p2: np.ndarray
    priors: tuple
    eta: np.ndarray

    def __post_init__(self):
        points = tuple(self.points)
        if len(set(points)) != len(points):
            raise ValueError("support point ids must be distinct")
        p1 = np.asarray(self.p1, dtype=float).ravel()
        p2 = np.asarray(self.p2, dtype=float).ravel()
        eta = np.asarray(self.eta, dtype=float).ravel()
        m = len(points)
        if not (p1.size == p2.size == eta.size == m):
            raise ValueError("p1, p2 and eta need one entry per support point")
        for name, cond in (("p1", p1), ("p2", p2)):
            if np.any(cond < 0) or abs(cond.sum() - 1.0) > COND_TOL:
                raise ValueError(f"{name} is not a probability vector")
        if np.any(eta < 0) or np.any(eta > 1):
            raise ValueError("eta must lie in [0, 1]")
        priors = tuple(float(v) for v in self.priors)
        if len(priors) != 2 or min(priors) <= 0 or abs(sum(priors) - 1.0) > 1e-12:
            raise ValueError("priors must be two positive numbers summing to 1")
        for name, value in (("points", points), ("p1", p1), ("p2", p2), ("priors", priors), ("eta", eta)):
            object.__setattr__(self, name, value)

    def __len__(self):
        return len(self.points)

    @property
    def marginal(self):
        """``P(X = x_i)``."""
        return self.priors[0] * self.p1 + self.priors[1] * self.p2

    @classmethod
    def from_dict(cls, payload):
        return cls(payload["points"], payload["p1"], payload["p2"], payload["priors"], payload["eta"])

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {
            "points": list(self.points),
            "p1": self.p1.tolist(),
            "p2": self.p2.tolist(),
            "priors": list(self.priors),
            "eta": self.eta.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ReducedProblem:
    tv: float
    q1: np.ndarray
    q2: np.ndarray
    eta_tilde: np.ndarray
    support1: np.ndarray
    support2: np.ndarray
    bayes_region: np.ndarray
    q_priors: tuple = (0.5, 0.5)

    def dual_problem(self):
        """Aware two-group problem on the reduced supports (support 1 first, then support 2)."""
        i1, i2 = np.flatnonzero(self.support1), np.flatnonzero(self.support2)
        tau = np.zeros((i1.size + i2.size, 2))
        tau[: i1.size, 0] = 1.0
        tau[i1.size:, 1] = 1.0
        eta = np.concatenate([self.eta_tilde[i1], self.eta_tilde[i2]])
        weights = np.concatenate([0.5 * self.q1[i1], 0.5 * self.q2[i2]])
        return dual.DualProblem(eta, tau, weights, np.array(self.q_priors))


@dataclass(frozen=True, eq=False)
class UnawareResult:
    classifier: np.ndarray
    tv: float
    bayes_everywhere: bool
    reduced: ReducedProblem = None
    solution: dual.DualSolution = None
    dp_residual: float = 0.0
    risk: float = 0.0

    def as_map(self, joint):
        return dict(zip(joint.points, self.classifier.tolist()))


def total_variation(j):
    return 0.5 * float(np.abs(j.p1 - j.p2).sum())


def posterior(j, i):
    """``(P(S=1 | x_i), P(S=2 | x_i))``; ``i`` may be an index array."""
    a = j.priors[0] * j.p1[i]
    b = j.priors[1] * j.p2[i]
    total = a + b
    return a / total, b / total


def hahn_reduce(j):
    tv = total_variation(j)
    if tv <= 0.0:
        raise ZeroTotalVariationError("conditional laws coincide; no reduction exists")
    diff = j.p1 - j.p2
    support1 = diff > BAYES_TOL
    support2 = diff < -BAYES_TOL
    q1 = np.where(support1, diff, 0.0) / tv
    q2 = np.where(support2, -diff, 0.0) / tv
    q1, q2 = q1 / q1.sum(), q2 / q2.sum()
    reduced = support1 | support2
    eta_tilde = np.full(len(j), np.nan)
    idx = np.flatnonzero(reduced)
    t1, t2 = posterior(j, idx)
    contrast = np.abs(t1 / j.priors[0] - t2 / j.priors[1])
    eta_tilde[idx] = 0.5 + 0.5 * tv * (2.0 * j.eta[idx] - 1.0) / contrast
    return ReducedProblem(tv, q1, q2, eta_tilde, support1, support2, ~reduced)


def bayes_rule(j):
    return (j.eta >= 0.5).astype(int)


def risk(j, g):
    """``P(g(X) != Y)``."""
    g = np.asarray(g, dtype=float)
    return float(np.dot(j.marginal, g * (1.0 - j.eta) + (1.0 - g) * j.eta))


def dp_residual(j, g):
    """``|P(g=1 | S=1) - P(g=1 | S=2)|``."""
    g = np.asarray(g, dtype=float)
    return abs(float(np.dot(j.p1, g)) - float(np.dot(j.p2, g)))


def solve_unaware(j, tol=dual.DEFAULT_TOL):
    """Optimal deterministic unaware classifier under demographic parity."""
    g = bayes_rule(j)
    if total_variation(j) <= 0.0:
        return UnawareResult(g, 0.0, True, dp_residual=dp_residual(j, g), risk=risk(j, g))
    red = hahn_reduce(j)
    problem = red.dual_problem()
    sol = dual.solve(problem, tol)
    decided = dual.classify_problem(sol, problem)
    i1, i2 = np.flatnonzero(red.support1), np.flatnonzero(red.support2)
    g[i1] = decided[: i1.size]
    g[i2] = decided[i1.size:]
    return UnawareResult(g, red.tv, False, red, sol, dp_residual(j, g), risk(j, g))


def reduced_objective_gap(j, result):
    """``E_P[g (1 - 2 eta) 1_reduced] - 2 E_Q[g (1 - 2 eta_tilde)]``; zero by the change of measure."""
    red = result.reduced
    g = result.classifier.astype(float)
    mask = ~red.bayes_region
    lhs = float(np.dot(j.marginal[mask], g[mask] * (1.0 - 2.0 * j.eta[mask])))
    q = 0.5 * (red.q1 + red.q2)
    rhs = float(np.dot(q[mask], g[mask] * (1.0 - 2.0 * red.eta_tilde[mask])))
    return lhs - 2.0 * rhs
