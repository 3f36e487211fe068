"""Lagrangian dual of accuracy maximization under demographic parity.

For samples ``(eta_j, tau_j, w_j)`` with group posteriors ``tau_j`` and group
priors ``p``, the multipliers minimize

    G(lam) = sum_j w_j |2 eta_j - 1 - sum_s lam_s tau_js / p_s|,  sum_s lam_s = 0,

and the optimal classifier is ``1{2 eta - 1 >= sum_s lam_s tau_s / p_s}``.
With one-hot ``tau`` this is the group-aware problem; with posteriors
``P(S = s | X)`` it is the group-unaware one.

On atomic data the minimizers can form a face of a polytope.  The solver
returns a point in the relative interior of that face, so that no sample sits
exactly on the decision boundary when the face has positive width.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog, lsq_linear

from .errors import DualSolverError

DEFAULT_TOL = 1e-9
_MEDIAN_EPS = 1e-12
_HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


@dataclass(frozen=True, eq=False)
class DualProblem:
    """Weighted samples ``(eta, tau, weight)`` and group priors.

    ``eta`` is not restricted to ``[0, 1]``: only ``2 eta - 1`` enters the
    objective, and pseudo-regression values outside the unit interval are legal.
    """

    eta: np.ndarray
    tau: np.ndarray
    weights: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float).ravel()
        tau = np.atleast_2d(np.asarray(self.tau, dtype=float))
        if tau.shape[0] != eta.size:
            tau = tau.reshape(eta.size, -1)
        weights = np.asarray(self.weights, dtype=float).ravel()
        if weights.size != eta.size:
            raise ValueError("eta, tau and weights must have matching lengths")
        if np.any(weights <= 0):
            raise ValueError("sample weights must be positive")
        if np.any(tau < 0) or np.any(np.abs(tau.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("each tau row must be a probability vector")
        weights = weights / weights.sum()
        implied = weights @ tau
        priors = implied if self.priors is None else np.asarray(self.priors, dtype=float).ravel()
        if priors.size != tau.shape[1] or np.any(priors <= 0):
            raise ValueError("priors must be positive, one per group")
        if np.any(np.abs(implied - priors) > 1e-9):
            raise ValueError(f"posteriors imply priors {implied}, inconsistent with {priors}")
        for name, value in (("eta", eta), ("tau", tau), ("weights", weights), ("priors", priors)):
            object.__setattr__(self, name, value)

    @property
    def n_groups(self):
        return self.tau.shape[1]

    @property
    def design(self):
        return self.tau / self.priors

    @property
    def target(self):
        return 2.0 * self.eta - 1.0

    @classmethod
    def from_grouped(cls, gs):
        """Group-aware problem: one sample per atom, one-hot posteriors."""
        labels = gs.labels
        eta, tau, weights = [], [], []
        for k, s in enumerate(labels):
            d = gs.groups[s]
            onehot = np.zeros((len(d), len(labels)))
            onehot[:, k] = 1.0
            eta.append(d.atoms)
            tau.append(onehot)
            weights.append(gs.priors[s] * d.weights)
        return cls(np.concatenate(eta), np.vstack(tau), np.concatenate(weights), gs.prior_vector())

    @classmethod
    def from_csv(cls, path):
        """Columns ``eta, tau_1 .. tau_K`` and an optional ``weight``."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            cols = reader.fieldnames or []
            tau_cols = sorted((c for c in cols if c.startswith("tau_")), key=lambda c: int(c[4:]))
            if "eta" not in cols or not tau_cols:
                raise ValueError("CSV needs an 'eta' column and tau_1..tau_K columns")
            rows = list(reader)
        eta = np.array([float(r["eta"]) for r in rows])
        tau = np.array([[float(r[c]) for c in tau_cols] for r in rows])
        if "weight" in cols:
            weights = np.array([float(r["weight"]) for r in rows])
        else:
            weights = np.ones(len(rows))
        return cls(eta, tau, weights, None)


@dataclass(frozen=True, eq=False)
class DualSolution:
    lam: np.ndarray
    objective: float
    converged: bool
    iterations: int
    priors: np.ndarray
    certificate: float = 0.0


def objective(problem, lam):
    """``G(lam)`` as minimized by :func:`solve`."""
    resid = problem.target - problem.design @ np.asarray(lam, dtype=float)
    return float(np.dot(problem.weights, np.abs(resid)))


def raw_objective(problem, lam):
    """Unnormalized form ``E|2 eta - 1 + sum_s lam_s (1 - tau_s / p_s)|``, invariant under ``lam + c p``."""
    lam = np.asarray(lam, dtype=float)
    resid = problem.target + (lam.sum() - problem.design @ lam)
    return float(np.dot(problem.weights, np.abs(resid)))


def solve(problem, tol=DEFAULT_TOL):
    """Minimize ``G`` over ``sum(lam) = 0`` and certify the result by a subgradient check."""
    k = problem.n_groups
    if k == 1:
        lam, iterations = np.zeros(1), 0
    elif k == 2:
        lam, iterations = _solve_two_groups(problem), 1
    else:
        lam, iterations = _solve_lp(problem)
    lam = lam - lam.mean()
    cert = subgradient_certificate(problem, lam)
    value = objective(problem, lam)
    if cert > tol:
        raise DualSolverError(
            f"no optimality certificate: projected subgradient norm {cert:.3e} > {tol:.1e}",
            best_lambda=lam, best_objective=value,
        )
    return DualSolution(lam, value, True, iterations, problem.priors.copy(), cert)


def _solve_two_groups(problem):
    # lam = (a, -a): G is a weighted sum of |c_j - a d_j|, minimized on a weighted-median interval
    design = problem.design
    d = design[:, 0] - design[:, 1]
    c = problem.target
    active = d != 0.0
    if not np.any(active):
        return np.zeros(2)
    z = c[active] / d[active]
    v = problem.weights[active] * np.abs(d[active])
    order = np.argsort(z, kind="stable")
    z, v = z[order], v[order]
    cum = np.cumsum(v)
    half = cum[-1] / 2.0
    eps = _MEDIAN_EPS * cum[-1]
    lo = z[np.searchsorted(cum, half - eps, side="left")]
    hi = z[min(np.searchsorted(cum, half + eps, side="right"), z.size - 1)]
    a = 0.5 * (lo + hi)
    return np.array([a, -a])


def _lp_matrices(problem):
    n, k = problem.tau.shape
    eye = sparse.identity(n, format="csr")
    a_eq = sparse.vstack([
        sparse.hstack([sparse.csr_matrix(problem.design), eye, -eye]),
        sparse.hstack([sparse.csr_matrix(np.ones((1, k))), sparse.csr_matrix((1, 2 * n))]),
    ], format="csr")
    b_eq = np.concatenate([problem.target, [0.0]])
    cost = np.concatenate([np.zeros(k), problem.weights, problem.weights])
    bounds = [(None, None)] * k + [(0, None)] * (2 * n)
    return a_eq, b_eq, cost, bounds


def _solve_lp(problem):
    k = problem.n_groups
    a_eq, b_eq, cost, bounds = _lp_matrices(problem)
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs", options=_HIGHS_OPTIONS)
    if res.status != 0:
        raise DualSolverError(f"LP solver failed: {res.message}", best_lambda=np.zeros(k))
    vertex = res.x[:k]
    best = objective(problem, vertex)
    # extreme points of the optimal face along each coordinate; their mean is relatively interior
    budget = sparse.csr_matrix(cost.reshape(1, -1))
    slack = best + 1e-12 * max(1.0, best)
    points = []
    for j in range(k):
        for sign in (1.0, -1.0):
            direction = np.zeros_like(cost)
            direction[j] = sign
            r = linprog(direction, A_ub=budget, b_ub=[slack], A_eq=a_eq, b_eq=b_eq,
                        bounds=bounds, method="highs", options=_HIGHS_OPTIONS)
            if r.status == 0:
                points.append(r.x[:k])
    iterations = 1 + 2 * k
    vertex = _snap(problem, vertex)
    if points:
        center = _snap(problem, np.mean(points, axis=0))
        if objective(problem, center) <= objective(problem, vertex) + 1e-12 * max(1.0, best) \
                and subgradient_certificate(problem, center) <= DEFAULT_TOL:
            return center, iterations
    return vertex, iterations


def _snap(problem, lam, tol=1e-7):
    """Project ``lam`` onto the kink hyperplanes it nearly lies on (LP output is only tolerance-accurate)."""
    design = problem.design
    resid = problem.target - design @ lam
    active = np.abs(resid) <= tol * (1.0 + np.abs(problem.target))
    system = np.vstack([design[active], np.ones((1, design.shape[1]))])
    rhs = np.concatenate([resid[active], [-lam.sum()]])
    step, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    if np.max(np.abs(system @ step - rhs)) > 1e-12 or np.max(np.abs(step)) > 1e3 * tol:
        return lam
    return lam + step


def subgradient_certificate(problem, lam, kink_tol=1e-9):
    """Smallest norm of a projected subgradient of ``G`` at ``lam``.

    Samples with ``|residual| <= kink_tol`` may take any sign in ``[-1, 1]``.
    """
    design = problem.design
    resid = problem.target - design @ lam
    kink = np.abs(resid) <= kink_tol * (1.0 + np.abs(problem.target))
    base = -(problem.weights[~kink] * np.sign(resid[~kink])) @ design[~kink]
    k = design.shape[1]
    proj = np.eye(k) - np.full((k, k), 1.0 / k)
    if not np.any(kink):
        return float(np.linalg.norm(proj @ base))
    free = -(design[kink] * problem.weights[kink, None]).T
    fit = lsq_linear(proj @ free, -(proj @ base), bounds=(-1.0, 1.0), method="bvls")
    return float(np.linalg.norm(proj @ (base + free @ fit.x)))


def classify_dual(sol, eta, tau):
    """``1{2 eta - 1 >= sum_s lam_s tau_s / p_s}``; ``tau`` may be one row or a matrix."""
    tau = np.asarray(tau, dtype=float)
    shift = (tau / sol.priors) @ sol.lam
    out = (2.0 * np.asarray(eta, dtype=float) - 1.0 >= shift)
    return int(out) if np.ndim(out) == 0 else out.astype(int)


def classify_problem(sol, problem):
    return classify_dual(sol, problem.eta, problem.tau)


def check_foc(sol, problem):
    """Per-group ``|P(g = 1 | S = s) - P(g = 1)|`` for the dual classifier."""
    g = classify_problem(sol, problem)
    overall = float(np.dot(problem.weights, g))
    per_group = (problem.weights * g) @ problem.tau / problem.priors
    return np.abs(per_group - overall)


def risk(problem, g):
    """Misclassification risk ``E[g (1 - eta) + (1 - g) eta]``."""
    g = np.asarray(g, dtype=float)
    return float(np.dot(problem.weights, g * (1.0 - problem.eta) + (1.0 - g) * problem.eta))
