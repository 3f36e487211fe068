"""Wasserstein-2 barycenters of group-wise score laws by quantile averaging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .empirical import WEIGHT_TOL, WeightedSample1D, _check_rank, w2
from .errors import DegenerateDistributionError

DEFAULT_GRID = 512
GAMMA_TOL = 1e-12
GAMMA_MAX_ITER = 200


@dataclass(frozen=True, eq=False)
class GroupedScores:
    """Per-group score laws together with the group priors ``P(S = s)``."""

    groups: dict
    priors: dict

    def __post_init__(self):
        groups = dict(self.groups)
        if not groups:
            raise ValueError("at least one group is required")
        if set(groups) != set(self.priors):
            raise ValueError("groups and priors must have the same keys")
        priors = {s: float(self.priors[s]) for s in groups}
        if any(not p > 0 for p in priors.values()):
            raise ValueError("group priors must be positive")
        total = sum(priors.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"group priors sum to {total!r}, expected 1")
        if abs(total - 1.0) > WEIGHT_TOL:
            priors = {s: p / total for s, p in priors.items()}
        for s, d in groups.items():
            if not isinstance(d, WeightedSample1D):
                raise TypeError(f"group {s!r} is not a WeightedSample1D")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "priors", priors)

    @classmethod
    def from_samples(cls, samples, priors=None, weights=None):
        """Build from ``{group: values}``; priors default to the groups' total weight share."""
        weights = weights or {}
        groups, mass = {}, {}
        for s, values in samples.items():
            w = weights.get(s)
            groups[s] = WeightedSample1D.from_values(values, w)
            mass[s] = float(np.sum(w)) if w is not None else float(len(np.ravel(values)))
        if priors is None:
            total = sum(mass.values())
            priors = {s: m / total for s, m in mass.items()}
        return cls(groups, priors)

    @property
    def labels(self):
        return list(self.groups)

    def __len__(self):
        return len(self.groups)

    def prior_vector(self):
        return np.array([self.priors[s] for s in self.groups])

    def mean_score(self):
        return sum(self.priors[s] * d.mean() for s, d in self.groups.items())

    def min_group_size(self):
        return min(len(d) for d in self.groups.values())

    def require_nondegenerate(self):
        for s, d in self.groups.items():
            if d.is_degenerate:
                raise DegenerateDistributionError(f"group {s!r} has a single distinct score")


def barycenter_quantile(gs, p):
    """Quantile of the barycenter: prior-weighted average of surrogate group quantiles."""
    gs.require_nondegenerate()
    _check_rank(p)
    total = sum(gs.priors[s] * np.asarray(d.interp_quantile(p)) for s, d in gs.groups.items())
    return float(total) if np.ndim(p) == 0 else total


def barycenter_distribution(gs, m=DEFAULT_GRID):
    """Uniform ``m``-point discretization of the barycenter at ranks ``(i - 1/2) / m``."""
    if m < 1:
        raise ValueError("grid size must be positive")
    ranks = (np.arange(m) + 0.5) / m
    return WeightedSample1D(barycenter_quantile(gs, ranks), np.full(m, 1.0 / m))


def barycenter_objective(gs, nu):
    """``sum_s p_s W2(group_s, nu)^2``; the barycenter minimizes it over ``nu``."""
    return sum(gs.priors[s] * w2(d, nu) ** 2 for s, d in gs.groups.items())


def barycenter_knots(gs):
    """Knots ``(ranks, values)`` on which the barycenter quantile is exactly piecewise linear.

    Only the rank range where the quantile is strictly increasing is returned:
    from the smallest first plotting rank to the largest last plotting rank.
    """
    gs.require_nondegenerate()
    ranks = np.unique(np.concatenate([d.plotting_ranks for d in gs.groups.values()]))
    return ranks, barycenter_quantile(gs, ranks)


def barycenter_rank(gs, level, knots=None):
    """Exact inverse of :func:`barycenter_quantile`, clamped to the knot range."""
    ranks, values = knots if knots is not None else barycenter_knots(gs)
    return _as_scalar(level, np.interp(np.asarray(level, dtype=float), values, ranks))


def transport_map(gs, s, t):
    """Monotone transport of group ``s`` scores onto the barycenter.

    Scores outside the group's atom range are clamped before ranking.
    """
    d = gs.groups[s]
    return barycenter_quantile(gs, d.interp_cdf(t))


def solve_gamma_star(gs, tol=GAMMA_TOL, max_iter=GAMMA_MAX_ITER):
    """Rank at which the barycenter quantile crosses 1/2, by bisection.

    Returns 0 when the whole barycenter is at or above 1/2 and 1 when it is
    entirely below.
    """
    def residual(p):
        return barycenter_quantile(gs, p) - 0.5

    lo, hi = 0.0, 1.0
    if residual(lo) >= 0.0:
        return 0.0
    if residual(hi) < 0.0:
        return 1.0
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if abs(r) <= tol:
            break
        if r < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= np.finfo(float).eps:
            mid = hi
            break
    return mid


def _as_scalar(x, values):
    return float(values) if np.ndim(x) == 0 else values
