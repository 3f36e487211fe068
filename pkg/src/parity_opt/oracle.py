"""Brute-force reference solvers for tests.

These are slow on purpose and share no threshold logic with the modules they
check: ranks, quantile integrals and utilities are recomputed here from the
raw atoms and weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoFeasibleClassifierError

DEFAULT_GRID = 10_000
MAX_ENUMERATION = 20
_TIE = 1e-14


@dataclass(frozen=True)
class SweepResult:
    """Best parameter, its utility, and the interval of candidates attaining that utility."""

    best: float
    utility: float
    plateau: tuple


@dataclass(frozen=True)
class EnumerationResult:
    classifier: np.ndarray
    risk: float
    n_feasible: int


def _ratio(m, joint, pos):
    n0, n1, n2 = m.n
    d0, d1, d2 = m.d
    den = d0 + d1 * joint + d2 * pos
    num = n0 + n1 * joint + n2 * pos
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 1e-15, num / np.where(den > 1e-15, den, 1.0), -np.inf)


def _suffix(values):
    # out[k] = sum(values[k:]), with out[n] = 0
    return np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])


def _tail_integral(knots, values, starts):
    """``int_start^1`` of the piecewise-linear function through ``(knots, values)``."""
    seg = 0.5 * (values[1:] + values[:-1]) * np.diff(knots)
    tail = _suffix(seg)
    k = np.clip(np.searchsorted(knots, starts, side="right") - 1, 0, knots.size - 2)
    v_start = np.interp(starts, knots, values)
    partial = 0.5 * (v_start + values[k + 1]) * (knots[k + 1] - starts)
    return partial + tail[k + 1]


def _plateau(candidates, scores, best_idx):
    order = np.argsort(candidates, kind="stable")
    c, s = candidates[order], scores[order]
    pos = int(np.flatnonzero(order == best_idx)[0])
    target = scores[best_idx]
    lo = hi = pos
    while lo > 0 and s[lo - 1] >= target - _TIE:
        lo -= 1
    while hi < c.size - 1 and s[hi + 1] >= target - _TIE:
        hi += 1
    return float(c[lo]), float(c[hi])


def brute_force_fair_threshold(gs, m, grid=DEFAULT_GRID):
    """Best common within-group rank ``gamma`` for measure ``m``.

    The classifier is ``1{rank_s(score) >= gamma}`` with plotting ranks
    ``sum(w[:i]) + w[i] / 2``, and scores double as ``P(Y = 1 | X, S)``.
    Candidates are ``grid + 1`` equispaced ranks plus every atom's rank.
    Empirical utility is a step function of ``gamma``; among its maximizers
    the one with the largest utility of the linearly interpolated rank
    classifier wins, then the smallest ``gamma``.
    """
    per_group = []
    for s, d in gs.groups.items():
        x = np.asarray(d.atoms, dtype=float)
        w = np.asarray(d.weights, dtype=float)
        ranks = np.cumsum(w) - w / 2.0
        per_group.append((gs.priors[s], x, w, ranks))
    candidates = np.unique(np.concatenate(
        [np.linspace(0.0, 1.0, grid + 1)] + [r for _, _, _, r in per_group]
    ))
    joint = np.zeros_like(candidates)
    pos = np.zeros_like(candidates)
    smooth_joint = np.zeros_like(candidates)
    for p, x, w, ranks in per_group:
        first = np.searchsorted(ranks, candidates, side="left")
        joint += p * _suffix(w * x)[first]
        pos += p * _suffix(w)[first]
        knots = np.concatenate([[0.0], ranks, [1.0]])
        values = np.concatenate([[x[0]], x, [x[-1]]])
        smooth_joint += p * _tail_integral(knots, values, candidates)
    primary = _ratio(m, joint, pos)
    secondary = _ratio(m, smooth_joint, 1.0 - candidates)
    top = primary.max()
    tied = primary >= top - _TIE
    secondary_masked = np.where(tied, secondary, -np.inf)
    best_idx = int(np.flatnonzero(secondary_masked >= secondary_masked.max() - _TIE)[0])
    return SweepResult(float(candidates[best_idx]), float(primary[best_idx]),
                       _plateau(candidates, primary, best_idx))


def brute_force_threshold_unconstrained(scores, m, grid=DEFAULT_GRID):
    """Best raw threshold ``theta`` for ``1{score >= theta}`` on a single group; smallest on ties."""
    x = np.asarray(scores.atoms, dtype=float)
    w = np.asarray(scores.weights, dtype=float)
    candidates = np.unique(np.concatenate([np.linspace(0.0, 1.0, grid + 1), x]))
    first = np.searchsorted(x, candidates, side="left")
    util = _ratio(m, _suffix(w * x)[first], _suffix(w)[first])
    best_idx = int(np.flatnonzero(util >= util.max() - _TIE)[0])
    return SweepResult(float(candidates[best_idx]), float(util[best_idx]),
                       _plateau(candidates, util, best_idx))


def brute_force_unaware(j, eps=1e-9, chunk=1 << 16):
    """Risk-minimizing deterministic classifier among those with DP gap ``<= eps``.

    Enumerates all ``2**m`` labelings; ties go to the lexicographically
    smallest labeling (point order as in ``j.points``).
    """
    m = len(j.points)
    if m > MAX_ENUMERATION:
        raise ValueError(f"enumeration is capped at {MAX_ENUMERATION} points, got {m}")
    p1 = np.asarray(j.p1, dtype=float)
    p2 = np.asarray(j.p2, dtype=float)
    eta = np.asarray(j.eta, dtype=float)
    marginal = j.priors[0] * p1 + j.priors[1] * p2
    base = float(np.dot(marginal, eta))
    gain = marginal * (1.0 - 2.0 * eta)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    best_code, best_risk, feasible = None, np.inf, 0
    total = 1 << m
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(float)
        dp = np.abs(bits @ p1 - bits @ p2)
        ok = dp <= eps
        if not np.any(ok):
            continue
        feasible += int(ok.sum())
        risks = base + bits[ok] @ gain
        k = int(np.flatnonzero(risks <= risks.min() + _TIE)[0])
        if risks[k] < best_risk - _TIE:
            best_risk, best_code = float(risks[k]), int(codes[ok][k])
    if best_code is None:
        raise NoFeasibleClassifierError(f"no deterministic classifier has DP gap <= {eps:g}")
    g = np.array([(best_code >> int(s)) & 1 for s in shifts], dtype=int)
    return EnumerationResult(g, best_risk, feasible)
