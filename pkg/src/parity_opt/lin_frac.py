"""Linear-fractional performance measures and their optimal fair thresholds.

A measure is the ratio

    U(g) = (n0 + n1 * P(g=1, Y=1) + n2 * P(g=1)) / (d0 + d1 * P(g=1, Y=1) + d2 * P(g=1))

and the optimal demographic-parity classifier thresholds the fair score at a
level ``theta_star`` that is either explicit or the root of a monotone
fixed-point equation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import FairnessPreconditionError, InvalidMeasureError, OutsideDomainError
from .fair_score import group_thresholds, transform

DENOMINATOR_EPS = 1e-15
THETA_TOL = 1e-12
THETA_MAX_ITER = 200
PRESETS = ("accuracy", "f_beta", "jaccard", "am", "recall")


@dataclass(frozen=True)
class LFMeasure:
    n: tuple
    d: tuple
    label_prior: float
    name: str = None

    def __post_init__(self):
        n = tuple(float(v) for v in self.n)
        d = tuple(float(v) for v in self.d)
        if len(n) != 3 or len(d) != 3:
            raise ValueError("n and d must each have three coefficients")
        if not 0.0 <= self.label_prior <= 1.0:
            raise ValueError(f"label prior {self.label_prior!r} outside [0, 1]")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "label_prior", float(self.label_prior))

    def negated(self):
        return LFMeasure(tuple(-v for v in self.n), tuple(-v for v in self.d), self.label_prior)

    @property
    def explicit(self):
        """True when ``n2 * d1 == d2 * n1`` (exactly, in rational arithmetic)."""
        n0, n1, n2, d0, d1, d2 = _exact(self)
        return n2 * d1 == d2 * n1


# Table-style constructors; p is P(Y = 1).

def _require_prior(p, name, open_right=False):
    if not 0.0 < p <= 1.0 or (open_right and p >= 1.0):
        raise ValueError(f"{name} requires a label prior in (0, 1{')' if open_right else ']'}, got {p!r}")


def accuracy(p):
    return LFMeasure((1.0 - p, 2.0, -1.0), (1.0, 0.0, 0.0), p, "accuracy")


def f_beta(p, beta=1.0):
    _require_prior(p, "f_beta")
    b2 = beta * beta
    return LFMeasure((0.0, 1.0 + b2, 0.0), (b2 * p, 0.0, 1.0), p, f"f_beta({beta:g})")


def jaccard(p):
    _require_prior(p, "jaccard")
    return LFMeasure((0.0, 1.0, 0.0), (p, -1.0, 1.0), p, "jaccard")


def am(p):
    _require_prior(p, "am", open_right=True)
    q = 1.0 - p
    return LFMeasure((0.5, 1.0 / (2 * p) + 1.0 / (2 * q), -1.0 / (2 * q)), (1.0, 0.0, 0.0), p, "am")


def recall(p):
    _require_prior(p, "recall")
    return LFMeasure((0.0, 1.0, 0.0), (p, 0.0, 0.0), p, "recall")


def preset(name, label_prior, beta=1.0):
    builders = {"accuracy": accuracy, "jaccard": jaccard, "am": am, "recall": recall}
    if name == "f_beta":
        return f_beta(label_prior, beta)
    if name not in builders:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")
    return builders[name](label_prior)


def measure_from_spec(spec, label_prior=None):
    """Parse ``{"n": [...], "d": [...], "label_prior": x}`` or ``{"preset": name, "beta": b}``.

    ``label_prior`` fills in a prior the spec does not give itself.
    """
    p = spec.get("label_prior", label_prior)
    if p is None:
        raise ValueError("measure spec needs a label_prior")
    if "preset" in spec:
        return preset(spec["preset"], float(p), float(spec.get("beta", 1.0)))
    return LFMeasure(tuple(spec["n"]), tuple(spec["d"]), float(p), spec.get("name"))


@dataclass(frozen=True)
class ConfusionStats:
    p_pos_joint: float
    p_pos: float

    def __post_init__(self):
        tol = 1e-12
        if not (-tol <= self.p_pos_joint <= self.p_pos + tol and self.p_pos <= 1.0 + tol):
            raise ValueError(f"inconsistent confusion statistics {self!r}")


@dataclass(frozen=True)
class Validation:
    branch: str
    reason: str = None
    checks: dict = field(default_factory=dict)

    @property
    def valid(self):
        return self.branch in ("C1", "C2")


def _exact(m):
    return tuple(Fraction(v) for v in m.n + m.d)


def denominator_condition(m):
    n0, n1, n2, d0, d1, d2 = _exact(m)
    return d0 + min(min(d1, 0) + d2, 0) >= 0


def condition_checks(m):
    """Each inequality of the two admissibility conditions, evaluated exactly."""
    n0, n1, n2, d0, d1, d2 = _exact(m)
    p = Fraction(m.label_prior)
    checks = {}
    checks["C1.a: d2*n1 > n2*d1"] = d2 * n1 > n2 * d1
    if checks["C1.a: d2*n1 > n2*d1"]:
        ratio = (n0 * d2 - d0 * n2) / (n2 * d1 - d2 * n1)
        checks["C1.b: (n0*d2 - d0*n2)/(n2*d1 - d2*n1) <= P(Y=1)"] = ratio <= p
        checks["C1.c: d0*n1 - n0*d1 >= (n0*d2 - d0*n2)_+"] = d0 * n1 - n0 * d1 >= max(n0 * d2 - d0 * n2, 0)
    checks["C2.a: d2*n1 == n2*d1"] = d2 * n1 == n2 * d1
    checks["C2.b: n1*d0 > d1*n0"] = n1 * d0 > d1 * n0
    if checks["C2.b: n1*d0 > d1*n0"]:
        ratio = (d0 * n2 - n0 * d2) / (n0 * d1 - d0 * n1)
        checks["C2.c: (d0*n2 - n0*d2)/(n0*d1 - d0*n1) in [0, 1]"] = 0 <= ratio <= 1
    return checks


def condition_predicates(m):
    """Truth values of the two conditions alone, without the sign-fixing denominator check."""
    checks = condition_checks(m)
    c1 = [v for k, v in checks.items() if k.startswith("C1")]
    c2 = [v for k, v in checks.items() if k.startswith("C2")]
    return {"C1": len(c1) == 3 and all(c1), "C2": len(c2) == 3 and all(c2)}


def validate(m):
    """Classify the measure as ``C1``, ``C2`` or ``invalid``, naming the first failed inequality."""
    checks = {"denominator: d0 + min(min(d1, 0) + d2, 0) >= 0": denominator_condition(m)}
    if not checks["denominator: d0 + min(min(d1, 0) + d2, 0) >= 0"]:
        return Validation("invalid", "denominator: d0 + min(min(d1, 0) + d2, 0) >= 0", checks)
    cond = condition_checks(m)
    checks.update(cond)
    preds = condition_predicates(m)
    if preds["C1"]:
        return Validation("C1", None, checks)
    if preds["C2"]:
        return Validation("C2", None, checks)
    prefix = "C1" if cond["C1.a: d2*n1 > n2*d1"] else "C2"
    first = next(k for k, v in cond.items() if k.startswith(prefix) and not v)
    return Validation("invalid", first, checks)


def require_valid(m):
    result = validate(m)
    if not result.valid:
        raise InvalidMeasureError(f"measure violates {result.reason}", result)
    return result


def utility(m, stats):
    n0, n1, n2 = m.n
    d0, d1, d2 = m.d
    den = d0 + d1 * stats.p_pos_joint + d2 * stats.p_pos
    if den <= DENOMINATOR_EPS:
        raise OutsideDomainError(f"utility denominator {den!r} is not positive")
    return (n0 + n1 * stats.p_pos_joint + n2 * stats.p_pos) / den


def fixed_point_coefficients(m):
    """Slope and intercept of the right-hand side of the fixed-point equation (implicit branch)."""
    n0, n1, n2 = m.n
    d0, d1, d2 = m.d
    den = n2 * d1 - d2 * n1
    return (n0 * d1 - d0 * n1) / den, (n0 * d2 - d0 * n2) / den


def fixed_point_residual(m, model, theta):
    """``theta * A + B - E[(f* - theta)_+]``; zero at the optimal threshold of a C1 measure."""
    a, b = fixed_point_coefficients(m)
    return theta * a + b - model.expected_excess(theta)


def explicit_threshold(m):
    n0, n1, n2, d0, d1, d2 = _exact(m)
    return float((d0 * n2 - n0 * d2) / (n0 * d1 - d0 * n1)) + 0.0


def solve_threshold(m, model, tol=THETA_TOL, max_iter=THETA_MAX_ITER):
    """Optimal level ``theta_star`` at which to threshold the fair score."""
    branch = require_valid(m).branch
    if branch == "C2":
        return explicit_threshold(m)

    def phi(theta):
        return fixed_point_residual(m, model, theta)

    if phi(0.0) > 0.0:
        warnings.warn("fixed-point map is positive at 0; clamping theta_star to 0", RuntimeWarning)
        return 0.0
    if phi(1.0) < 0.0:
        warnings.warn("fixed-point map is negative at 1; clamping theta_star to 1", RuntimeWarning)
        return 1.0
    lo, hi = 0.0, 1.0
    theta = 0.5
    for _ in range(max_iter):
        theta = 0.5 * (lo + hi)
        r = phi(theta)
        if abs(r) <= tol:
            break
        if r < 0.0:
            lo = theta
        else:
            hi = theta
    return _polish_root(m, model, theta, phi)


def _polish_root(m, model, theta, phi):
    # phi is affine between consecutive barycenter atoms; solve on the current piece
    a, b = fixed_point_coefficients(m)
    bary = model.barycenter
    above = bary.atoms > theta
    s0 = float(bary.weights[above].sum())
    s1 = float(np.dot(bary.weights[above], bary.atoms[above]))
    if a + s0 == 0.0:
        return theta
    exact = (s1 - b) / (a + s0)
    lower = bary.atoms[~above].max() if np.any(~above) else -np.inf
    upper = bary.atoms[above].min() if np.any(above) else np.inf
    if lower <= exact < upper and 0.0 <= exact <= 1.0 and abs(phi(exact)) <= abs(phi(theta)):
        return float(exact)
    return theta


def optimal_utility(m, model, theta):
    """Utility of the optimal classifier from its threshold alone."""
    n0, n1, n2 = m.n
    d0, d1, d2 = m.d
    if require_valid(m).branch == "C1":
        return (n2 + theta * n1) / (d2 + theta * d1)
    e = model.expected_excess(theta)
    return (n0 + n1 * e) / (d0 + d1 * e)


def excess_coefficient(m, model, theta):
    """Case-dependent factor multiplying the disagreement mass in the excess score."""
    n0, n1, n2 = m.n
    d0, d1, d2 = m.d
    if require_valid(m).branch == "C1":
        return (d2 * n1 - n2 * d1) / (d2 + theta * d1)
    return (n1 * d0 - d1 * n0) / (d0 + d1 * model.expected_excess(theta))


# Confusion statistics of classifiers built from the model, with scores
# standing in for P(Y = 1 | X, S).

def fair_score_stats(model, theta):
    """Statistics of ``1{f* >= theta}`` on the barycenter, using ``E[eta g] = E[f* g]``."""
    b = model.barycenter
    pos = b.atoms >= theta
    return ConfusionStats(float(np.dot(b.weights, b.atoms * pos)), float(b.weights[pos].sum()))


def threshold_stats(gs, thresholds):
    """Statistics of ``1{score >= thresholds[s]}`` on the group laws."""
    joint = pos = 0.0
    for s, d in gs.groups.items():
        mask = d.atoms >= thresholds[s]
        joint += gs.priors[s] * float(np.dot(d.weights, d.atoms * mask))
        pos += gs.priors[s] * float(d.weights[mask].sum())
    return ConfusionStats(joint, pos)


def _rank_masks(gs, ranks):
    if not isinstance(ranks, dict):
        ranks = {s: float(ranks) for s in gs.groups}
    return {s: np.asarray(d.interp_cdf(d.atoms)) >= ranks[s] for s, d in gs.groups.items()}


def rank_stats(gs, ranks):
    """Statistics of the rank classifier ``1{F_s(score) >= ranks[s]}`` (a scalar means a common rank)."""
    joint = pos = 0.0
    for s, mask in _rank_masks(gs, ranks).items():
        d = gs.groups[s]
        joint += gs.priors[s] * float(np.dot(d.weights, d.atoms * mask))
        pos += gs.priors[s] * float(d.weights[mask].sum())
    return ConfusionStats(joint, pos)


def excess_levels(model, theta):
    """Per-group score levels ``beta_s`` with ``sum_s p_s beta_s = theta`` that split like ``f* >= theta``.

    Inside the range of fair scores these are the group thresholds.  Outside
    it every group is on one side, and the levels are the extreme atoms moved
    by a common shift so that their prior-weighted mean is still ``theta``.
    """
    ranks, values = model._knots
    gs = model.gs
    if theta < values[0]:
        return {s: d.atoms[0] - (values[0] - theta) for s, d in gs.groups.items()}
    if theta > values[-1]:
        return {s: d.atoms[-1] + (theta - values[-1]) for s, d in gs.groups.items()}
    return group_thresholds(model, theta)


def excess_score(m, model, theta, ranks):
    """Closed-form utility gap between the optimal classifier and a fair rank classifier.

    ``ranks`` is a common rank or a per-group mapping of ranks; the induced
    positive rates must agree across groups to within ``2 / min group size``.
    """
    gs = model.gs
    masks = _rank_masks(gs, ranks)
    rates = [float(gs.groups[s].weights[mask].sum()) for s, mask in masks.items()]
    if max(rates) - min(rates) > 2.0 / gs.min_group_size():
        raise FairnessPreconditionError(f"competitor positive rates {rates} are not parity-fair")
    thresholds = excess_levels(model, theta)
    disagreement = 0.0
    for s, mask in masks.items():
        d = gs.groups[s]
        star = d.atoms >= thresholds[s]
        gap = np.abs(d.atoms - thresholds[s]) * (star != mask)
        disagreement += gs.priors[s] * float(np.dot(d.weights, gap))
    stats = rank_stats(gs, ranks)
    d0, d1, d2 = m.d
    den = d0 + d1 * stats.p_pos_joint + d2 * stats.p_pos
    if den <= DENOMINATOR_EPS:
        raise OutsideDomainError("competitor lies outside the measure's domain")
    return excess_coefficient(m, model, theta) * disagreement / den


@dataclass(frozen=True, eq=False)
class ClassifierSpec:
    """``1{f* >= theta}`` together with its per-group raw-score thresholds."""

    theta: float
    thresholds: dict
    model: object = field(repr=False)

    def predict(self, score, group):
        return _to_int(score, np.asarray(transform(self.model, score, group)) >= self.theta)

    def predict_raw(self, score, group):
        score_arr = np.clip(np.asarray(score, dtype=float), *_range(self.model, group))
        return _to_int(score, score_arr >= self.thresholds[group])


def classifier(m, model):
    theta = solve_threshold(m, model)
    return ClassifierSpec(theta, group_thresholds(model, theta), model)


def _range(model, group):
    d = model.gs.groups[group]
    return d.atoms[0], d.atoms[-1]


def _to_int(x, mask):
    return int(mask) if np.ndim(x) == 0 else mask.astype(int)
