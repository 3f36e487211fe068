"""The optimal fair score and the classifiers obtained by thresholding it.

The fair score sends each group's scores to the barycenter of the group
laws through the monotone map ``s, t -> Qbar(F_s(t))``.  Thresholding it at
1/2 gives the accuracy-optimal classifier under demographic parity; the same
classifier is ``F_s(t) >= gamma_star`` in rank coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .barycenter import (
    DEFAULT_GRID,
    GroupedScores,
    barycenter_distribution,
    barycenter_knots,
    barycenter_rank,
    solve_gamma_star,
    transport_map,
)
from .empirical import WeightedSample1D, ks_distance, pushforward
from .errors import DomainError

SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class FairScoreModel:
    gs: GroupedScores
    gamma_star: float
    barycenter: WeightedSample1D
    label_prior: float
    grid: int = DEFAULT_GRID
    _knots: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self._knots is None:
            object.__setattr__(self, "_knots", barycenter_knots(self.gs))

    @property
    def groups(self):
        return self.gs.labels

    def expected_excess(self, theta):
        """``E[(f* - theta)_+]`` on the barycenter discretization."""
        b = self.barycenter
        return float(np.dot(b.weights, np.maximum(b.atoms - theta, 0.0)))

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "grid": self.grid,
            "gamma_star": self.gamma_star,
            "label_prior": self.label_prior,
            "groups": [
                {"id": s, "prior": self.gs.priors[s], **d.to_dict()}
                for s, d in self.gs.groups.items()
            ],
        }

    @classmethod
    def from_dict(cls, payload):
        groups = {g["id"]: WeightedSample1D(g["atoms"], g["weights"]) for g in payload["groups"]}
        priors = {g["id"]: g["prior"] for g in payload["groups"]}
        gs = GroupedScores(groups, priors)
        grid = int(payload["grid"])
        return cls(
            gs=gs,
            gamma_star=float(payload["gamma_star"]),
            barycenter=barycenter_distribution(gs, grid),
            label_prior=float(payload["label_prior"]),
            grid=grid,
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit(gs, grid=DEFAULT_GRID):
    """Precompute the barycenter and ``gamma_star`` for a set of group score laws."""
    for s, d in gs.groups.items():
        if d.atoms[0] < 0.0 or d.atoms[-1] > 1.0:
            raise DomainError(f"group {s!r} has scores outside [0, 1]")
    gs.require_nondegenerate()
    return FairScoreModel(
        gs=gs,
        gamma_star=solve_gamma_star(gs),
        barycenter=barycenter_distribution(gs, grid),
        label_prior=gs.mean_score(),
        grid=grid,
    )


def transform(model, score, group):
    return transport_map(model.gs, group, score)


def classify_half(model, score, group):
    """``1{f*(score, group) >= 1/2}``."""
    return _as_int(score, np.asarray(transform(model, score, group)) >= 0.5)


def classify_rank(model, score, group):
    """The same classifier through within-group ranks: ``1{F_s(score) >= gamma_star}``."""
    ranks = model.gs.groups[group].interp_cdf(score)
    return _as_int(score, np.asarray(ranks) >= model.gamma_star)


def fair_rank(model, theta):
    """Barycenter rank of the fair-score level ``theta``."""
    return barycenter_rank(model.gs, theta, model._knots)


def group_thresholds(model, theta):
    """Raw-score threshold per group equivalent to ``f* >= theta``.

    Above the largest fair score nobody is selected and the thresholds are ``inf``.
    """
    if theta > model._knots[1][-1]:
        return {s: np.inf for s in model.gs.groups}
    beta = fair_rank(model, theta)
    return {s: d.interp_quantile(beta) for s, d in model.gs.groups.items()}


def pushforward_groups(model, gs=None):
    """Law of the fair score within each group of ``gs`` (training data by default)."""
    gs = gs or model.gs
    return {
        s: pushforward(d, lambda t, s=s: transform(model, t, s))
        for s, d in gs.groups.items()
    }


def dp_gap(model, eval_gs):
    """Largest pairwise KS distance between the groups' fair-score laws."""
    pushed = list(pushforward_groups(model, eval_gs).values())
    if len(pushed) < 2:
        return 0.0
    return max(ks_distance(a, b) for a, b in combinations(pushed, 2))


def clamped_fraction(model, eval_gs):
    """Prior-weighted mass of evaluation scores outside the training range of their group."""
    total = 0.0
    for s, d in eval_gs.groups.items():
        train = model.gs.groups[s]
        outside = (d.atoms < train.atoms[0]) | (d.atoms > train.atoms[-1])
        total += eval_gs.priors[s] * float(np.dot(d.weights, outside))
    return total


def average_stability_check(model):
    """``|E[f*] - P(Y = 1)|`` on the empirical coupling."""
    pushed = pushforward_groups(model)
    return abs(sum(model.gs.priors[s] * d.mean() for s, d in pushed.items()) - model.label_prior)


def partial_stability_check(model, theta):
    """``|E[(f* - eta) 1{f* >= theta}]|`` with each atom paired to its own image."""
    total = 0.0
    for s, d in model.gs.groups.items():
        fair = np.asarray(transform(model, d.atoms, s))
        total += model.gs.priors[s] * float(np.dot(d.weights, (fair - d.atoms) * (fair >= theta)))
    return abs(total)


def _as_int(x, mask):
    return int(mask) if np.ndim(x) == 0 else mask.astype(int)
