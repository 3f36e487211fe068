"""Score tables: CSV ingestion and seeded synthetic generators."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .barycenter import GroupedScores
from .empirical import WeightedSample1D

DEFAULT_SEED = 42
SEED_ENV = "PARITY_OPT_SEED"
REQUIRED_COLUMNS = ("score", "group")
OPTIONAL_COLUMNS = ("label", "weight")


class CSVFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Row-level scores with group ids, optional labels and positive weights."""

    scores: np.ndarray
    groups: np.ndarray
    labels: np.ndarray = None
    weights: np.ndarray = None

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        groups = np.asarray(self.groups, dtype=str)
        weights = np.ones(scores.size) if self.weights is None else np.asarray(self.weights, dtype=float)
        if not (scores.shape == groups.shape == weights.shape):
            raise ValueError("columns must have equal lengths")
        if scores.size == 0:
            raise ValueError("no rows")
        if np.any((scores < 0) | (scores > 1)):
            raise ValueError("scores must lie in [0, 1]")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        labels = None
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != scores.shape or np.any((labels != 0) & (labels != 1)):
                raise ValueError("labels must be 0/1, one per row")
        for name, value in (("scores", scores), ("groups", groups), ("labels", labels), ("weights", weights)):
            object.__setattr__(self, name, value)

    def __len__(self):
        return self.scores.size

    @property
    def group_ids(self):
        return sorted(set(self.groups.tolist()))

    @property
    def has_labels(self):
        return self.labels is not None

    def priors(self):
        total = self.weights.sum()
        return {s: float(self.weights[self.groups == s].sum() / total) for s in self.group_ids}

    def to_grouped(self):
        """Group laws with weights normalized within group; priors from total weights."""
        groups = {}
        for s in self.group_ids:
            mask = self.groups == s
            groups[s] = WeightedSample1D.from_values(self.scores[mask], self.weights[mask])
        return GroupedScores(groups, self.priors())

    def label_prior(self):
        """Weighted share of positive labels, or ``None`` without a label column."""
        if self.labels is None:
            return None
        return float(np.dot(self.weights, self.labels) / self.weights.sum())

    def write_csv(self, path):
        header = ["score", "group"] + (["label"] if self.has_labels else []) + ["weight"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh)
            out.writerow(header)
            for i in range(len(self)):
                row = [repr(float(self.scores[i])), self.groups[i]]
                if self.has_labels:
                    row.append(int(self.labels[i]))
                row.append(repr(float(self.weights[i])))
                out.writerow(row)


def ingest(path):
    """Read a ``score,group[,label][,weight]`` CSV into a :class:`ScoreTable`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CSVFormatError("empty file", 1) from None
        if tuple(header[:2]) != REQUIRED_COLUMNS or any(h not in OPTIONAL_COLUMNS for h in header[2:]) \
                or len(set(header)) != len(header):
            raise CSVFormatError(f"header must be score,group[,label][,weight], got {','.join(header)}", 1)
        scores, groups, labels, weights = [], [], [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CSVFormatError(f"expected {len(header)} fields, got {len(row)}", line)
            rec = dict(zip(header, (c.strip() for c in row)))
            try:
                score = float(rec["score"])
            except ValueError:
                raise CSVFormatError(f"score {rec['score']!r} is not a number", line) from None
            if not 0.0 <= score <= 1.0:
                raise CSVFormatError(f"score {score!r} outside [0, 1]", line)
            if not rec["group"]:
                raise CSVFormatError("empty group id", line)
            if "label" in rec:
                if rec["label"] not in ("0", "1"):
                    raise CSVFormatError(f"label {rec['label']!r} is not 0 or 1", line)
                labels.append(int(rec["label"]))
            if "weight" in rec:
                try:
                    weight = float(rec["weight"])
                except ValueError:
                    raise CSVFormatError(f"weight {rec['weight']!r} is not a number", line) from None
                if not (weight > 0 and np.isfinite(weight)):
                    raise CSVFormatError(f"weight {weight!r} must be positive", line)
                weights.append(weight)
            scores.append(score)
            groups.append(rec["group"])
    if not scores:
        raise CSVFormatError("no data rows")
    return ScoreTable(
        np.array(scores),
        np.array(groups, dtype=str),
        np.array(labels) if "label" in header else None,
        np.array(weights) if "weight" in header else None,
    )


def _draw(rng, family, n):
    kind = family.get("family")
    if kind == "beta":
        return rng.beta(float(family["a"]), float(family["b"]), size=n)
    if kind in ("truncated-gaussian", "truncnorm"):
        mu, sigma = float(family["mu"]), float(family["sigma"])
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        law = stats.truncnorm((0.0 - mu) / sigma, (1.0 - mu) / sigma, loc=mu, scale=sigma)
        return law.rvs(size=n, random_state=rng)
    raise ValueError(f"unknown family {kind!r}; expected 'beta' or 'truncated-gaussian'")


def synth_table(spec, seed=None, labels=False):
    """Sample a :class:`ScoreTable` from ``{"n": .., "groups": {id: family}}``.

    Each family is ``{"family": "beta", "a": .., "b": ..}`` or
    ``{"family": "truncated-gaussian", "mu": .., "sigma": ..}``; a group may
    override ``n``.  With ``labels`` a Bernoulli(score) label is drawn per row.
    """
    if seed is None:
        seed = spec.get("seed", default_seed())
    rng = np.random.default_rng(int(seed))
    scores, groups = [], []
    for s, family in spec["groups"].items():
        n = int(family.get("n", spec.get("n", 1000)))
        if n < 1:
            raise ValueError("group size must be positive")
        scores.append(_draw(rng, family, n))
        groups.append(np.full(n, str(s)))
    scores = np.concatenate(scores)
    drawn = (rng.random(scores.size) < scores).astype(int) if labels else None
    return ScoreTable(scores, np.concatenate(groups), drawn)


def synth(spec, seed=None):
    return synth_table(spec, seed).to_grouped()
