"""Univariate weighted empirical measures.

A :class:`WeightedSample1D` stores sorted, de-duplicated atoms with positive
weights summing to one.  Besides the step CDF and its generalized inverse it
offers a piecewise-linear *continuity surrogate*: atom ``i`` is placed at the
plotting rank ``sum(w[:i]) + w[i] / 2`` and ranks are interpolated linearly
between consecutive atoms.  Below the first plotting rank (above the last)
the surrogate quantile is clamped to the smallest (largest) atom, so the
surrogate CDF maps ``[atoms[0], atoms[-1]]`` onto
``[w[0] / 2, 1 - w[-1] / 2]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDistributionError, DomainError

WEIGHT_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


def _as_output(x, values):
    if np.ndim(x) == 0:
        return float(values)
    return values


@dataclass(frozen=True, eq=False)
class WeightedSample1D:
    """Discrete probability measure on the real line.

    Parameters
    ----------
    atoms : array_like
        Support points.  Sorted and merged on construction.
    weights : array_like, optional
        Positive masses, one per atom.  Uniform when omitted.  A total within
        ``1e-9`` of one is renormalized; anything else is rejected (use
        :meth:`from_values` with ``normalize=True`` for raw frequency weights).
    """

    atoms: np.ndarray
    weights: np.ndarray = None
    _cum: np.ndarray = field(init=False, repr=False)
    _ranks: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        if atoms.size == 0:
            raise ValueError("a measure needs at least one atom")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms must be finite")
        if self.weights is None:
            weights = np.full(atoms.size, 1.0 / atoms.size)
        else:
            weights = np.asarray(self.weights, dtype=float).ravel()
        if weights.shape != atoms.shape:
            raise ValueError("atoms and weights must have the same length")
        if not np.all(weights > 0):
            raise ValueError("weights must be strictly positive")
        total = weights.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        atoms, weights = _merge(atoms, weights)
        # leave already-normalized weights untouched so reconstruction is bit-stable
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            weights = weights / weights.sum()
        cum = np.cumsum(weights)
        cum[-1] = 1.0
        ranks = cum - weights / 2.0
        for name, value in (("atoms", atoms), ("weights", weights), ("_cum", cum), ("_ranks", ranks)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_values(cls, values, weights=None, normalize=True):
        """Build a measure from raw samples and optional nonnegative frequency weights."""
        values = np.asarray(values, dtype=float).ravel()
        if weights is None:
            return cls(values)
        weights = np.asarray(weights, dtype=float).ravel()
        if normalize:
            if not np.all(weights > 0):
                raise ValueError("weights must be strictly positive")
            weights = weights / weights.sum()
        return cls(values, weights)

    @classmethod
    def point_mass(cls, value):
        return cls([value], [1.0])

    def __len__(self):
        return self.atoms.size

    def __repr__(self):
        return f"WeightedSample1D(n={len(self)}, min={self.atoms[0]:.6g}, max={self.atoms[-1]:.6g})"

    @property
    def plotting_ranks(self):
        return self._ranks

    @property
    def is_degenerate(self):
        return self.atoms.size < 2

    def mean(self):
        return float(np.dot(self.atoms, self.weights))

    def same_as(self, other, atol=0.0):
        """Atom-wise and weight-wise comparison of canonical forms."""
        return (
            len(self) == len(other)
            and np.allclose(self.atoms, other.atoms, rtol=0.0, atol=atol)
            and np.allclose(self.weights, other.weights, rtol=0.0, atol=max(atol, WEIGHT_TOL))
        )

    # step functions

    def cdf(self, x):
        """Right-continuous CDF ``mu((-inf, x])``."""
        idx = np.searchsorted(self.atoms, np.asarray(x, dtype=float), side="right") - 1
        values = np.where(idx >= 0, self._cum[np.clip(idx, 0, None)], 0.0)
        return _as_output(x, values)

    def quantile(self, p):
        """Generalized inverse ``min{x : F(x) >= p}``."""
        p_arr = _check_rank(p)
        idx = np.searchsorted(self._cum, p_arr, side="left")
        return _as_output(p, self.atoms[np.clip(idx, 0, self.atoms.size - 1)])

    # continuity surrogate

    def interp_cdf(self, x):
        """Piecewise-linear CDF surrogate; ``x`` is clamped to the atom range first."""
        self._require_nondegenerate()
        x_arr = np.clip(np.asarray(x, dtype=float), self.atoms[0], self.atoms[-1])
        return _as_output(x, np.interp(x_arr, self.atoms, self._ranks))

    def interp_quantile(self, p):
        """Inverse of :meth:`interp_cdf`, clamped to the extreme atoms outside the rank range."""
        self._require_nondegenerate()
        p_arr = _check_rank(p)
        return _as_output(p, np.interp(p_arr, self._ranks, self.atoms))

    def _require_nondegenerate(self):
        if self.is_degenerate:
            raise DegenerateDistributionError(
                f"single-atom measure at {self.atoms[0]!r} has no continuous surrogate"
            )

    def to_dict(self):
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, payload):
        return cls(payload["atoms"], payload["weights"])


def _merge(atoms, weights):
    order = np.argsort(atoms, kind="stable")
    atoms, weights = atoms[order], weights[order]
    if atoms.size > 1 and np.any(atoms[1:] == atoms[:-1]):
        unique, inverse = np.unique(atoms, return_inverse=True)
        weights = np.bincount(inverse, weights=weights)
        atoms = unique
    return atoms.copy(), weights.copy()


def _check_rank(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr >= 0.0)) or np.any(~(p_arr <= 1.0)):
        raise DomainError(f"rank must lie in [0, 1], got {p!r}")
    return p_arr


def w2(d1, d2):
    """Wasserstein-2 distance, exact on the common refinement of the two step quantiles."""
    breaks = np.union1d(np.concatenate(([0.0], d1._cum)), d2._cum)
    widths = np.diff(breaks)
    keep = widths > 0
    mids = (breaks[:-1] + breaks[1:])[keep] / 2.0
    diff = d1.quantile(mids) - d2.quantile(mids)
    return float(np.sqrt(np.dot(diff * diff, widths[keep])))


def ks_distance(d1, d2):
    """Sup-distance between step CDFs, evaluated on the union of atoms."""
    grid = np.union1d(d1.atoms, d2.atoms)
    return float(np.max(np.abs(d1.cdf(grid) - d2.cdf(grid))))


def pushforward(d, transform):
    """Image measure under a nondecreasing map.

    ``transform`` is applied to the atom array in one call, so it must accept
    numpy arrays.  Atoms with equal images are merged.
    """
    images = np.asarray(transform(d.atoms), dtype=float).reshape(d.atoms.shape)
    if np.any(np.diff(images) < 0):
        raise ValueError("pushforward requires a nondecreasing map")
    return WeightedSample1D(images, d.weights)
