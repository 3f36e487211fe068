from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import matched_instance, symmetric_pair
from parity_opt.barycenter import (
    GroupedScores,
    barycenter_distribution,
    barycenter_objective,
    barycenter_quantile,
    barycenter_rank,
    solve_gamma_star,
    transport_map,
)
from parity_opt.empirical import WeightedSample1D, ks_distance, pushforward, w2
from parity_opt.errors import DegenerateDistributionError


def frac_quantile(atoms, p):
    """Exact plotting-rank interpolation with rationals (uniform weights)."""
    n = len(atoms)
    ranks = [Fraction(2 * i + 1, 2 * n) for i in range(n)]
    atoms = [Fraction(a) for a in atoms]
    if p <= ranks[0]:
        return atoms[0]
    if p >= ranks[-1]:
        return atoms[-1]
    i = max(k for k in range(n) if ranks[k] <= p)
    if i == n - 1:
        return atoms[-1]
    t = (p - ranks[i]) / (ranks[i + 1] - ranks[i])
    return atoms[i] + t * (atoms[i + 1] - atoms[i])


class TestGroupedScores:
    def test_priors_default_to_mass(self):
        gs = GroupedScores.from_samples({"a": [0.1, 0.2, 0.3], "b": [0.5]})
        assert gs.priors == {"a": 0.75, "b": 0.25}

    def test_rejects_bad_priors(self):
        d = WeightedSample1D([0.1, 0.2])
        with pytest.raises(ValueError):
            GroupedScores({"a": d}, {"a": 0.5})
        with pytest.raises(ValueError):
            GroupedScores({"a": d, "b": d}, {"a": 1.0, "b": 0.0})
        with pytest.raises(ValueError):
            GroupedScores({"a": d}, {"b": 1.0})


class TestQuantile:
    def test_matched_rank_example(self):
        assert barycenter_quantile(symmetric_pair(), 0.125) == pytest.approx(0.2, abs=1e-15)

    def test_single_group(self):
        d = WeightedSample1D([0.1, 0.4, 0.9])
        gs = GroupedScores({0: d}, {0: 1.0})
        p = np.linspace(0, 1, 11)
        assert np.array_equal(barycenter_quantile(gs, p), d.interp_quantile(p))

    def test_identical_groups(self):
        d = WeightedSample1D([0.1, 0.4, 0.9])
        gs = GroupedScores({0: d, 1: d}, {0: 0.3, 1: 0.7})
        p = np.linspace(0, 1, 11)
        assert np.allclose(barycenter_quantile(gs, p), d.interp_quantile(p), atol=1e-15)

    def test_degenerate_group(self):
        gs = GroupedScores.from_samples({0: [0.5], 1: [0.1, 0.2]})
        with pytest.raises(DegenerateDistributionError):
            barycenter_quantile(gs, 0.5)

    @given(st.integers(0, 500), st.integers(2, 9), st.fractions(0, 1, max_denominator=1000))
    def test_matches_rational_oracle(self, seed, n, p):
        rng = np.random.default_rng(seed)
        a, b = np.round(rng.random(n), 6), np.round(rng.random(n), 6)
        gs = GroupedScores.from_samples({0: a, 1: b}, priors={0: 0.25, 1: 0.75})
        if len(gs.groups[0]) != n or len(gs.groups[1]) != n:
            return
        exact = Fraction(1, 4) * frac_quantile(sorted(a), p) + Fraction(3, 4) * frac_quantile(sorted(b), p)
        assert barycenter_quantile(gs, float(p)) == pytest.approx(float(exact), abs=1e-12)

    @given(st.integers(0, 500))
    def test_rank_is_exact_inverse(self, seed):
        gs = matched_instance(seed, k=3, n=15)
        lo = min(d.plotting_ranks[0] for d in gs.groups.values())
        hi = max(d.plotting_ranks[-1] for d in gs.groups.values())
        p = np.linspace(lo, hi, 50)
        assert np.allclose(barycenter_rank(gs, barycenter_quantile(gs, p)), p, atol=1e-12)


class TestDistribution:
    def test_symmetric_example(self):
        b = barycenter_distribution(symmetric_pair(), 4)
        assert np.allclose(b.atoms, [0.2, 0.4, 0.6, 0.8], atol=1e-15)

    def test_single_group_recovers_atoms(self):
        d = WeightedSample1D(np.random.default_rng(3).random(25))
        b = barycenter_distribution(GroupedScores({0: d}, {0: 1.0}), 25)
        assert np.allclose(b.atoms, d.atoms, atol=1e-12)

    def test_beats_inputs_as_candidates(self):
        gs = matched_instance(7, k=3, n=60)

        def cost(nu):
            return sum(gs.priors[s] * w2(d, nu) ** 2 for s, d in gs.groups.items())

        assert barycenter_objective(gs, gs.groups["g0"]) == pytest.approx(cost(gs.groups["g0"]), abs=1e-15)
        bary = barycenter_distribution(gs, 64)
        assert all(cost(bary) <= cost(d) for d in gs.groups.values())


class TestTransport:
    def test_examples(self):
        gs = symmetric_pair()
        assert transport_map(gs, 1, 0.1) == pytest.approx(0.2, abs=1e-15)
        d = WeightedSample1D([0.2, 0.5, 0.6])
        one = GroupedScores({0: d}, {0: 1.0})
        assert np.allclose(transport_map(one, 0, d.atoms), d.atoms, atol=1e-12)
        two = GroupedScores({0: d, 1: d}, {0: 0.5, 1: 0.5})
        assert np.allclose(transport_map(two, 1, d.atoms), d.atoms, atol=1e-12)

    @given(st.integers(0, 500))
    def test_strictly_increasing(self, seed):
        gs = matched_instance(seed, k=2, n=20)
        for s, d in gs.groups.items():
            t = np.linspace(d.atoms[0], d.atoms[-1], 100)
            assert np.all(np.diff(transport_map(gs, s, t)) > 0)

    @given(st.integers(0, 500), st.integers(5, 60))
    def test_pushforwards_close_in_ks(self, seed, n):
        gs = matched_instance(seed, k=2, n=n)
        pushed = [pushforward(d, lambda t, s=s: transport_map(gs, s, t)) for s, d in gs.groups.items()]
        assert ks_distance(*pushed) <= 2.0 / n

    @given(st.integers(0, 500), st.integers(2, 40), st.integers(2, 3))
    def test_mean_preserved(self, seed, n, k):
        gs = matched_instance(seed, k=k, n=n)
        pushed = sum(
            gs.priors[s] * pushforward(d, lambda t, s=s: transport_map(gs, s, t)).mean()
            for s, d in gs.groups.items()
        )
        assert pushed == pytest.approx(gs.mean_score(), abs=1e-10)


class TestGammaStar:
    def test_examples(self):
        assert solve_gamma_star(symmetric_pair()) == pytest.approx(0.5, abs=1e-12)
        high = GroupedScores.from_samples({0: [0.6, 0.7, 0.9]})
        assert solve_gamma_star(high) == 0.0
        low = GroupedScores.from_samples({0: [0.1, 0.2]})
        assert solve_gamma_star(low) == 1.0
        assert solve_gamma_star(GroupedScores.from_samples({0: [0.0, 1.0]})) == pytest.approx(0.5, abs=1e-12)

    @given(st.integers(0, 500))
    def test_residual(self, seed):
        gs = matched_instance(seed, k=3, n=30)
        g = solve_gamma_star(gs)
        if 0.0 < g < 1.0:
            assert abs(barycenter_quantile(gs, g) - 0.5) <= 1e-12
