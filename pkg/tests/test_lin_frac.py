from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import matched_instance, symmetric_pair
from parity_opt import fair_score as fs
from parity_opt import lin_frac as lf
from parity_opt.barycenter import GroupedScores
from parity_opt.errors import FairnessPreconditionError, InvalidMeasureError, OutsideDomainError

PRESET_BRANCH = {"accuracy": "C2", "f_beta": "C1", "jaccard": "C1", "am": "C2", "recall": "C2"}


def quarter_model():
    # fair scores {0.2, 0.4, 0.6, 0.8}, label prior 0.5
    return fs.fit(symmetric_pair(), grid=4)


def f1_root_oracle(atoms, prior):
    """Root of prior * theta = E(f - theta)_+ by scanning the linear pieces in exact arithmetic."""
    atoms = sorted(Fraction(a) for a in atoms)
    n = len(atoms)
    knots = [Fraction(0)] + atoms + [Fraction(1)]
    for lo, hi in zip(knots, knots[1:]):
        above = [a for a in atoms if a > lo]
        # on (lo, hi]: E(f - theta)_+ = (sum(above) - len(above) * theta) / n
        theta = (sum(above, Fraction(0)) / n) / (Fraction(prior) + Fraction(len(above), n))
        if lo <= theta <= hi:
            return theta
    raise AssertionError("no root")


def random_stats(rng, p, size):
    pos = rng.random(size)
    lo = np.maximum(0.0, pos - (1.0 - p))
    hi = np.minimum(pos, p)
    return pos, lo + rng.random(size) * (hi - lo)


class TestValidate:
    @pytest.mark.parametrize("name", sorted(PRESET_BRANCH))
    @pytest.mark.parametrize("p", [0.1, 0.5, 0.83])
    def test_presets(self, name, p):
        assert lf.validate(lf.preset(name, p)).branch == PRESET_BRANCH[name]

    @pytest.mark.parametrize("name", sorted(PRESET_BRANCH))
    def test_negated_rejected_by_denominator(self, name):
        v = lf.validate(lf.preset(name, 0.4).negated())
        assert v.branch == "invalid" and v.reason.startswith("denominator")

    def test_names_first_violation(self):
        # d2*n1 > n2*d1 holds, ratio condition fails
        m = lf.LFMeasure((-1.0, 1.0, 0.0), (0.0, 0.0, 1.0), 0.3)
        v = lf.validate(m)
        assert v.branch == "invalid" and v.reason.startswith("C1.b")
        with pytest.raises(InvalidMeasureError) as info:
            lf.require_valid(m)
        assert info.value.diagnostics is v or info.value.diagnostics.reason == v.reason

    def test_c2_range_violation(self):
        m = lf.LFMeasure((1.0, 2.0, -3.0), (1.0, 0.0, 0.0), 0.5)
        assert lf.validate(m).reason.startswith("C2.c")

    def test_jaccard_needs_positive_prior(self):
        with pytest.raises(ValueError):
            lf.jaccard(0.0)

    @given(st.lists(st.integers(-5, 5), min_size=6, max_size=6), st.fractions(0, 1, max_denominator=20))
    def test_predicates_negation_invariant(self, coeffs, p):
        m = lf.LFMeasure(tuple(coeffs[:3]), tuple(coeffs[3:]), float(p))
        assert lf.condition_predicates(m) == lf.condition_predicates(m.negated())
        preds = lf.condition_predicates(m)
        assert not (preds["C1"] and preds["C2"])

    def test_measure_from_spec(self):
        assert lf.measure_from_spec({"preset": "f_beta", "beta": 2}, 0.3).d == (1.2, 0.0, 1.0)
        m = lf.measure_from_spec({"n": [0, 1, 0], "d": [0.2, 0, 0], "label_prior": 0.2}, 0.9)
        assert m.label_prior == 0.2
        with pytest.raises(ValueError):
            lf.measure_from_spec({"preset": "accuracy"})


class TestUtility:
    def test_examples(self):
        p = 0.3
        assert lf.utility(lf.accuracy(p), lf.ConfusionStats(p, p)) == pytest.approx(1.0)
        assert lf.utility(lf.f_beta(p), lf.ConfusionStats(0.0, 0.0)) == 0.0
        assert lf.utility(lf.recall(p), lf.ConfusionStats(p, 1.0)) == pytest.approx(1.0)

    def test_outside_domain(self):
        m = lf.LFMeasure((0, 1, 0), (0, 0, 1), 0.5)
        with pytest.raises(OutsideDomainError):
            lf.utility(m, lf.ConfusionStats(0.0, 0.0))

    def test_inconsistent_stats(self):
        with pytest.raises(ValueError):
            lf.ConfusionStats(0.6, 0.5)


class TestThreshold:
    def test_accuracy_is_half(self):
        assert lf.solve_threshold(lf.accuracy(0.37), quarter_model()) == 0.5

    def test_recall_is_zero(self):
        assert lf.solve_threshold(lf.recall(0.5), quarter_model()) == 0.0

    def test_f1_quarter_example(self):
        model = quarter_model()
        m = lf.f_beta(0.5)
        oracle = f1_root_oracle(["0.2", "0.4", "0.6", "0.8"], "0.5")
        assert oracle == Fraction(9, 25)
        theta = lf.solve_threshold(m, model)
        assert abs(theta - float(oracle)) <= 1e-9
        assert abs(lf.fixed_point_residual(m, model, theta)) <= 1e-12

    @given(st.integers(0, 1000), st.integers(2, 30))
    def test_f1_matches_rational_oracle(self, seed, n):
        rng = np.random.default_rng(seed)
        atoms = np.round(np.sort(rng.random(n)), 4)
        if len(set(atoms)) < n:
            return
        model = fs.fit(GroupedScores.from_samples({0: atoms}), grid=n)
        m = lf.f_beta(model.label_prior)
        oracle = f1_root_oracle(model.barycenter.atoms, model.label_prior)
        assert lf.solve_threshold(m, model) == pytest.approx(float(oracle), abs=1e-9)

    def test_invalid_measure(self):
        with pytest.raises(InvalidMeasureError):
            lf.solve_threshold(lf.accuracy(0.5).negated(), quarter_model())


class TestOptimalUtility:
    def test_examples(self):
        model = quarter_model()
        assert lf.optimal_utility(lf.accuracy(0.5), model, 0.5) == pytest.approx(0.7, abs=1e-15)
        f1 = lf.f_beta(0.5)
        assert lf.optimal_utility(f1, model, lf.solve_threshold(f1, model)) == pytest.approx(0.72, abs=1e-12)
        assert lf.optimal_utility(lf.recall(0.5), model, 0.0) == 1.0

    @given(st.integers(0, 1000), st.sampled_from(sorted(PRESET_BRANCH)), st.integers(2, 3))
    def test_matches_direct_utility(self, seed, name, k):
        gs = matched_instance(seed, k=k, n=30)
        model = fs.fit(gs, grid=30)
        m = lf.preset(name, model.label_prior)
        spec = lf.classifier(m, model)
        joint = pos = 0.0
        for s, d in gs.groups.items():
            g = spec.predict(d.atoms, s)
            joint += gs.priors[s] * np.dot(d.weights, d.atoms * g)
            pos += gs.priors[s] * np.dot(d.weights, g)
        direct = lf.utility(m, lf.ConfusionStats(joint, pos))
        assert lf.optimal_utility(m, model, spec.theta) == pytest.approx(direct, abs=1e-10)

    @given(st.integers(0, 1000), st.sampled_from(sorted(PRESET_BRANCH)))
    def test_coefficient_identity(self, seed, name):
        model = fs.fit(matched_instance(seed, n=25), grid=25)
        m = lf.preset(name, model.label_prior)
        theta = lf.solve_threshold(m, model)
        u = lf.optimal_utility(m, model, theta)
        assert m.n[1] - m.d[1] * u == pytest.approx(lf.excess_coefficient(m, model, theta), abs=1e-12)


class TestExcess:
    def test_zero_at_optimum(self):
        model = fs.fit(matched_instance(2, n=20), grid=20)
        m = lf.accuracy(model.label_prior)
        assert lf.excess_score(m, model, 0.5, model.gamma_star) == 0.0

    def test_accuracy_shift_by_one_atom(self):
        n = 20
        model = fs.fit(matched_instance(5, n=n), grid=n)
        m = lf.accuracy(model.label_prior)
        theta = lf.solve_threshold(m, model)
        gamma = model.gamma_star + 1.0 / n
        direct = lf.optimal_utility(m, model, theta) - lf.utility(m, lf.rank_stats(model.gs, gamma))
        assert lf.excess_score(m, model, theta, gamma) == pytest.approx(direct, abs=1e-10)
        assert direct > 0

    def test_f1_all_positive(self):
        model = fs.fit(matched_instance(6, n=20), grid=20)
        m = lf.f_beta(model.label_prior)
        theta = lf.solve_threshold(m, model)
        all_pos = lf.utility(m, lf.ConfusionStats(model.label_prior, 1.0))
        excess = lf.excess_score(m, model, theta, 0.0)
        assert excess == pytest.approx(lf.optimal_utility(m, model, theta) - all_pos, abs=1e-10)

    @given(st.integers(0, 1000), st.floats(0.0, 1.0))
    def test_recall_levels_outside_fair_range(self, seed, gamma):
        # theta* = 0 lies below every fair score
        model = fs.fit(matched_instance(seed, k=3, n=15), grid=15)
        m = lf.recall(model.label_prior)
        levels = lf.excess_levels(model, 0.0)
        assert sum(model.gs.priors[s] * v for s, v in levels.items()) == pytest.approx(0.0, abs=1e-15)
        direct = 1.0 - lf.utility(m, lf.rank_stats(model.gs, gamma))
        assert lf.excess_score(m, model, 0.0, gamma) == pytest.approx(direct, abs=1e-12)

    def test_unfair_competitor_rejected(self):
        model = fs.fit(matched_instance(6, n=20), grid=20)
        m = lf.accuracy(model.label_prior)
        with pytest.raises(FairnessPreconditionError):
            lf.excess_score(m, model, 0.5, {"g0": 0.0, "g1": 1.0})


class TestLemmas:
    @pytest.mark.parametrize("name", sorted(PRESET_BRANCH))
    def test_denominator_positive_and_sign(self, name):
        rng = np.random.default_rng(1)
        for p in rng.uniform(0.05, 0.95, 10):
            m = lf.preset(name, p)
            pos, joint = random_stats(rng, p, 100)
            den = m.d[0] + m.d[1] * joint + m.d[2] * pos
            assert np.all(den >= 0)
            u = np.array([lf.utility(m, lf.ConfusionStats(j, q)) for j, q in zip(joint, pos)])
            assert np.all(m.n[1] - m.d[1] * u >= -1e-12)


class TestClassifierSpec:
    @given(st.integers(0, 1000), st.sampled_from(sorted(PRESET_BRANCH)))
    def test_representations_agree(self, seed, name):
        model = fs.fit(matched_instance(seed, n=20), grid=20)
        spec = lf.classifier(lf.preset(name, model.label_prior), model)
        for s, d in model.gs.groups.items():
            t = np.linspace(0, 1, 97)
            fair = np.asarray(fs.transform(model, t, s))
            clear = np.abs(fair - spec.theta) > 1e-12
            assert np.array_equal(spec.predict(t, s)[clear], spec.predict_raw(t, s)[clear])

    def test_accuracy_is_classify_half(self):
        model = fs.fit(matched_instance(3, k=3, n=30))
        spec = lf.classifier(lf.accuracy(model.label_prior), model)
        for s, d in model.gs.groups.items():
            assert np.array_equal(spec.predict(d.atoms, s), fs.classify_half(model, d.atoms, s))

    def test_recall_all_positive(self):
        model = fs.fit(matched_instance(3, n=30))
        spec = lf.classifier(lf.recall(model.label_prior), model)
        assert all(spec.predict(d.atoms, s).all() for s, d in model.gs.groups.items())
