"""Tests for the mixture engine and the addition combiner."""

import math

import numpy as np
import pytest

from betolo.core_betting import log_kt_potential
from betolo.olo_engines import KtOlo
from betolo.mixture import (
    AdditionCombiner,
    MixtureOlo,
    MixtureState,
    addition_combine,
    mixture_action,
    mixture_update,
)
from betolo.per_state import ProductKtState, product_kt_action, product_kt_update


def ball_point(rng, d):
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return v * rng.uniform() ** (1.0 / d)


def shadow(dim):
    return ProductKtState(dim, track_wealth=False)


class TestMixtureAction:
    def test_single_component_matches_product_kt(self):
        rng = np.random.default_rng(0)
        mix = MixtureOlo([shadow(3)], initial_wealth=1.25)
        ref = ProductKtState(3, initial_wealth=1.25)
        for _ in range(150):
            h = int(rng.integers(0, 3))
            g = ball_point(rng, 3)
            assert np.array_equal(mix.action([h]), product_kt_action(ref, h))
            mix.update([h], g)
            product_kt_update(ref, h, g)
            assert mix.wealth == ref.ledger.current_wealth

    def test_first_round_zero_action(self):
        mix = MixtureOlo.of_state_tables(4, 3)
        assert np.array_equal(mix.action([0, 0, 0]), np.zeros(4))

    def test_posterior_concentrates_on_predictive_component(self):
        # Component 1 keys states off the previous gradient's sign, which
        # makes the alternating stream perfectly predictable; component 2
        # sees a single state and learns nothing.
        e1 = np.array([1.0, 0.0])
        mix = MixtureOlo([shadow(2), shadow(2)])
        prev_sign = 1
        for t in range(1, 201):
            g = -e1 if t % 2 == 1 else e1
            mix.update([prev_sign, 0], g)
            prev_sign = 1 if g[0] >= 0 else -1
        p = mix.posterior()
        assert p[0] > 0.99
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_symbol_count_mismatch(self):
        mix = MixtureOlo.of_state_tables(2, 2)
        with pytest.raises(ValueError):
            mix.action([0])


class TestMixtureUpdate:
    def test_from_scratch_potential_after_random_rounds(self):
        rng = np.random.default_rng(1)
        mix = MixtureOlo.of_state_tables(3, 3)
        state_counts = (2, 3, 4)
        for _ in range(500):
            hs = [int(rng.integers(0, s)) for s in state_counts]
            mix.update(hs, ball_point(rng, 3))
        incremental = mix.state.log_mixture_potential()
        fresh_terms = [
            lw + c.recompute_log_potential()
            for lw, c in zip(mix.state.log_prior, mix.state.components)
        ]
        fresh = np.logaddexp.reduce(fresh_terms)
        assert incremental == pytest.approx(float(fresh), abs=1e-9)
        mix.state.check(tol=1e-9)

    def test_component_domination(self):
        rng = np.random.default_rng(2)
        mix = MixtureOlo.of_state_tables(2, 3)
        for _ in range(400):
            hs = [int(rng.integers(0, s)) for s in (2, 4, 8)]
            mix.update(hs, ball_point(rng, 2))
        ln_w = math.log(mix.wealth)
        for lw, c in zip(mix.state.log_prior, mix.state.components):
            assert ln_w >= lw + c.log_potential() - 1e-9

    def test_identical_components_match_single_engine(self):
        rng = np.random.default_rng(3)
        mix = MixtureOlo.of_state_tables(2, 3)
        ref = ProductKtState(2, initial_wealth=1.0)
        for _ in range(200):
            h = int(rng.integers(0, 4))
            g = ball_point(rng, 2)
            a_mix = mix.action([h, h, h])
            a_ref = product_kt_action(ref, h)
            assert np.allclose(a_mix, a_ref, rtol=1e-12, atol=1e-15)
            mix.update([h, h, h], g)
            product_kt_update(ref, h, g)
        assert mix.wealth == pytest.approx(ref.ledger.current_wealth, rel=1e-12)

    def test_wealth_bound_random_runs(self):
        rng = np.random.default_rng(4)
        for i in range(100):
            m = 2 if i % 2 == 0 else 5
            mix = MixtureOlo.of_state_tables(3, m)
            for _ in range(500):
                hs = [int(rng.integers(0, 3)) for _ in range(m)]
                mix.update(hs, ball_point(rng, 3))
            lhs = math.log(mix.wealth)
            rhs = mix.state.log_mixture_potential()
            assert lhs >= rhs - 1e-9

    def test_posterior_sums_to_one_every_round(self):
        rng = np.random.default_rng(5)
        mix = MixtureOlo.of_state_tables(2, 4)
        for _ in range(100):
            hs = [int(rng.integers(0, 2)) for _ in range(4)]
            mix.update(hs, ball_point(rng, 2))
            assert float(mix.posterior().sum()) == pytest.approx(1.0, abs=1e-12)


class TestPriorValidation:
    def test_rejects_bad_priors(self):
        comps = [shadow(2), shadow(2)]
        with pytest.raises(ValueError):
            MixtureState(comps, prior=[0.5, 0.6])
        with pytest.raises(ValueError):
            MixtureState(comps, prior=[1.0, 0.0])
        with pytest.raises(ValueError):
            MixtureState(comps, prior=[-0.5, 1.5])
        with pytest.raises(ValueError):
            MixtureState([], prior=None)

    def test_accepts_valid_prior(self):
        MixtureState([shadow(2), shadow(2)], prior=[0.3, 0.7])


class TestAdditionCombiner:
    def test_single_engine_identity(self):
        rng = np.random.default_rng(6)
        solo = KtOlo(dim=2)
        ref = KtOlo(dim=2)
        combined = addition_combine([solo])
        for _ in range(50):
            g = ball_point(rng, 2)
            assert np.array_equal(combined.action(), ref.action())
            combined.update(g)
            ref.update(g)
        assert combined.wealth == ref.wealth

    def test_two_copies_double_the_action(self):
        rng = np.random.default_rng(7)
        combined = AdditionCombiner([KtOlo(dim=2), KtOlo(dim=2)])
        solo = KtOlo(dim=2)
        for _ in range(80):
            g = ball_point(rng, 2)
            assert np.allclose(combined.action(), 2.0 * solo.action(), rtol=1e-15)
            combined.update(g)
            solo.update(g)

    def test_addition_regret_versus_each_member(self):
        rng = np.random.default_rng(8)
        wealths = (0.5, 1.0, 2.0)
        engines = [KtOlo(dim=3, initial_wealth=w) for w in wealths]
        combined = addition_combine(engines)
        rewards = [0.0, 0.0, 0.0]
        total = 0.0
        for _ in range(300):
            g = ball_point(rng, 3)
            acts = [e.action() for e in engines]
            for i, a in enumerate(acts):
                rewards[i] += float(np.dot(g, a))
            total += float(np.dot(g, sum(acts)))
            combined.update(g)
        for m in range(3):
            others = sum(w for i, w in enumerate(wealths) if i != m)
            assert total >= rewards[m] - others - 1e-9

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            addition_combine([])


class TestSanity:
    def test_mixture_potential_at_start_is_zero(self):
        mix = MixtureOlo.of_state_tables(2, 4)
        assert mix.state.log_mixture_potential() == pytest.approx(0.0, abs=1e-12)

    def test_single_state_single_component_reduces_to_kt(self):
        rng = np.random.default_rng(9)
        mix = MixtureOlo([shadow(1)])
        total, T = 0.0, 64
        gs = [float(rng.uniform(-1, 1)) for _ in range(T)]
        for g in gs:
            mix.update([0], np.array([g]))
            total += g
        assert math.log(mix.wealth) >= log_kt_potential(T, abs(total)) - 1e-9
