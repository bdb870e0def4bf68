import math

import numpy as np
import pytest

import civr
from civr import FULL, CountingOracle, EstimatorState, advance, advance_cost, anchor, anchor_cost, composite_estimate
from civr.model import composite_gradient
from civr.problems import AffineExpectationOracle, PortfolioProblem
from civr.rng import substream


def portfolio(n=12, d=4, seed=3):
    returns = substream(seed, 0).normal(0.05, 0.5, size=(n, d))
    return PortfolioProblem(returns, 0.2)


class TestAnchor:
    def test_full_anchor_is_exact(self):
        oracle = portfolio()
        x0 = np.array([0.1, -0.2, 0.3, 0.0])
        state = anchor(oracle, x0, FULL, rng_key=0)
        y, jac = oracle.eval_full(x0)
        assert np.array_equal(state.y, y)
        assert np.array_equal(state.z, jac)
        assert state.exact

    def test_batch_at_least_n_promoted_to_exact(self):
        oracle = portfolio(n=8)
        x0 = np.zeros(4)
        state = anchor(oracle, x0, 8, rng_key=0)
        assert state.exact
        state = anchor(oracle, x0, 200, rng_key=0)
        assert state.exact

    def test_deterministic_components_give_exact_values(self):
        oracle = AffineExpectationOracle(np.eye(3), np.ones(3), 0.0, 0.0)
        x0 = np.array([1.0, 2.0, 3.0])
        state = anchor(oracle, x0, 5, rng_key=1)
        y, jac = oracle.eval_full(x0)
        assert np.allclose(state.y, y, atol=0)
        assert np.allclose(state.z, jac, atol=0)

    def test_full_requires_exact_capability(self):
        class PureSampler(AffineExpectationOracle):
            @property
            def exact_available(self):
                return False

        oracle = PureSampler(np.eye(2), np.zeros(2), 0.1, 0.1)
        with pytest.raises(ValueError):
            anchor(oracle, np.zeros(2), FULL, rng_key=0)

    def test_zero_batch_rejected(self):
        with pytest.raises(ValueError):
            anchor(portfolio(), np.zeros(4), 0, rng_key=0)

    def test_sampled_anchor_statistics(self):
        # mean of the anchor matches g(x0) within 4 standard errors and the
        # empirical MSE stays under the exact-population bound Var/B * 1.1
        oracle = portfolio(n=30, d=3, seed=9)
        x0 = np.array([0.2, -0.1, 0.4])
        y_exact, _ = oracle.eval_full(x0)
        vals = np.stack([oracle.eval_component(i, x0)[0] for i in range(30)])
        var_pop = float(((vals - vals.mean(axis=0)) ** 2).sum(axis=1).mean())
        B = 6
        reps = 10_000
        ys = np.zeros((reps, 2))
        for r in range(reps):
            ys[r] = anchor(oracle, x0, B, rng_key=(77, r)).y
        se = ys.std(axis=0, ddof=1) / math.sqrt(reps)
        z = np.abs(ys.mean(axis=0) - y_exact) / se
        assert np.all(z <= 4.0)
        mse = float(((ys - y_exact) ** 2).sum(axis=1).mean())
        assert mse <= var_pop / B * 1.1


class TestAdvance:
    def test_zero_step_leaves_state_unchanged(self):
        oracle = portfolio()
        x0 = np.array([0.1, 0.2, -0.3, 0.4])
        state = anchor(oracle, x0, 5, rng_key=2)
        y_before, z_before = state.y.copy(), state.z.copy()
        state = advance(state, oracle, x0.copy(), 3, rng_key=2, epoch=0, inner=1)
        assert np.array_equal(state.y, y_before)
        assert np.array_equal(state.z, z_before)

    def test_single_component_telescopes_exactly(self):
        oracle = portfolio(n=1)
        x0 = np.zeros(4)
        state = anchor(oracle, x0, FULL, rng_key=0)
        rng = substream(4, 0)
        for i in range(5):
            x_new = rng.uniform(-1, 1, size=4)
            state = advance(state, oracle, x_new, 1, rng_key=0, epoch=0, inner=i)
            y, jac = oracle.eval_full(x_new)
            assert np.array_equal(state.y, y)
            assert np.array_equal(state.z, jac)

    def test_full_batches_track_exact_maps(self):
        oracle = portfolio(n=7)
        rng = substream(5, 0)
        x = rng.uniform(-1, 1, size=4)
        state = anchor(oracle, x, FULL, rng_key=0)
        for i in range(4):
            x = rng.uniform(-1, 1, size=4)
            state = advance(state, oracle, x, 7, rng_key=0, epoch=0, inner=i)
            y, jac = oracle.eval_full(x)
            assert np.allclose(state.y, y, rtol=1e-12, atol=0)
            assert np.allclose(state.z, jac, rtol=1e-12, atol=0)
            assert state.exact

    def test_exact_full_difference_keeps_carried_bias(self):
        # from an inexact state, the S >= n switch must apply the exact
        # difference, not overwrite the state
        oracle = portfolio(n=6)
        x0 = np.zeros(4)
        state = anchor(oracle, x0, 2, rng_key=8)  # sampled, biased
        assert not state.exact
        y_carry = state.y.copy()
        x1 = np.full(4, 0.3)
        state = advance(state, oracle, x1, 6, rng_key=8, epoch=0, inner=1)
        y0, _ = oracle.eval_full(x0)
        y1, _ = oracle.eval_full(x1)
        assert np.allclose(state.y, y_carry + (y1 - y0), rtol=1e-12, atol=0)
        assert not state.exact

    def test_conditional_mean_identity(self):
        # E[y_new | state] = y_old + g(x_new) - g(x_prev), within 4 SEs
        oracle = portfolio(n=25, d=3, seed=13)
        x_prev = np.array([0.1, -0.2, 0.3])
        x_new = x_prev + np.array([0.05, 0.02, -0.04])
        y0 = np.array([0.5, 0.7])
        z0 = substream(6, 0).normal(size=(2, 3))
        g_prev, _ = oracle.eval_full(x_prev)
        g_new, _ = oracle.eval_full(x_new)
        expect = y0 + (g_new - g_prev)
        reps = 10_000
        ys = np.zeros((reps, 2))
        for r in range(reps):
            state = EstimatorState(y=y0.copy(), z=z0.copy(), x_prev=x_prev.copy())
            state = advance(state, oracle, x_new, 4, rng_key=(55, r))
            ys[r] = state.y
        se = ys.std(axis=0, ddof=1) / math.sqrt(reps)
        z = np.abs(ys.mean(axis=0) - expect) / np.maximum(se, 1e-15)
        assert np.all(z <= 4.0)

    def test_zero_batch_rejected(self):
        oracle = portfolio()
        state = anchor(oracle, np.zeros(4), FULL, rng_key=0)
        with pytest.raises(ValueError):
            advance(state, oracle, np.ones(4), 0, rng_key=0)


class TestSampleAccounting:
    def test_anchor_and_advance_costs(self):
        inner = portfolio(n=10)
        counting = CountingOracle(inner)
        x0 = np.zeros(4)
        anchor(counting, x0, 4, rng_key=0)
        assert counting.count == 4
        assert anchor_cost(inner, 4) == 4
        counting.count = 0
        anchor(counting, x0, FULL, rng_key=0)
        assert counting.count == 10
        assert anchor_cost(inner, FULL) == 10

        state = anchor(inner, x0, FULL, rng_key=0)
        counting.count = 0
        state = advance(
            EstimatorState(y=state.y.copy(), z=state.z.copy(), x_prev=x0.copy()),
            counting,
            np.ones(4),
            3,
            rng_key=0,
        )
        assert counting.count == 6
        assert advance_cost(inner, 3) == 6

    def test_exact_switch_costs_two_full_passes(self):
        inner = portfolio(n=10)
        counting = CountingOracle(inner)
        state = anchor(counting, np.zeros(4), 2, rng_key=0)
        counting.count = 0
        advance(state, counting, np.ones(4), 25, rng_key=0)
        assert counting.count == 20
        assert advance_cost(inner, 25) == 20


class TestCompositeEstimate:
    def test_exact_state_matches_exact_gradient(self):
        oracle = portfolio()
        outer = oracle.outer
        x = np.array([0.2, 0.1, -0.4, 0.3])
        state = anchor(oracle, x, FULL, rng_key=0)
        est = composite_estimate(state, outer)
        assert np.array_equal(est, composite_gradient(oracle, outer, x))

    def test_identity_outer_returns_jacobian_row(self):
        state = EstimatorState(
            y=np.array([2.0]), z=np.array([[3.0, -1.0, 0.5]]), x_prev=np.zeros(3)
        )
        est = composite_estimate(state, civr.IdentityOuter())
        assert np.array_equal(est, np.array([3.0, -1.0, 0.5]))

    def test_scalar_arithmetic(self):
        # z = 3, y = 2 under f(y) = y^2: estimate = 3 * f'(2) = 12
        state = EstimatorState(y=np.array([2.0]), z=np.array([[3.0]]), x_prev=np.zeros(1))
        est = composite_estimate(state, civr.QuadraticNormOuter(1))
        assert est[0] == pytest.approx(12.0)

    def test_dimension_mismatch(self):
        state = EstimatorState(y=np.zeros(2), z=np.zeros((2, 3)), x_prev=np.zeros(3))
        with pytest.raises(ValueError):
            composite_estimate(state, civr.QuadraticNormOuter(3))
