import itertools

import numpy as np
import pytest

import civr
from civr.model import composite_value
from civr.problems import (
    VARIANCE_PENALTY,
    VARIANCE_REWARD,
    BellmanResidualOuter,
    MdpPolicyEvalProblem,
    MeanVarianceOuter,
    PortfolioProblem,
    random_mdp,
    synth_quadratic_composite,
    synth_quadratic_expectation,
)
from civr.prox import L1Reg, ZeroReg
from civr.rng import substream


class TestPortfolioComponents:
    def test_component_values_and_jacobian(self):
        # R_1 = (1, 2), x = (1, 0): h = 1 -> value (1, 1), rows (1,2), (2,4)
        problem = PortfolioProblem(np.array([[1.0, 2.0], [0.5, 0.5]]), 0.2)
        y, jac = problem.eval_component(0, np.array([1.0, 0.0]))
        assert np.array_equal(y, [1.0, 1.0])
        assert np.array_equal(jac, [[1.0, 2.0], [2.0, 4.0]])

    def test_zero_point(self):
        problem = PortfolioProblem(np.array([[1.0, 2.0]]), 0.2)
        y, jac = problem.eval_component(0, np.zeros(2))
        assert np.array_equal(y, [0.0, 0.0])
        assert np.array_equal(jac, [[1.0, 2.0], [0.0, 0.0]])

    def test_component_jacobian_vs_finite_differences(self):
        rng = substream(61, 0)
        problem = PortfolioProblem(rng.normal(size=(5, 3)), 0.2)
        x = rng.uniform(-1, 1, size=3)
        _, jac = problem.eval_component(2, x)
        h = 1e-6
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            yp, _ = problem.eval_component(2, x + e)
            ym, _ = problem.eval_component(2, x - e)
            fd = (yp - ym) / (2 * h)
            assert np.allclose(jac[:, j], fd, rtol=1e-6, atol=1e-8)

    def test_index_out_of_range(self):
        problem = PortfolioProblem(np.ones((3, 2)), 0.2)
        with pytest.raises(IndexError):
            problem.eval_component(3, np.zeros(2))


class TestMeanVarianceOuter:
    def test_reward_mode_formula(self):
        # lam = 0.2, (y, z) = (1, 1): -1 + 0.2 - 0.2 = -1.0
        outer = MeanVarianceOuter(0.2, VARIANCE_REWARD)
        assert outer.value(np.array([1.0, 1.0])) == pytest.approx(-1.0)

    def test_modes_coincide_at_zero_variance(self):
        pen = MeanVarianceOuter(0.2, VARIANCE_PENALTY)
        assert pen.value(np.array([1.0, 1.0])) == pytest.approx(-1.0)

    def test_modes_diverge_with_variance(self):
        # (y, z) = (1, 2): penalty -0.8, reward -1.2
        pen = MeanVarianceOuter(0.2, VARIANCE_PENALTY)
        rew = MeanVarianceOuter(0.2, VARIANCE_REWARD)
        u = np.array([1.0, 2.0])
        assert pen.value(u) == pytest.approx(-0.8)
        assert rew.value(u) == pytest.approx(-1.2)

    def test_gradients(self):
        pen = MeanVarianceOuter(0.2, VARIANCE_PENALTY)
        rew = MeanVarianceOuter(0.2, VARIANCE_REWARD)
        u = np.array([1.5, 2.0])
        assert np.allclose(pen.gradient(u), [-1.0 - 0.4 * 1.5, 0.2])
        assert np.allclose(rew.gradient(u), [-1.0 + 0.4 * 1.5, -0.2])

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            MeanVarianceOuter(0.2, "whatever")


class TestPortfolioObjective:
    def test_matches_direct_mean_variance_formula(self):
        rng = substream(62, 0)
        returns = rng.normal(0.05, 1.0, size=(40, 6))
        problem = civr.portfolio_problem(returns, 0.2, VARIANCE_PENALTY)
        for _ in range(10):
            x = rng.uniform(-1, 1, size=6)
            h = returns @ x
            direct = -h.mean() + 0.2 * (np.mean(h**2) - h.mean() ** 2)
            val = composite_value(problem.oracle, problem.outer, ZeroReg(), x)
            assert val == pytest.approx(direct, rel=1e-10)

    def test_constants_are_valid_bounds_on_probes(self):
        rng = substream(63, 0)
        returns = rng.normal(0.05, 1.0, size=(20, 4))
        oracle = PortfolioProblem(returns, 0.2)
        consts = oracle.smoothness_constants(region_radius=2.0)
        for _ in range(50):
            x = rng.uniform(-2, 2, size=4)
            i = int(rng.integers(20))
            _, jac = oracle.eval_component(i, x)
            assert np.linalg.norm(jac, 2) <= consts.ell_g + 1e-9


class TestMdpComponents:
    def make(self, S=4, k=4, gamma=0.9, seed=64):
        return random_mdp(S, k, gamma, seed=seed, feature_kind="uniform")

    def test_gamma_zero_targets_are_rewards(self):
        mdp = random_mdp(3, 3, 0.0, seed=1, feature_kind="uniform")
        w = substream(65, 0).normal(size=3)
        draw = np.array([2, 0, 1])
        y, jac = mdp.eval_component(draw, w)
        assert np.allclose(y[3:], [mdp.rewards[0, 2], mdp.rewards[1, 0], mdp.rewards[2, 1]])
        assert np.allclose(jac[3:], 0.0)

    def test_zero_weights_show_reward_block(self):
        mdp = self.make(gamma=0.9)
        draw = np.array([1, 3, 0, 2])
        y, _ = mdp.eval_component(draw, np.zeros(4))
        assert np.allclose(y[:4], 0.0)
        assert np.allclose(y[4:], mdp.rewards[np.arange(4), draw])

    def test_rowwise_enumeration_matches_exact(self):
        # average of the sampled component over all next states per row,
        # weighted by the transition row, equals the exact map
        mdp = self.make(S=5, k=3)
        w = substream(66, 0).normal(size=3)
        y_exact, jac_exact = mdp.eval_full(w)
        S = mdp.n_states
        y_acc = np.zeros(2 * S)
        jac_acc = np.zeros((2 * S, 3))
        base = np.zeros(S, dtype=int)
        for i in range(S):
            for j in range(S):
                draw = base.copy()
                draw[i] = j
                y, jac = mdp.eval_component(draw, w)
                y_acc[S + i] += mdp.transition[i, j] * y[S + i]
                jac_acc[S + i] += mdp.transition[i, j] * jac[S + i]
        y_any, jac_any = mdp.eval_component(base, w)
        y_acc[:S] = y_any[:S]
        jac_acc[:S] = jac_any[:S]
        assert np.allclose(y_acc, y_exact, rtol=1e-12, atol=1e-14)
        assert np.allclose(jac_acc, jac_exact, rtol=1e-12, atol=1e-14)

    def test_product_space_enumeration_small(self):
        # full enumeration over all draw tuples, weighted by the product
        # of row probabilities, reproduces the exact map (S = 3)
        mdp = random_mdp(3, 2, 0.7, seed=9, feature_kind="uniform")
        w = np.array([0.4, -0.3])
        y_exact, jac_exact = mdp.eval_full(w)
        y_acc = np.zeros(6)
        jac_acc = np.zeros((6, 2))
        for draw in itertools.product(range(3), repeat=3):
            weight = np.prod([mdp.transition[i, draw[i]] for i in range(3)])
            y, jac = mdp.eval_component(np.array(draw), w)
            y_acc += weight * y
            jac_acc += weight * jac
        assert np.allclose(y_acc, y_exact, rtol=1e-12, atol=1e-14)
        assert np.allclose(jac_acc, jac_exact, rtol=1e-12, atol=1e-14)

    def test_bellman_solution_zero_residual(self):
        mdp = self.make(S=6, k=6)
        w_star = mdp.bellman_solution()
        problem = civr.mdp_problem(mdp)
        val = composite_value(problem.oracle, problem.outer, ZeroReg(), w_star)
        assert val <= 1e-18

    def test_invalid_draw_rejected(self):
        mdp = self.make()
        with pytest.raises(ValueError):
            mdp.eval_component(np.array([0, 1, 2]), np.zeros(4))  # wrong length
        with pytest.raises(ValueError):
            mdp.eval_component(np.array([0, 1, 2, 9]), np.zeros(4))

    def test_row_stochastic_validation(self):
        bad = np.array([[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(ValueError):
            MdpPolicyEvalProblem(bad, np.zeros((2, 2)), np.eye(2), 0.9)


class TestBellmanResidualOuter:
    def test_zero_residual(self):
        outer = BellmanResidualOuter(3)
        u = np.array([1.0, 2.0, 3.0, 1.0, 2.0, 3.0])
        assert outer.value(u) == 0.0
        assert np.array_equal(outer.gradient(u), np.zeros(6))

    def test_scalar_case(self):
        outer = BellmanResidualOuter(1)
        u = np.array([3.0, 1.0])
        assert outer.value(u) == pytest.approx(4.0)
        assert np.array_equal(outer.gradient(u), [4.0, -4.0])

    def test_gradient_vs_finite_differences(self):
        outer = BellmanResidualOuter(4)
        rng = substream(67, 0)
        u = rng.normal(size=8)
        grad = outer.gradient(u)
        h = 1e-6
        for j in range(8):
            e = np.zeros(8)
            e[j] = h
            fd = (outer.value(u + e) - outer.value(u - e)) / (2 * h)
            assert grad[j] == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError):
            BellmanResidualOuter(2).value(np.ones(3))


class TestSyntheticQuadratic:
    def test_identity_design_zero_offset(self):
        problem, reg, info = synth_quadratic_composite(
            3, 3, 5, lambda_min=1.0, lambda_max=1.0, jitter=0.0, offset_scale=0.0, seed=1
        )
        assert np.allclose(info.x_star, 0.0)
        assert info.phi_star == pytest.approx(0.0, abs=1e-30)

    def test_minimizer_solves_normal_equations(self):
        problem, reg, info = synth_quadratic_composite(4, 4, 20, seed=11)
        oracle = problem.oracle
        gram = oracle.mean_mat.T @ oracle.mean_mat
        rhs = oracle.mean_mat.T @ oracle.mean_offset
        assert np.allclose(gram @ info.x_star, rhs, rtol=1e-10)

    def test_curvature_against_eigen_oracle(self):
        problem, reg, info = synth_quadratic_composite(5, 5, 12, lambda_min=0.5, lambda_max=3.0, seed=12)
        gram = problem.oracle.mean_mat.T @ problem.oracle.mean_mat
        eigs = np.linalg.eigvalsh(gram)
        assert info.mu == pytest.approx(2.0 * eigs[0], rel=1e-10)
        assert info.nu == pytest.approx(1.0 / (2.0 * eigs[0]), rel=1e-10)

    def test_l1_minimizer_against_grid(self):
        problem, reg, info = synth_quadratic_composite(
            2, 2, 8, lambda_min=1.0, lambda_max=2.0, jitter=0.05, l1_weight=0.4, seed=13
        )
        assert isinstance(reg, L1Reg)
        # grid oracle around the reported minimizer
        span = np.linspace(-2, 2, 161)
        best, best_val = None, np.inf
        for a in span:
            for b in span:
                x = np.array([a, b])
                val = composite_value(problem.oracle, problem.outer, reg, x)
                if val < best_val:
                    best, best_val = x, val
        assert np.linalg.norm(best - info.x_star) <= 0.05
        phi_at_star = composite_value(problem.oracle, problem.outer, reg, info.x_star)
        assert phi_at_star <= best_val + 1e-12
        assert phi_at_star == pytest.approx(info.phi_star, rel=1e-10)

    def test_component_jitter_averages_out(self):
        problem, _, _ = synth_quadratic_composite(3, 3, 9, jitter=0.5, seed=14)
        oracle = problem.oracle
        assert np.allclose(oracle.mats.mean(axis=0), oracle.mean_mat, atol=1e-12)
        assert np.allclose(oracle.offsets.mean(axis=0), oracle.mean_offset, atol=1e-12)

    def test_ell_g_bounds_component_norms(self):
        problem, _, info = synth_quadratic_composite(4, 4, 15, jitter=0.4, seed=15)
        oracle = problem.oracle
        norms = [np.linalg.norm(oracle.mats[i], 2) for i in range(15)]
        assert info.constants.ell_g == pytest.approx(max(norms), rel=1e-12)

    def test_expectation_variant_variance_bounds(self):
        problem, _, info = synth_quadratic_expectation(
            3, 3, noise_mat=0.2, noise_offset=0.1, region_radius=2.0, seed=16
        )
        oracle = problem.oracle
        rng = substream(68, 0)
        x = np.array([1.0, -1.0, 1.0])  # ||x|| <= 2
        draws = oracle.sample_batch(rng, 20_000)
        y_exact, jac_exact = oracle.eval_full(x)
        D, e = draws
        vals = np.einsum("kpd,d->kp", oracle.mean_mat[None, :, :] + D, x) - (oracle.mean_offset[None, :] + e)
        var_g = float(((vals - y_exact) ** 2).sum(axis=1).mean())
        var_gp = float((D**2).sum(axis=(1, 2)).mean())
        assert var_g <= info.constants.sigma_g_sq
        assert var_gp <= info.constants.sigma_gp_sq * 1.01

    def test_rejects_bad_spectrum(self):
        with pytest.raises(ValueError):
            synth_quadratic_composite(3, 2, 4, seed=1)  # p < d
        with pytest.raises(ValueError):
            synth_quadratic_composite(3, 3, 4, lambda_min=0.0, seed=1)
        with pytest.raises(ValueError):
            synth_quadratic_composite(3, 4, 4, l1_weight=0.1, seed=1)  # L1 needs diagonal


class TestRandomMdp:
    def test_rows_stochastic(self):
        mdp = random_mdp(7, 4, 0.9, seed=2)
        assert np.all(mdp.transition >= 0)
        assert np.allclose(mdp.transition.sum(axis=1), 1.0, atol=1e-12)

    def test_orthonormal_features(self):
        mdp = random_mdp(6, 6, 0.8, seed=3)
        assert np.allclose(mdp.features.T @ mdp.features, np.eye(6), atol=1e-10)

    def test_feature_count_bounded(self):
        with pytest.raises(ValueError):
            random_mdp(3, 5, 0.9, seed=1)
