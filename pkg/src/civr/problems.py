"""Application problem instances and synthetic test generators.

* Risk-averse mean-variance portfolio selection over per-period returns:
  component i maps an allocation x to the pair (return, squared return)
  for period i; the outer function trades mean against variance.
* Policy evaluation for a Markov decision process with linear value
  approximation: the inner map stacks predicted state values on top of
  sampled one-step bootstrap targets; the outer function is the squared
  Bellman residual.
* Synthetic quadratic composites (affine components under a squared-norm
  outer map) with closed-form minimizers, curvature constants and, in
  expectation mode, exact variance bounds.  These are the oracles behind
  the rate and restart verification suites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    ComponentOracle,
    CompositeProblem,
    Matrix,
    OuterFunction,
    QuadraticNormOuter,
    SmoothnessConstants,
    Vector,
    as_point,
)
from .prox import L1Reg, Regularizer, ZeroReg
from .rng import PROBLEM, RngKey, substream

VARIANCE_PENALTY = "variance-penalty"
VARIANCE_REWARD = "variance-reward"

DEFAULT_REGION_RADIUS = 10.0


class MeanVarianceOuter(OuterFunction):
    """Outer map f(y, z) for the mean-variance trade-off, with y and z the
    means of the per-period return and squared return.

    Two sign conventions are exposed.  ``variance-penalty`` (the default)
    minimizes -y + lam*(z - y^2), i.e. the negated mean return plus
    ``lam`` times the return variance.  ``variance-reward`` minimizes
    -y + lam*y^2 - lam*z = -(y + lam*(z - y^2)), which *rewards* variance;
    it is kept so either convention of the trade-off can be reproduced.
    The two coincide whenever z = y^2 (zero variance).
    """

    dim_p = 2

    def __init__(self, risk_weight: float, sign_mode: str = VARIANCE_PENALTY):
        if risk_weight < 0:
            raise ValueError("risk_weight must be nonnegative")
        if sign_mode not in (VARIANCE_PENALTY, VARIANCE_REWARD):
            raise ValueError(f"unknown sign_mode {sign_mode!r}")
        self.risk_weight = float(risk_weight)
        self.sign_mode = sign_mode

    def value(self, u: Vector) -> float:
        y, z = float(u[0]), float(u[1])
        lam = self.risk_weight
        if self.sign_mode == VARIANCE_PENALTY:
            return -y + lam * (z - y * y)
        return -y + lam * y * y - lam * z

    def gradient(self, u: Vector) -> Vector:
        y = float(u[0])
        lam = self.risk_weight
        if self.sign_mode == VARIANCE_PENALTY:
            return np.array([-1.0 - 2.0 * lam * y, lam])
        return np.array([-1.0 + 2.0 * lam * y, -lam])


class PortfolioProblem(ComponentOracle):
    """Finite-sum inner map of the portfolio problem.

    Component i sends an allocation x to ``[h_i, h_i^2]`` with
    ``h_i = <R_i, x>`` the period-i return; its Jacobian stacks ``R_i`` on
    ``2 h_i R_i``.
    """

    dim_p = 2

    def __init__(self, returns, risk_weight: float, sign_mode: str = VARIANCE_PENALTY):
        R = np.ascontiguousarray(returns, dtype=np.float64)
        if R.ndim != 2 or R.shape[0] < 1 or R.shape[1] < 1:
            raise ValueError(f"returns must be a nonempty 2-d matrix, got shape {R.shape}")
        if not np.all(np.isfinite(R)):
            raise ValueError("returns contain non-finite entries")
        self.returns = R
        self.dim_d = R.shape[1]
        self.outer = MeanVarianceOuter(risk_weight, sign_mode)

    @property
    def n_components(self) -> int:
        return self.returns.shape[0]

    @property
    def risk_weight(self) -> float:
        return self.outer.risk_weight

    @property
    def sign_mode(self) -> str:
        return self.outer.sign_mode

    def eval_component(self, key, x: Vector) -> tuple[Vector, Matrix]:
        i = int(key)
        if not 0 <= i < self.n_components:
            raise IndexError(f"component index {i} out of range [0, {self.n_components})")
        x = as_point(x, self.dim_d)
        row = self.returns[i]
        h = float(row @ x)
        return np.array([h, h * h]), np.vstack([row, 2.0 * h * row])

    def eval_batch_mean(self, batch, x: Vector) -> tuple[Vector, Matrix]:
        x = as_point(x, self.dim_d)
        idx = np.asarray(batch, dtype=np.int64)
        if idx.size == 0:
            raise ValueError("empty batch")
        rows = self.returns[idx]
        h = rows @ x
        value = np.array([h.mean(), (h * h).mean()])
        jac = np.stack([rows.mean(axis=0), (2.0 * h[:, None] * rows).mean(axis=0)])
        return value, jac

    def eval_full(self, x: Vector) -> tuple[Vector, Matrix]:
        x = as_point(x, self.dim_d)
        rows = self.returns
        h = rows @ x
        value = np.array([h.mean(), (h * h).mean()])
        jac = np.stack([rows.mean(axis=0), (2.0 * h[:, None] * rows).mean(axis=0)])
        return value, jac

    def smoothness_constants(self, region_radius: float = DEFAULT_REGION_RADIUS) -> SmoothnessConstants:
        """Lipschitz constants valid on the box |x_j| <= region_radius.

        The quadratic pieces are not globally Lipschitz, so bounds are
        taken over a declared box (default radius 10 per coordinate).
        """
        row_norms = np.linalg.norm(self.returns, axis=1)
        h_max_rows = np.abs(self.returns).sum(axis=1) * region_radius
        lam = self.risk_weight
        ell_g = float(np.max(row_norms * np.sqrt(1.0 + 4.0 * h_max_rows**2)))
        L_g = float(2.0 * np.max(row_norms**2))
        h_max = float(np.max(h_max_rows))
        ell_f = math.sqrt((1.0 + 2.0 * lam * h_max) ** 2 + lam**2)
        return SmoothnessConstants(ell_f=ell_f, L_f=2.0 * lam, ell_g=ell_g, L_g=L_g)

    def composite(self) -> CompositeProblem:
        return CompositeProblem(oracle=self, outer=self.outer)


def portfolio_problem(returns, risk_weight: float, sign_mode: str = VARIANCE_PENALTY) -> CompositeProblem:
    """Bundle a :class:`PortfolioProblem` with its outer function."""
    return PortfolioProblem(returns, risk_weight, sign_mode).composite()


def synthetic_returns(
    n_periods: int, n_assets: int, seed: RngKey = 0, mean: float = 0.05, vol: float = 1.0
):
    """Gaussian per-period percent returns for desk-scale experiments."""
    rng = substream(seed, PROBLEM)
    return rng.normal(mean, vol, size=(n_periods, n_assets))


class BellmanResidualOuter(OuterFunction):
    """Squared Bellman residual: value(u) = sum_i (u_i - u_{S+i})^2 for the
    stacked prediction/target vector u of even length 2S."""

    def __init__(self, n_states: int):
        if n_states < 1:
            raise ValueError("n_states must be >= 1")
        self.n_states = int(n_states)
        self.dim_p = 2 * self.n_states

    def _split(self, u: Vector):
        u = np.asarray(u, dtype=np.float64)
        if u.ndim != 1 or u.shape[0] % 2 != 0:
            raise ValueError(f"expected an even-length vector, got shape {u.shape}")
        if u.shape[0] != self.dim_p:
            raise ValueError(f"expected length {self.dim_p}, got {u.shape[0]}")
        s = u.shape[0] // 2
        return u[:s], u[s:]

    def value(self, u: Vector) -> float:
        y, z = self._split(u)
        e = y - z
        return float(e @ e)

    def gradient(self, u: Vector) -> Vector:
        y, z = self._split(u)
        e = y - z
        return np.concatenate([2.0 * e, -2.0 * e])


class MdpPolicyEvalProblem(ComponentOracle):
    """Inner map of MDP policy evaluation with linear value approximation.

    For weights w, the exact map stacks the predicted values <Psi_i, w> on
    top of the expected one-step targets
    q_i(w) = sum_j P_ij (R_ij + gamma <Psi_j, w>).  One sampled component
    replaces every q_i by a single bootstrap draw: a tuple of next states
    (j_1, .., j_S), one per row, drawn independently from the rows of P.
    The prediction block is deterministic, so sampling noise lives only in
    the target block.  Exact means are available in closed form, which is
    what exact anchors and diagnostics use.
    """

    def __init__(self, transition, rewards, features, gamma: float):
        P = np.ascontiguousarray(transition, dtype=np.float64)
        R = np.ascontiguousarray(rewards, dtype=np.float64)
        Psi = np.ascontiguousarray(features, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {P.shape}")
        S = P.shape[0]
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition rows must be nonnegative and sum to 1 within 1e-12")
        if R.shape != (S, S):
            raise ValueError(f"rewards must be SxS, got shape {R.shape}")
        if Psi.ndim != 2 or Psi.shape[0] != S:
            raise ValueError(f"features must have one row per state, got shape {Psi.shape}")
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
        self.transition = P
        self.rewards = R
        self.features = Psi
        self.gamma = float(gamma)
        self.n_states = S
        self.dim_d = Psi.shape[1]
        self.dim_p = 2 * S
        self._cum_rows = np.cumsum(P, axis=1)
        self._expected_reward = (P * R).sum(axis=1)
        self._rows = np.arange(S)

    @property
    def exact_available(self) -> bool:
        return True

    @property
    def full_cost(self) -> int:
        # One exact evaluation counts as one bootstrap draw per state,
        # matching the per-epoch full-batch cost of the sampled view.
        return self.n_states

    def sample_batch(self, rng: np.random.Generator, size: int):
        """Draw ``size`` next-state tuples; entry (m, i) ~ row i of P."""
        u = rng.random((size, self.n_states))
        draws = np.empty((size, self.n_states), dtype=np.int64)
        for i in range(self.n_states):
            draws[:, i] = np.searchsorted(self._cum_rows[i], u[:, i], side="right")
        return np.minimum(draws, self.n_states - 1)

    def eval_component(self, key, w: Vector) -> tuple[Vector, Matrix]:
        draw = np.asarray(key, dtype=np.int64)
        if draw.shape != (self.n_states,):
            raise ValueError(f"a draw is one next state per row, expected shape ({self.n_states},)")
        if np.any(draw < 0) or np.any(draw >= self.n_states):
            raise ValueError("next-state index out of range")
        w = as_point(w, self.dim_d)
        pred = self.features @ w
        target = self.rewards[self._rows, draw] + self.gamma * (self.features[draw] @ w)
        jac = np.vstack([self.features, self.gamma * self.features[draw]])
        return np.concatenate([pred, target]), jac

    def eval_batch_mean(self, batch, w: Vector) -> tuple[Vector, Matrix]:
        draws = np.asarray(batch, dtype=np.int64)
        if draws.ndim == 1:
            draws = draws[None, :]
        if draws.size == 0:
            raise ValueError("empty batch")
        w = as_point(w, self.dim_d)
        pred = self.features @ w
        feat_mean = self.features[draws].mean(axis=0)
        reward_mean = self.rewards[self._rows, draws].mean(axis=0)
        target = reward_mean + self.gamma * (feat_mean @ w)
        jac = np.vstack([self.features, self.gamma * feat_mean])
        return np.concatenate([pred, target]), jac

    def eval_full(self, w: Vector) -> tuple[Vector, Matrix]:
        w = as_point(w, self.dim_d)
        pred = self.features @ w
        bootstrap = self.transition @ self.features
        target = self._expected_reward + self.gamma * (bootstrap @ w)
        jac = np.vstack([self.features, self.gamma * bootstrap])
        return np.concatenate([pred, target]), jac

    def residual_matrix(self) -> Matrix:
        """M with F(w) = ||M w - b||^2; b is the expected one-step reward."""
        return self.features - self.gamma * (self.transition @ self.features)

    def default_step_size(self) -> float:
        """1 / L for the residual least-squares problem (monotone descent)."""
        m = self.residual_matrix()
        return 1.0 / (2.0 * np.linalg.norm(m, 2) ** 2)

    def bellman_solution(self) -> Vector:
        """Weights solving the Bellman equation inside the feature span.

        Requires a square feature matrix (one feature per state); the
        residual objective vanishes there.
        """
        m = self.residual_matrix()
        if m.shape[0] != m.shape[1]:
            raise ValueError("exact Bellman solution needs square features")
        return np.linalg.solve(m, self._expected_reward)

    def composite(self) -> CompositeProblem:
        return CompositeProblem(oracle=self, outer=BellmanResidualOuter(self.n_states))


def mdp_problem(oracle: MdpPolicyEvalProblem) -> CompositeProblem:
    return oracle.composite()


def random_mdp(
    n_states: int,
    n_features: int | None = None,
    gamma: float = 0.8,
    seed: RngKey = 0,
    feature_kind: str = "orthonormal",
) -> MdpPolicyEvalProblem:
    """Randomly generated policy-evaluation instance.

    Transition rows are normalized positive uniforms and rewards are
    uniform on [0, 1].  Features are uniform entries, orthonormalized by
    default (``feature_kind="uniform"`` keeps the raw entries); with the
    default square feature matrix the residual objective has a zero
    minimum at the Bellman solution.
    """
    if n_features is None:
        n_features = n_states
    if feature_kind not in ("orthonormal", "uniform"):
        raise ValueError(f"unknown feature_kind {feature_kind!r}")
    if n_features > n_states:
        raise ValueError("n_features may not exceed n_states")
    rng = substream(seed, PROBLEM)
    P = rng.random((n_states, n_states)) + 1e-3
    P /= P.sum(axis=1, keepdims=True)
    rewards = rng.random((n_states, n_states))
    Psi = rng.random((n_states, n_features))
    if feature_kind == "orthonormal":
        Psi, _ = np.linalg.qr(Psi)
    return MdpPolicyEvalProblem(P, rewards, Psi, gamma)


@dataclass(frozen=True)
class QuadraticInfo:
    """Closed-form facts about a synthetic quadratic composite."""

    x_star: Vector
    phi_star: float
    mu: float
    nu: float
    constants: SmoothnessConstants


class AffineComponentsOracle(ComponentOracle):
    """Finite sum of affine maps g_i(x) = A_i x - c_i."""

    def __init__(self, mats, offsets):
        A = np.ascontiguousarray(mats, dtype=np.float64)
        c = np.ascontiguousarray(offsets, dtype=np.float64)
        if A.ndim != 3 or c.ndim != 2 or A.shape[0] != c.shape[0] or A.shape[1] != c.shape[1]:
            raise ValueError("expected mats (n,p,d) and offsets (n,p)")
        self.mats = A
        self.offsets = c
        self.dim_p = A.shape[1]
        self.dim_d = A.shape[2]
        self.mean_mat = A.mean(axis=0)
        self.mean_offset = c.mean(axis=0)

    @property
    def n_components(self) -> int:
        return self.mats.shape[0]

    def eval_component(self, key, x: Vector) -> tuple[Vector, Matrix]:
        i = int(key)
        x = as_point(x, self.dim_d)
        return self.mats[i] @ x - self.offsets[i], self.mats[i].copy()

    def eval_batch_mean(self, batch, x: Vector) -> tuple[Vector, Matrix]:
        idx = np.asarray(batch, dtype=np.int64)
        if idx.size == 0:
            raise ValueError("empty batch")
        x = as_point(x, self.dim_d)
        A = self.mats[idx].mean(axis=0)
        c = self.offsets[idx].mean(axis=0)
        return A @ x - c, A

    def eval_full(self, x: Vector) -> tuple[Vector, Matrix]:
        x = as_point(x, self.dim_d)
        return self.mean_mat @ x - self.mean_offset, self.mean_mat.copy()


class AffineExpectationOracle(ComponentOracle):
    """Expectation-mode affine map g_xi(x) = (A + D) x - (c + e) with
    bounded uniform perturbations D, e.

    A draw is the concrete pair (D, e); batches stack them.  The mean maps
    are available exactly, so the oracle supports exact diagnostics, but
    anchors must still be sampled (it is not a finite sum).
    """

    def __init__(self, mean_mat, mean_offset, noise_mat: float, noise_offset: float):
        A = np.ascontiguousarray(mean_mat, dtype=np.float64)
        c = np.ascontiguousarray(mean_offset, dtype=np.float64)
        if A.ndim != 2 or c.shape != (A.shape[0],):
            raise ValueError("expected mean_mat (p,d) and mean_offset (p,)")
        if noise_mat < 0 or noise_offset < 0:
            raise ValueError("noise half-widths must be nonnegative")
        self.mean_mat = A
        self.mean_offset = c
        self.noise_mat = float(noise_mat)
        self.noise_offset = float(noise_offset)
        self.dim_p = A.shape[0]
        self.dim_d = A.shape[1]

    @property
    def exact_available(self) -> bool:
        return True

    @property
    def full_cost(self) -> int:
        return 1

    def sample_batch(self, rng: np.random.Generator, size: int):
        D = rng.uniform(-self.noise_mat, self.noise_mat, size=(size, self.dim_p, self.dim_d))
        e = rng.uniform(-self.noise_offset, self.noise_offset, size=(size, self.dim_p))
        return D, e

    def batch_size(self, batch) -> int:
        return batch[0].shape[0]

    def iter_batch(self, batch):
        D, e = batch
        return zip(D, e)

    def eval_component(self, key, x: Vector) -> tuple[Vector, Matrix]:
        D, e = key
        x = as_point(x, self.dim_d)
        jac = self.mean_mat + D
        return jac @ x - (self.mean_offset + e), jac

    def eval_batch_mean(self, batch, x: Vector) -> tuple[Vector, Matrix]:
        D, e = batch
        if D.shape[0] == 0:
            raise ValueError("empty batch")
        x = as_point(x, self.dim_d)
        jac = self.mean_mat + D.mean(axis=0)
        return jac @ x - (self.mean_offset + e.mean(axis=0)), jac

    def eval_full(self, x: Vector) -> tuple[Vector, Matrix]:
        x = as_point(x, self.dim_d)
        return self.mean_mat @ x - self.mean_offset, self.mean_mat.copy()

    def variance_bounds(self, region_radius: float) -> tuple[float, float]:
        """Exact bounds on E||g_xi - g||^2 and E||g'_xi - g'||^2 over the
        Euclidean ball ||x|| <= region_radius."""
        var_entry_mat = self.noise_mat**2 / 3.0
        var_entry_off = self.noise_offset**2 / 3.0
        sigma_g_sq = self.dim_p * (var_entry_mat * region_radius**2 + var_entry_off)
        sigma_gp_sq = self.dim_p * self.dim_d * var_entry_mat
        return sigma_g_sq, sigma_gp_sq


def _mean_design(d: int, p: int, lambda_min: float, lambda_max: float, rng, diagonal: bool):
    """Mean matrix whose Gram spectrum spans [lambda_min, lambda_max] exactly."""
    if not 0 < lambda_min <= lambda_max:
        raise ValueError("need 0 < lambda_min <= lambda_max")
    if p < d:
        raise ValueError("need p >= d for a full-rank Gram matrix")
    spectrum = np.linspace(lambda_min, lambda_max, d)
    root = np.sqrt(spectrum)
    if diagonal:
        if p != d:
            raise ValueError("diagonal designs need p == d")
        return np.diag(root), spectrum
    left, _ = np.linalg.qr(rng.normal(size=(p, d)))
    right, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return left @ np.diag(root) @ right.T, spectrum


def _quadratic_info(mean_mat, mean_offset, lambda_min, l1_weight, constants) -> QuadraticInfo:
    gram = mean_mat.T @ mean_mat
    if l1_weight > 0:
        diag = np.diag(mean_mat).copy()
        prod = diag * mean_offset
        x_star = np.sign(prod) * np.maximum(np.abs(prod) - l1_weight / 2.0, 0.0) / diag**2
        resid = mean_mat @ x_star - mean_offset
        phi_star = float(resid @ resid) + l1_weight * float(np.abs(x_star).sum())
    else:
        x_star = np.linalg.solve(gram, mean_mat.T @ mean_offset)
        resid = mean_mat @ x_star - mean_offset
        phi_star = float(resid @ resid)
    mu = 2.0 * lambda_min
    return QuadraticInfo(
        x_star=x_star, phi_star=phi_star, mu=mu, nu=1.0 / mu, constants=constants
    )


def synth_quadratic_composite(
    d: int,
    p: int,
    n: int,
    lambda_min: float = 1.0,
    lambda_max: float = 2.0,
    jitter: float = 0.1,
    l1_weight: float = 0.0,
    offset_scale: float = 1.0,
    seed: RngKey = 0,
) -> tuple[CompositeProblem, Regularizer, QuadraticInfo]:
    """Finite-sum quadratic composite with known optimum and curvature.

    Components are g_i(x) = (A + jitter*E_i) x - (c + jitter*f_i) with
    mean-zero perturbations, under f(u) = ||u||^2, so
    F(x) = ||A x - c||^2 with Gram spectrum exactly [lambda_min,
    lambda_max].  With ``l1_weight > 0`` the design is diagonal (needs
    p == d) and the minimizer is the componentwise soft-threshold
    solution.  Returns the problem, the regularizer, and the closed-form
    facts (x*, Phi*, mu = 2*lambda_min, nu = 1/mu, constants).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = substream(seed, PROBLEM)
    mean_mat, spectrum = _mean_design(d, p, lambda_min, lambda_max, rng, diagonal=l1_weight > 0)
    if l1_weight > 0:
        # Keep offsets bounded away from 0 so the soft-threshold solution
        # has a healthy mix of active and zero coordinates.
        mean_offset = offset_scale * (rng.random(p) + 0.5)
    else:
        mean_offset = offset_scale * rng.normal(size=p)

    pert_m = rng.normal(size=(n, p, d))
    pert_m -= pert_m.mean(axis=0)
    pert_c = rng.normal(size=(n, p))
    pert_c -= pert_c.mean(axis=0)
    mats = mean_mat[None, :, :] + jitter * pert_m
    offsets = mean_offset[None, :] + jitter * pert_c

    oracle = AffineComponentsOracle(mats, offsets)
    ell_g = float(max(np.linalg.norm(mats[i], 2) for i in range(n)))
    # L_g = 0: affine components have constant Jacobians.  ell_f is only
    # reported for completeness (a nominal box of radius 10); it does not
    # enter L_F or G_0 here.
    region = DEFAULT_REGION_RADIUS * math.sqrt(d)
    ell_f = 2.0 * (np.linalg.norm(mean_mat, 2) * region + float(np.linalg.norm(mean_offset)))
    constants = SmoothnessConstants(ell_f=ell_f, L_f=2.0, ell_g=ell_g, L_g=0.0)
    info = _quadratic_info(mean_mat, mean_offset, spectrum[0], l1_weight, constants)
    reg: Regularizer = L1Reg(l1_weight) if l1_weight > 0 else ZeroReg()
    problem = CompositeProblem(oracle=oracle, outer=QuadraticNormOuter(p), constants=constants)
    return problem, reg, info


def synth_quadratic_expectation(
    d: int,
    p: int,
    lambda_min: float = 1.0,
    lambda_max: float = 2.0,
    noise_mat: float = 0.1,
    noise_offset: float = 0.1,
    region_radius: float = DEFAULT_REGION_RADIUS,
    offset_scale: float = 1.0,
    seed: RngKey = 0,
) -> tuple[CompositeProblem, Regularizer, QuadraticInfo]:
    """Expectation-mode quadratic composite with exact variance bounds.

    Like :func:`synth_quadratic_composite` but components are drawn from a
    continuous distribution; variance bounds are exact over the ball
    ``||x|| <= region_radius`` and the sampled-anchor schedules apply.
    """
    rng = substream(seed, PROBLEM)
    mean_mat, spectrum = _mean_design(d, p, lambda_min, lambda_max, rng, diagonal=False)
    mean_offset = offset_scale * rng.normal(size=p)
    oracle = AffineExpectationOracle(mean_mat, mean_offset, noise_mat, noise_offset)
    sigma_g_sq, sigma_gp_sq = oracle.variance_bounds(region_radius)
    ell_g = float(np.linalg.norm(mean_mat, 2)) + noise_mat * math.sqrt(p * d)
    ell_f = 2.0 * (np.linalg.norm(mean_mat, 2) * region_radius + float(np.linalg.norm(mean_offset)))
    constants = SmoothnessConstants(
        ell_f=ell_f,
        L_f=2.0,
        ell_g=ell_g,
        L_g=0.0,
        sigma_g_sq=sigma_g_sq,
        sigma_gp_sq=sigma_gp_sq,
    )
    info = _quadratic_info(mean_mat, mean_offset, spectrum[0], 0.0, constants)
    problem = CompositeProblem(oracle=oracle, outer=QuadraticNormOuter(p), constants=constants)
    return problem, ZeroReg(), info
