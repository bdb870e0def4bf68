"""Incremental variance-reduced estimation of the inner map and its Jacobian.

The estimator keeps a running pair (y, z) approximating (g(x), g'(x)) along
the iterate path.  Each epoch starts from a large-batch (or exact) anchor

    y = mean of g_xi(x0) over an anchor batch,   z likewise for Jacobians,

and each inner step applies an incremental correction with a small shared
batch S:

    y <- y + mean_S[g_xi(x_new)] - mean_S[g_xi(x_prev)]
    z <- z + mean_S[g'_xi(x_new)] - mean_S[g'_xi(x_prev)]

The same draws feed the value and Jacobian corrections.  The inner-loop
estimates are biased (their conditional mean carries the previous error
forward) but have small mean squared error; the composite gradient fed to
the proximal step is ``z^T f'(y)``.

Cost accounting: an anchor consumes its batch size (or the full cost for
exact anchors); an advance consumes 2S pair-evaluations, or 2n when a
finite-sum batch of size >= n collapses to the exact full difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FULL, ComponentOracle, Matrix, OuterFunction, Vector, as_point
from .rng import ANCHOR, ADVANCE, RngKey, substream


@dataclass
class EstimatorState:
    """Running estimates (y, z) of (g, g') at the point ``x_prev``.

    Single-owner mutable: operations update it in place and return it.
    ``exact`` records that (y, z) equal the exact mean maps at ``x_prev``,
    which lets exact advances stay bit-exact instead of accumulating
    telescoped round-off.
    """

    y: Vector
    z: Matrix
    x_prev: Vector
    exact: bool = False

    def __post_init__(self):
        p = self.y.shape[0]
        d = self.x_prev.shape[0]
        if self.z.shape != (p, d):
            raise ValueError(f"Jacobian estimate has shape {self.z.shape}, expected {(p, d)}")


def anchor_cost(oracle: ComponentOracle, B) -> int:
    """Oracle samples consumed by :func:`anchor` with batch spec ``B``."""
    if B is FULL or (oracle.is_finite_sum and int(B) >= oracle.n_components):
        return oracle.full_cost
    return int(B)


def advance_cost(oracle: ComponentOracle, S: int) -> int:
    """Oracle samples consumed by :func:`advance` with batch size ``S``."""
    n = oracle.n_components
    if n is not None and S >= n:
        return 2 * n
    return 2 * int(S)


def anchor(oracle: ComponentOracle, x0: Vector, B, rng_key: RngKey, epoch: int = 0) -> EstimatorState:
    """Start-of-epoch estimate of (g, g') at ``x0``.

    ``B`` is either a positive draw count or ``FULL``.  ``FULL`` (and any
    finite-sum count >= n) evaluates the exact means and needs an
    exact-capable oracle; sampled anchors draw i.i.d. with replacement
    from the anchor substream for ``epoch``.
    """
    x0 = as_point(x0, oracle.dim_d)
    if B is FULL:
        if not oracle.exact_available:
            raise ValueError("FULL anchor requested but the oracle cannot evaluate exact means")
        y, z = oracle.eval_full(x0)
        return EstimatorState(y=np.array(y), z=np.array(z), x_prev=x0.copy(), exact=True)
    B = int(B)
    if B <= 0:
        raise ValueError("anchor batch size must be positive")
    n = oracle.n_components
    if n is not None and B >= n:
        y, z = oracle.eval_full(x0)
        return EstimatorState(y=np.array(y), z=np.array(z), x_prev=x0.copy(), exact=True)
    rng = substream(rng_key, ANCHOR, epoch)
    batch = oracle.sample_batch(rng, B)
    y, z = oracle.eval_batch_mean(batch, x0)
    return EstimatorState(y=np.array(y), z=np.array(z), x_prev=x0.copy(), exact=False)


def advance(
    state: EstimatorState,
    oracle: ComponentOracle,
    x_new: Vector,
    S: int,
    rng_key: RngKey,
    epoch: int = 0,
    inner: int = 0,
) -> EstimatorState:
    """Advance the estimate from ``state.x_prev`` to ``x_new`` with batch size S.

    Draws one batch shared by the value and Jacobian corrections, from the
    advance substream for ``(epoch, inner)``.  A finite-sum batch of size
    >= n collapses to the deterministic full difference; from an exact
    state that assigns the exact means directly, keeping the degeneracy to
    full-batch proximal gradient bit-for-bit.
    """
    S = int(S)
    if S <= 0:
        raise ValueError("advance batch size must be positive")
    x_new = as_point(x_new, oracle.dim_d)
    n = oracle.n_components
    if n is not None and S >= n:
        y_new, z_new = oracle.eval_full(x_new)
        if state.exact:
            state.y = np.array(y_new)
            state.z = np.array(z_new)
        else:
            y_old, z_old = oracle.eval_full(state.x_prev)
            state.y = state.y + (y_new - y_old)
            state.z = state.z + (z_new - z_old)
        state.x_prev = x_new.copy()
        return state
    rng = substream(rng_key, ADVANCE, epoch, inner)
    batch = oracle.sample_batch(rng, S)
    y_new, z_new = oracle.eval_batch_mean(batch, x_new)
    y_old, z_old = oracle.eval_batch_mean(batch, state.x_prev)
    state.y = state.y + (y_new - y_old)
    state.z = state.z + (z_new - z_old)
    state.x_prev = x_new.copy()
    state.exact = False
    return state


def composite_estimate(state: EstimatorState, outer: OuterFunction) -> Vector:
    """Composite gradient estimate ``z^T f'(y)`` from the current state."""
    if state.y.shape[0] != outer.dim_p:
        raise ValueError(
            f"inner dimension mismatch: state p={state.y.shape[0]}, outer p={outer.dim_p}"
        )
    return state.z.T @ outer.gradient(state.y)
