"""Epoch-driven proximal solver with incremental variance reduction.

One epoch anchors the estimator at the current point, then performs the
scheduled number of proximal steps, advancing the estimator to each new
iterate with a small shared batch.  The returned point is an iterate drawn
uniformly from all epoch slots (pre-drawn from the schedule's slot count),
which is the object the stationarity guarantees speak about.  Restart
drivers chain runs, feeding each period's selected output into the next.

Two reference baselines share the trace machinery: deterministic proximal
gradient descent and a biased plug-in mini-batch method.

Sample accounting
-----------------
Traces charge each epoch its theoretical budget ``B_t + 2 tau_t S_t``: the
anchor slot carries the anchor cost plus ``2 S_t``, every later slot
``2 S_t``.  (A literal count of pair-evaluations would give
``B_t + 2 (tau_t - 1) S_t`` since the anchor slot needs no inner batch;
the counter follows the budget the parameter schedules are derived from,
which keeps trace x-axes comparable across schedules.)  Objective and
gradient-mapping diagnostics run on an exact or fixed-size Monte-Carlo
side channel and are never charged.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .estimator import advance, anchor, anchor_cost, composite_estimate
from .model import (
    ComponentOracle,
    CompositeProblem,
    OuterFunction,
    Vector,
    as_point,
)
from .prox import Regularizer, gradient_mapping_from, prox
from .rng import BASELINE, DIAGNOSTIC, OUTPUT, RngKey, key_tuple, substream
from .schedules import GRADIENT_DOMINANT_KINDS, EpochPlan, Schedule


class SolverError(RuntimeError):
    """Run aborted; carries the offending (epoch, inner) location."""

    def __init__(self, message: str, epoch: int | None = None, inner: int | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.inner = inner


@dataclass
class TraceOptions:
    """Trace recording knobs.

    ``cadence=None`` records every inner iteration for component counts up
    to 10^4 and every ceil(tau_t/10) iterations above that; anchor slots
    and the final slot are always recorded.  ``objective_draws`` sizes the
    Monte-Carlo diagnostic batch used when exact evaluation is unavailable.
    """

    diagnostics: bool = True
    cadence: int | None = None
    objective_draws: int = 10_000


@dataclass
class RunTrace:
    """Per-slot time series of a run.

    One record per recorded slot: epoch (1-based), inner index within the
    epoch, cumulative charged samples, objective, squared gradient-mapping
    norm, and elapsed wall-clock nanoseconds.  Cumulative samples are
    strictly increasing.
    """

    header: dict = field(default_factory=dict)
    epoch: list[int] = field(default_factory=list)
    inner: list[int] = field(default_factory=list)
    samples: list[int] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    grad_map_sq: list[float] = field(default_factory=list)
    wallclock_ns: list[int] = field(default_factory=list)

    def append(self, t: int, i: int, samples: int, phi: float, gsq: float, wall: int) -> None:
        self.epoch.append(int(t))
        self.inner.append(int(i))
        self.samples.append(int(samples))
        self.objective.append(float(phi))
        self.grad_map_sq.append(float(gsq))
        self.wallclock_ns.append(int(wall))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def final_samples(self) -> int:
        return self.samples[-1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "epoch": np.asarray(self.epoch, dtype=np.int64),
            "iter": np.asarray(self.inner, dtype=np.int64),
            "samples": np.asarray(self.samples, dtype=np.int64),
            "objective": np.asarray(self.objective, dtype=np.float64),
            "grad_map_sq": np.asarray(self.grad_map_sq, dtype=np.float64),
            "wallclock_ns": np.asarray(self.wallclock_ns, dtype=np.int64),
        }

    def extend_shifted(self, other: "RunTrace", epoch_offset: int, sample_offset: int, wall_offset: int) -> None:
        self.epoch.extend(t + epoch_offset for t in other.epoch)
        self.inner.extend(other.inner)
        self.samples.extend(s + sample_offset for s in other.samples)
        self.objective.extend(other.objective)
        self.grad_map_sq.extend(other.grad_map_sq)
        self.wallclock_ns.extend(w + wall_offset for w in other.wallclock_ns)


@dataclass
class SolverResult:
    """Outcome of a run: the randomly selected iterate, the last iterate,
    the slot (epoch, inner) the selection came from, and the trace.
    Restart drivers also report each period's selected output."""

    x_bar: Vector
    x_last: Vector
    x_bar_slot: tuple[int, int]
    trace: RunTrace
    period_outputs: list[Vector] | None = None


def _diagnostics(
    oracle: ComponentOracle,
    outer: OuterFunction,
    reg: Regularizer,
    x: Vector,
    eta: float,
    opts: TraceOptions,
    key: tuple[int, ...],
    t: int,
    i: int,
) -> tuple[float, float]:
    """Objective and squared gradient-mapping norm at ``x``.

    Exact when the oracle can evaluate exact means; otherwise a fixed-size
    Monte-Carlo side channel on its own substream.  Not charged to the
    sample counter.
    """
    if oracle.exact_available:
        y, jac = oracle.eval_full(x)
    else:
        rng = substream(key, DIAGNOSTIC, t, i)
        batch = oracle.sample_batch(rng, opts.objective_draws)
        y, jac = oracle.eval_batch_mean(batch, x)
    phi = outer.value(y) + reg.value(x)
    grad = jac.T @ outer.gradient(y)
    _, gsq = gradient_mapping_from(grad, reg, x, eta)
    return phi, gsq


def _epoch_cadence(plan: EpochPlan, oracle: ComponentOracle, opts: TraceOptions) -> int:
    if opts.cadence is not None:
        return max(1, int(opts.cadence))
    n = oracle.n_components
    if n is not None and n > 10_000:
        return max(1, math.ceil(plan.tau / 10))
    return 1


def run_civr(
    problem: CompositeProblem,
    reg: Regularizer,
    x_init: Vector,
    schedule: Schedule,
    seed: RngKey = 0,
    trace_opts: TraceOptions | None = None,
) -> SolverResult:
    """Run the variance-reduced proximal solver under ``schedule``.

    Per epoch t: anchor at the incoming point, take one proximal step with
    the anchor estimate, then ``tau_t - 1`` further steps, each preceded by
    an incremental advance of the estimator to the current iterate.  The
    epoch's last iterate seeds the next epoch.  The output ``x_bar`` is the
    iterate at a slot drawn uniformly (in advance) from all ``sum(tau_t)``
    slots.  Raises :class:`SolverError` with the offending location if an
    iterate leaves the finite range.
    """
    oracle, outer = problem.oracle, problem.outer
    opts = trace_opts or TraceOptions()
    key = key_tuple(seed)
    x = as_point(x_init, oracle.dim_d).copy()
    eta = schedule.eta

    total_slots = schedule.total_slots
    pick = int(substream(key, OUTPUT).integers(total_slots))
    trace = RunTrace(header={"schedule_kind": schedule.kind, "eta": eta, **schedule.meta})

    x_bar: Vector | None = None
    bar_slot = (0, 0)
    samples = 0
    slot_idx = 0
    t_start = time.perf_counter_ns()

    T = schedule.T
    for t, plan in enumerate(schedule.epochs, start=1):
        state = anchor(oracle, x, plan.B, key, epoch=t)
        samples += anchor_cost(oracle, plan.B)
        cadence = _epoch_cadence(plan, oracle, opts)
        for i in range(plan.tau):
            if i > 0:
                state = advance(state, oracle, x, plan.S, key, epoch=t, inner=i)
            samples += 2 * plan.S
            if slot_idx == pick:
                x_bar = x.copy()
                bar_slot = (t, i)
            grad = composite_estimate(state, outer)
            last_slot = t == T and i == plan.tau - 1
            if i == 0 or i % cadence == 0 or last_slot:
                if opts.diagnostics:
                    phi, gsq = _diagnostics(oracle, outer, reg, x, eta, opts, key, t, i)
                else:
                    phi, gsq = math.nan, math.nan
                trace.append(t, i, samples, phi, gsq, time.perf_counter_ns() - t_start)
            x = prox(reg, x - eta * grad, eta)
            if not np.all(np.isfinite(x)):
                raise SolverError(f"non-finite iterate at epoch {t}, inner {i}", t, i)
            slot_idx += 1

    assert x_bar is not None
    return SolverResult(x_bar=x_bar, x_last=x, x_bar_slot=bar_slot, trace=trace)


def run_restarted(
    problem: CompositeProblem,
    reg: Regularizer,
    x_init: Vector,
    schedule: Schedule | Callable[[int], Schedule],
    periods: int,
    seed: RngKey = 0,
    trace_opts: TraceOptions | None = None,
) -> SolverResult:
    """Chain ``periods`` runs, feeding each period's selected output onward.

    ``schedule`` is a fixed schedule or a callable of the 0-based period
    index.  Gradient-dominance presets are only analysed without a
    regularizer, so they are refused when ``reg`` is not the zero
    regularizer.  The trace is the concatenation of the period traces with
    cumulative epoch and sample offsets.
    """
    if periods < 1:
        raise ValueError("periods must be >= 1")
    key = key_tuple(seed)
    x = as_point(x_init, problem.oracle.dim_d)
    trace = RunTrace()
    outputs: list[Vector] = []
    epoch_offset = 0
    sample_offset = 0
    wall_offset = 0
    last: SolverResult | None = None
    last_offset = 0
    for k in range(periods):
        sched = schedule(k) if callable(schedule) else schedule
        if sched.kind in GRADIENT_DOMINANT_KINDS and not reg.is_zero:
            raise ValueError(
                "gradient-dominant restart presets require the zero regularizer; "
                f"got {reg!r}"
            )
        if not trace.header:
            trace.header = {"schedule_kind": f"restarted:{sched.kind}", "eta": sched.eta}
        res = run_civr(problem, reg, x, sched, seed=key + (k,), trace_opts=trace_opts)
        trace.extend_shifted(res.trace, epoch_offset, sample_offset, wall_offset)
        last_offset = epoch_offset
        epoch_offset += sched.T
        sample_offset = trace.samples[-1] if trace.samples else sample_offset
        wall_offset = trace.wallclock_ns[-1] if trace.wallclock_ns else wall_offset
        outputs.append(res.x_bar)
        x = res.x_bar
        last = res
    assert last is not None
    return SolverResult(
        x_bar=last.x_bar,
        x_last=last.x_last,
        x_bar_slot=(last.x_bar_slot[0] + last_offset, last.x_bar_slot[1]),
        trace=trace,
        period_outputs=outputs,
    )


def baseline_prox_fullgrad(
    problem: CompositeProblem,
    reg: Regularizer,
    x_init: Vector,
    eta: float,
    iters: int,
    trace_opts: TraceOptions | None = None,
) -> SolverResult:
    """Deterministic proximal gradient descent with exact composite gradients.

    Reference trajectory for the full-batch degeneracy of the stochastic
    solver.  Each iteration charges one exact evaluation.
    """
    oracle, outer = problem.oracle, problem.outer
    if not oracle.exact_available:
        raise ValueError("full-gradient baseline needs exact mean evaluation")
    if not eta > 0:
        raise ValueError("eta must be positive")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    opts = trace_opts or TraceOptions()
    x = as_point(x_init, oracle.dim_d).copy()
    trace = RunTrace(header={"schedule_kind": "fullgrad", "eta": eta})
    samples = 0
    t_start = time.perf_counter_ns()
    for k in range(1, iters + 1):
        y, jac = oracle.eval_full(x)
        grad = jac.T @ outer.gradient(y)
        samples += oracle.full_cost
        if opts.diagnostics:
            phi = outer.value(y) + reg.value(x)
            _, gsq = gradient_mapping_from(grad, reg, x, eta)
        else:
            phi, gsq = math.nan, math.nan
        trace.append(k, 0, samples, phi, gsq, time.perf_counter_ns() - t_start)
        x = prox(reg, x - eta * grad, eta)
        if not np.all(np.isfinite(x)):
            raise SolverError(f"non-finite iterate at iteration {k}", k, 0)
    return SolverResult(x_bar=x.copy(), x_last=x, x_bar_slot=(iters, 0), trace=trace)


def baseline_prox_plugin_sgd(
    problem: CompositeProblem,
    reg: Regularizer,
    x_init: Vector,
    eta: float | Callable[[int], float],
    batch: int,
    iters: int,
    seed: RngKey = 0,
    trace_opts: TraceOptions | None = None,
) -> SolverResult:
    """Biased mini-batch proximal method built on the plug-in estimate.

    Each step forms sample means over a fresh batch and uses
    ``(g~')^T f'(g~)`` as the gradient; included to visualise the cost of
    the plug-in bias.  A finite-sum batch of size >= n uses the full index
    set, making it coincide with the deterministic baseline.  ``eta`` may
    be a constant or a callable of the 1-based iteration.
    """
    oracle, outer = problem.oracle, problem.outer
    if batch < 1:
        raise ValueError("batch must be >= 1")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    opts = trace_opts or TraceOptions()
    key = key_tuple(seed)
    x = as_point(x_init, oracle.dim_d).copy()
    step_of = eta if callable(eta) else (lambda k: float(eta))
    trace = RunTrace(header={"schedule_kind": "plugin-sgd", "batch": batch})
    samples = 0
    n = oracle.n_components
    t_start = time.perf_counter_ns()
    for k in range(1, iters + 1):
        eta_k = float(step_of(k))
        if not eta_k > 0:
            raise ValueError(f"step size must be positive, got {eta_k} at iteration {k}")
        if n is not None and batch >= n:
            keys = np.arange(n)
            samples += n
        else:
            keys = oracle.sample_batch(substream(key, BASELINE, k), batch)
            samples += batch
        y, jac = oracle.eval_batch_mean(keys, x)
        grad = jac.T @ outer.gradient(y)
        if opts.diagnostics:
            phi, gsq = _diagnostics(oracle, outer, reg, x, eta_k, opts, key, k, 0)
        else:
            phi, gsq = math.nan, math.nan
        trace.append(k, 0, samples, phi, gsq, time.perf_counter_ns() - t_start)
        x = prox(reg, x - eta_k * grad, eta_k)
        if not np.all(np.isfinite(x)):
            raise SolverError(f"non-finite iterate at iteration {k}", k, 0)
    return SolverResult(x_bar=x.copy(), x_last=x, x_bar_slot=(iters, 0), trace=trace)
