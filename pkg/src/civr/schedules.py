"""Epoch schedules: per-epoch (tau, B, S) triples plus the step size.

Builders encode the parameter choices backed by the convergence analysis:
constant and growing triples for the expectation and finite-sum regimes,
the square-root growth rule used by the experiment harness, and the
restart presets for gradient-dominant and optimally strongly convex
objectives.  All integer formulas round up and clamp below at 1 (the raw
expressions can hit 0 for degenerate tolerances or zero variance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import FULL, DerivedConstants, _FullBatch

BatchSpec = int | _FullBatch

CONSTANT_EXPECTATION = "constant-expectation"
ADAPTIVE_EXPECTATION = "adaptive-expectation"
CONSTANT_FINITE = "constant-finite"
ADAPTIVE_FINITE = "adaptive-finite"
ADAPTIVE_SQRT = "adaptive-sqrt-finite"
GD_EXPECTATION = "gradient-dominant-expectation"
GD_FINITE = "gradient-dominant-finite"
OSC_EXPECTATION = "strongly-convex-expectation"
OSC_FINITE = "strongly-convex-finite"
CUSTOM = "custom"

GRADIENT_DOMINANT_KINDS = frozenset({GD_EXPECTATION, GD_FINITE})


def _ceil1(v: float) -> int:
    """Ceiling clamped below at 1."""
    return max(1, math.ceil(v))


@dataclass(frozen=True)
class EpochPlan:
    """One epoch: ``tau`` proximal steps, anchor batch ``B``, inner batch ``S``."""

    tau: int
    B: BatchSpec
    S: int

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.S < 1:
            raise ValueError(f"S must be >= 1, got {self.S}")
        if self.tau > self.S:
            raise ValueError(f"epoch length tau={self.tau} may not exceed inner batch S={self.S}")
        if self.B is not FULL and int(self.B) < 1:
            raise ValueError(f"anchor batch must be >= 1 or FULL, got {self.B}")


@dataclass(frozen=True)
class Schedule:
    """A full run plan: step size and one :class:`EpochPlan` per epoch."""

    eta: float
    epochs: tuple[EpochPlan, ...]
    kind: str = CUSTOM
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.epochs:
            raise ValueError("schedule needs at least one epoch")

    @property
    def T(self) -> int:
        return len(self.epochs)

    @property
    def total_slots(self) -> int:
        """Total output-eligible iterates (sum of epoch lengths)."""
        return sum(e.tau for e in self.epochs)

    def nominal_cost(self, full_cost: int | None = None) -> int:
        """Sample budget under the per-epoch accounting B_t + 2 tau_t S_t.

        ``full_cost`` supplies the charge of a FULL anchor (n for finite
        sums).  This is the counter convention used by run traces.
        """
        total = 0
        for e in self.epochs:
            if e.B is FULL:
                if full_cost is None:
                    raise ValueError("full_cost required to price FULL anchors")
                total += int(full_cost)
            else:
                total += int(e.B)
            total += 2 * e.tau * e.S
        return total


def custom(eta: float, triples, kind: str = CUSTOM, meta: dict | None = None) -> Schedule:
    """Schedule from explicit (tau, B, S) triples; B may be FULL or "full"."""
    epochs = []
    for tau, B, S in triples:
        if isinstance(B, str):
            if B.lower() != "full":
                raise ValueError(f"unrecognised anchor spec {B!r}")
            B = FULL
        epochs.append(EpochPlan(int(tau), B if B is FULL else int(B), int(S)))
    return Schedule(eta=float(eta), epochs=tuple(epochs), kind=kind, meta=meta or {})


def _resolve_eta(eta: float | None, c: DerivedConstants | None, strongly: bool = False) -> float:
    if eta is not None:
        return float(eta)
    if c is None:
        raise ValueError("supply eta explicitly or derived constants to default it")
    return c.eta_max_strongly if strongly else c.eta_max_nonconvex


def constant_expectation(eps: float, c: DerivedConstants, eta: float | None = None) -> Schedule:
    """Constant triples for a target stationarity tolerance ``eps``.

    T = tau = S = ceil(1/sqrt(eps)) and B = ceil(sigma_0^2 / eps), yielding
    the eps^{-3/2} sample budget T*B + 2*T*tau*S.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = _ceil1(1.0 / math.sqrt(eps))
    B = _ceil1(c.sigma_0_sq / eps)
    plan = EpochPlan(tau=m, B=B, S=m)
    return Schedule(
        eta=_resolve_eta(eta, c),
        epochs=(plan,) * m,
        kind=CONSTANT_EXPECTATION,
        meta={"sigma0_sq": c.sigma_0_sq},
    )


def adaptive_expectation(
    a: float, b: float, T: int, c: DerivedConstants, eta: float | None = None
) -> Schedule:
    """Growing triples tau_t = S_t = ceil(a t + b), B_t = ceil(sigma_0^2 (a t + b)^2)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if b < 0:
        raise ValueError("b must be nonnegative")
    if T < 1:
        raise ValueError("T must be >= 1")
    epochs = []
    for t in range(1, T + 1):
        m = _ceil1(a * t + b)
        B = _ceil1(c.sigma_0_sq * (a * t + b) ** 2)
        epochs.append(EpochPlan(tau=m, B=B, S=m))
    return Schedule(
        eta=_resolve_eta(eta, c),
        epochs=tuple(epochs),
        kind=ADAPTIVE_EXPECTATION,
        meta={"sigma0_sq": c.sigma_0_sq},
    )


def constant_finite(
    n: int, T: int, eta: float | None = None, c: DerivedConstants | None = None
) -> Schedule:
    """Finite-sum triples: exact anchors, tau = S = ceil(sqrt(n)).

    Per-epoch cost is n + 2 ceil(sqrt(n))^2, roughly 3n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if T < 1:
        raise ValueError("T must be >= 1")
    m = _ceil1(math.sqrt(n))
    plan = EpochPlan(tau=m, B=FULL, S=m)
    return Schedule(eta=_resolve_eta(eta, c), epochs=(plan,) * T, kind=CONSTANT_FINITE)


def adaptive_finite(
    n: int,
    a: float,
    b: float,
    T: int,
    c: DerivedConstants | None = None,
    eta: float | None = None,
) -> Schedule:
    """Finite-sum growth phase followed by exact anchors.

    For t <= T0 = ceil((sqrt(n) - b)/a): tau_t = S_t = ceil(a t + b) with
    sampled anchors B_t = S_t^2 (switching to exact once that reaches n);
    afterwards exact anchors with tau = S = ceil(sqrt(n)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if a <= 0:
        raise ValueError("a must be positive")
    root = math.sqrt(n)
    if not 0 <= b < root:
        raise ValueError(f"b must lie in [0, sqrt(n)), got {b}")
    if T < 1:
        raise ValueError("T must be >= 1")
    T0 = math.ceil((root - b) / a)
    m_full = _ceil1(root)
    epochs = []
    for t in range(1, T + 1):
        if t <= T0:
            m = _ceil1(a * t + b)
            B: BatchSpec = m * m
            if B >= n:
                B = FULL
            epochs.append(EpochPlan(tau=m, B=B, S=m))
        else:
            epochs.append(EpochPlan(tau=m_full, B=FULL, S=m_full))
    return Schedule(
        eta=_resolve_eta(eta, c), epochs=tuple(epochs), kind=ADAPTIVE_FINITE, meta={"T0": T0}
    )


def adaptive_sqrt_finite(
    n: int,
    T: int,
    eta: float | None = None,
    c: DerivedConstants | None = None,
    growth: float = 10.0,
) -> Schedule:
    """Square-root growth rule: tau_t = S_t = ceil(min(sqrt(growth*t + 1), sqrt(n))).

    The harness's adaptive preset: inner batches grow with the epoch index
    until they reach the ceil(sqrt(n)) of the constant finite-sum rule,
    while anchors stay exact (the finite-sum default).  The default growth
    of 10 reproduces the batch rule used by the reference experiments.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if T < 1:
        raise ValueError("T must be >= 1")
    root = math.sqrt(n)
    epochs = []
    for t in range(1, T + 1):
        m = _ceil1(min(math.sqrt(growth * t + 1.0), root))
        epochs.append(EpochPlan(tau=m, B=FULL, S=m))
    return Schedule(eta=_resolve_eta(eta, c), epochs=tuple(epochs), kind=ADAPTIVE_SQRT)


def gradient_dominant_expectation(
    eps: float, nu: float, c: DerivedConstants, eta: float | None = None
) -> Schedule:
    """Restart-period schedule for a nu-gradient-dominant objective (r = 0).

    tau = S = ceil(1/sqrt(eps)), B = ceil(12 nu sigma_0^2 / eps) and
    T = ceil(16 nu sqrt(eps) / eta); one period halves the expected
    objective gap up to eps/2.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if nu <= 0:
        raise ValueError("nu must be positive")
    eta = _resolve_eta(eta, c)
    m = _ceil1(1.0 / math.sqrt(eps))
    B = _ceil1(12.0 * nu * c.sigma_0_sq / eps)
    T = _ceil1(16.0 * nu * math.sqrt(eps) / eta)
    plan = EpochPlan(tau=m, B=B, S=m)
    return Schedule(
        eta=eta, epochs=(plan,) * T, kind=GD_EXPECTATION, meta={"sigma0_sq": c.sigma_0_sq}
    )


def gradient_dominant_finite(
    n: int, nu: float, c: DerivedConstants | None = None, eta: float | None = None
) -> Schedule:
    """Finite-sum restart-period schedule under nu-gradient dominance (r = 0).

    Exact anchors, tau = S = ceil(sqrt(n)), T = ceil(16 nu / (sqrt(n) eta));
    one period halves the expected objective gap.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if nu <= 0:
        raise ValueError("nu must be positive")
    eta = _resolve_eta(eta, c)
    m = _ceil1(math.sqrt(n))
    T = _ceil1(16.0 * nu / (math.sqrt(n) * eta))
    plan = EpochPlan(tau=m, B=FULL, S=m)
    return Schedule(eta=eta, epochs=(plan,) * T, kind=GD_FINITE)


def strongly_convex_expectation(
    eps: float, mu: float, c: DerivedConstants, eta: float | None = None
) -> Schedule:
    """Restart-period schedule under mu-optimal strong convexity of Phi.

    tau = S = ceil(1/sqrt(eps)), B = ceil(9 sigma_0^2 / (2 mu eps)) and
    T = ceil(5 sqrt(eps) / (mu eta)); needs the stricter step-size ceiling
    (defaults to eta_max_strongly).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if mu <= 0:
        raise ValueError("mu must be positive")
    eta = _resolve_eta(eta, c, strongly=True)
    m = _ceil1(1.0 / math.sqrt(eps))
    B = _ceil1(9.0 * c.sigma_0_sq / (2.0 * mu * eps))
    T = _ceil1(5.0 * math.sqrt(eps) / (mu * eta))
    plan = EpochPlan(tau=m, B=B, S=m)
    return Schedule(
        eta=eta, epochs=(plan,) * T, kind=OSC_EXPECTATION, meta={"sigma0_sq": c.sigma_0_sq}
    )


def strongly_convex_finite(
    n: int, mu: float, c: DerivedConstants | None = None, eta: float | None = None
) -> Schedule:
    """Finite-sum restart-period schedule under mu-optimal strong convexity.

    Exact anchors, tau = S = ceil(sqrt(n)), T = ceil(5 / (sqrt(n) mu eta)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if mu <= 0:
        raise ValueError("mu must be positive")
    eta = _resolve_eta(eta, c, strongly=True)
    m = _ceil1(math.sqrt(n))
    T = _ceil1(5.0 / (math.sqrt(n) * mu * eta))
    plan = EpochPlan(tau=m, B=FULL, S=m)
    return Schedule(eta=eta, epochs=(plan,) * T, kind=OSC_FINITE)
