"""Composite problem model: component oracles, outer functions, constants.

The objective throughout the package is

    Phi(x) = f(g(x)) + r(x),      g(x) = mean/expectation of g_xi(x),

where each component xi yields a vector value ``g_xi(x)`` in R^p together
with its Jacobian in R^{p x d}.  A :class:`ComponentOracle` provides access
to the components; an :class:`OuterFunction` provides f and its gradient.
The exact composite gradient is ``g'(x)^T f'(g(x))``.

Oracles come in two flavours:

* finite-sum: xi is uniform over ``{0, .., n-1}`` and exact means are the
  arithmetic average over all components (``eval_full``);
* expectation: xi is drawn from a sampler.  Some expectation oracles can
  still evaluate the exact mean maps in closed form (``exact_available``);
  those support exact anchors and exact diagnostics even though they are
  not finite sums.

Points, inner values and Jacobians are plain float64 ndarrays of shapes
``(d,)``, ``(p,)`` and ``(p, d)``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from .rng import RngKey, PILOT, substream

Vector = NDArray[np.float64]
Matrix = NDArray[np.float64]


class _FullBatch:
    """Sentinel requesting exact means instead of a sampled batch."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "FULL"


FULL = _FullBatch()


def as_point(x, dim: int | None = None) -> Vector:
    """Coerce to a float64 vector, optionally checking its length."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d point, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {v.shape[0]}")
    return v


class ComponentOracle(ABC):
    """Access to the components of the inner mapping g and its Jacobian.

    Subclasses set ``dim_d`` (decision dimension) and ``dim_p`` (inner
    dimension) and implement component evaluation.  A batch is whatever
    ``sample_batch`` returns; only the oracle interprets it.  For
    finite sums a batch is an int array of component indices.
    """

    dim_d: int
    dim_p: int

    @property
    def n_components(self) -> int | None:
        """Component count for finite sums, ``None`` in expectation mode."""
        return None

    @property
    def is_finite_sum(self) -> bool:
        return self.n_components is not None

    @property
    def exact_available(self) -> bool:
        """Whether ``eval_full`` returns the exact mean maps."""
        return self.is_finite_sum

    @property
    def full_cost(self) -> int:
        """Oracle samples charged for one exact evaluation (n for finite sums)."""
        n = self.n_components
        if n is None:
            raise NotImplementedError("exact-capable oracles must define full_cost")
        return n

    @abstractmethod
    def eval_component(self, key, x: Vector) -> tuple[Vector, Matrix]:
        """Value and Jacobian of one component at ``x``."""

    def sample_batch(self, rng: np.random.Generator, size: int):
        """Draw a batch of ``size`` components (i.i.d., with replacement)."""
        n = self.n_components
        if n is None:
            raise NotImplementedError("expectation-mode oracles must implement sample_batch")
        return rng.integers(0, n, size=size)

    def batch_size(self, batch) -> int:
        return len(batch)

    def iter_batch(self, batch):
        """Iterate the per-draw keys of a batch."""
        return iter(batch)

    def eval_batch_mean(self, batch, x: Vector) -> tuple[Vector, Matrix]:
        """Mean value and Jacobian over a batch.  Default: loop and average."""
        keys = list(self.iter_batch(batch))
        if not keys:
            raise ValueError("empty batch")
        vals = np.empty((len(keys), self.dim_p))
        jacs = np.empty((len(keys), self.dim_p, self.dim_d))
        for k, key in enumerate(keys):
            y, jac = self.eval_component(key, x)
            vals[k] = y
            jacs[k] = jac
        return vals.mean(axis=0), jacs.mean(axis=0)

    def eval_full(self, x: Vector) -> tuple[Vector, Matrix]:
        """Exact mean value and Jacobian.

        Finite sums average components in ascending index order (NumPy's
        pairwise reduction), which keeps full-batch runs bit-reproducible.
        """
        n = self.n_components
        if n is None:
            raise ValueError("eval_full requires a finite-sum or exact-capable oracle")
        return self.eval_batch_mean(np.arange(n), x)


class FiniteSumFunctionOracle(ComponentOracle):
    """Finite-sum oracle built from per-component (value, jacobian) callables.

    Convenience for tests and small custom problems; evaluation loops in
    Python, so use the vectorised application oracles for anything large.
    """

    def __init__(self, components: Sequence[tuple[Callable, Callable]], dim_d: int, dim_p: int):
        if not components:
            raise ValueError("need at least one component")
        self._components = list(components)
        self.dim_d = int(dim_d)
        self.dim_p = int(dim_p)

    @property
    def n_components(self) -> int:
        return len(self._components)

    def eval_component(self, key, x: Vector) -> tuple[Vector, Matrix]:
        x = as_point(x, self.dim_d)
        value_fn, jac_fn = self._components[int(key)]
        y = np.atleast_1d(np.asarray(value_fn(x), dtype=np.float64))
        jac = np.asarray(jac_fn(x), dtype=np.float64).reshape(self.dim_p, self.dim_d)
        return y, jac


class OuterFunction(ABC):
    """Smooth outer map f: R^p -> R with gradient f'."""

    dim_p: int

    @abstractmethod
    def value(self, u: Vector) -> float:
        ...

    @abstractmethod
    def gradient(self, u: Vector) -> Vector:
        ...


class FunctionOuter(OuterFunction):
    """Outer function from a (value, gradient) pair of callables."""

    def __init__(self, dim_p: int, value_fn: Callable, grad_fn: Callable):
        self.dim_p = int(dim_p)
        self._value = value_fn
        self._grad = grad_fn

    def value(self, u: Vector) -> float:
        return float(self._value(np.asarray(u, dtype=np.float64)))

    def gradient(self, u: Vector) -> Vector:
        return np.atleast_1d(np.asarray(self._grad(np.asarray(u, dtype=np.float64)), dtype=np.float64))


class QuadraticNormOuter(OuterFunction):
    """f(u) = ||u||^2 with gradient 2u."""

    def __init__(self, dim_p: int):
        self.dim_p = int(dim_p)

    def value(self, u: Vector) -> float:
        u = np.asarray(u, dtype=np.float64)
        return float(u @ u)

    def gradient(self, u: Vector) -> Vector:
        return 2.0 * np.asarray(u, dtype=np.float64)


class IdentityOuter(OuterFunction):
    """Scalar identity f(u) = u_0 (p = 1); reduces the composite problem to a
    plain (non-nested) stochastic objective."""

    dim_p = 1

    def value(self, u: Vector) -> float:
        return float(np.asarray(u).reshape(()) if np.ndim(u) == 0 else np.asarray(u)[0])

    def gradient(self, u: Vector) -> Vector:
        return np.ones(1)


@dataclass(frozen=True)
class CompositeProblem:
    """An oracle/outer pair with optional smoothness constants attached."""

    oracle: ComponentOracle
    outer: OuterFunction
    constants: "SmoothnessConstants | None" = None

    def __post_init__(self):
        if self.oracle.dim_p != self.outer.dim_p:
            raise ValueError(
                f"inner dimension mismatch: oracle p={self.oracle.dim_p}, outer p={self.outer.dim_p}"
            )


@dataclass(frozen=True)
class SmoothnessConstants:
    """Lipschitz and variance constants of a problem instance.

    ``ell_f``/``ell_g`` bound the gradients of f and the components,
    ``L_f``/``L_g`` bound their gradient/Jacobian Lipschitz moduli, and the
    sigma fields bound component variances (expectation mode only; ignored
    for finite sums).  For outer functions that are only locally Lipschitz
    (the quadratic ones used by the applications), callers supply values
    valid on a bounded region; the applications default to a box of radius
    10 per coordinate.
    """

    ell_f: float
    L_f: float
    ell_g: float
    L_g: float
    sigma_g_sq: float = 0.0
    sigma_gp_sq: float = 0.0

    def __post_init__(self):
        for name in ("ell_f", "L_f", "ell_g", "L_g", "sigma_g_sq", "sigma_gp_sq"):
            v = getattr(self, name)
            if not (v >= 0.0) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite nonnegative real, got {v}")


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from :class:`SmoothnessConstants`; see :func:`derive_constants`."""

    L_F: float
    G_0: float
    sigma_0_sq: float
    eta_max_nonconvex: float
    eta_max_strongly: float


def derive_constants(c: SmoothnessConstants) -> DerivedConstants:
    """Composite smoothness constants and the two step-size ceilings.

    ``L_F`` is the Lipschitz modulus of the composite gradient, ``G_0``
    scales the inner-loop MSE accumulation and ``sigma_0_sq`` the anchor
    variance.  ``eta_max_nonconvex`` is the largest step size admitted by
    the nonconvex epoch analysis and ``eta_max_strongly`` the (smaller)
    ceiling used under optimal strong convexity.  Degenerate all-zero
    constants yield infinite ceilings.
    """
    L_F = c.ell_g**2 * c.L_f + c.ell_f * c.L_g
    G_0 = 2.0 * (c.ell_g**4 * c.L_f**2 + c.ell_f**2 * c.L_g**2)
    sigma_0_sq = 2.0 * (c.ell_g**2 * c.L_f**2 * c.sigma_g_sq + c.ell_f**2 * c.sigma_gp_sq)
    denom_nc = L_F + math.sqrt(L_F**2 + 12.0 * G_0)
    denom_sc = L_F + math.sqrt(L_F**2 + 36.0 * G_0)
    eta_nc = 4.0 / denom_nc if denom_nc > 0 else math.inf
    eta_sc = 2.0 / denom_sc if denom_sc > 0 else math.inf
    return DerivedConstants(L_F, G_0, sigma_0_sq, eta_nc, eta_sc)


def composite_value(oracle: ComponentOracle, outer: OuterFunction, reg, x: Vector) -> float:
    """Exact objective f(g(x)) + r(x); requires exact mean evaluation."""
    if not oracle.exact_available:
        raise ValueError("exact evaluation unavailable; use monte_carlo_value for sampled oracles")
    x = as_point(x, oracle.dim_d)
    y, _ = oracle.eval_full(x)
    return outer.value(y) + reg.value(x)


def composite_gradient(oracle: ComponentOracle, outer: OuterFunction, x: Vector) -> Vector:
    """Exact composite gradient g'(x)^T f'(g(x))."""
    if oracle.dim_p != outer.dim_p:
        raise ValueError(f"inner dimension mismatch: oracle p={oracle.dim_p}, outer p={outer.dim_p}")
    if not oracle.exact_available:
        raise ValueError("exact evaluation unavailable for this oracle")
    x = as_point(x, oracle.dim_d)
    y, jac = oracle.eval_full(x)
    return jac.T @ outer.gradient(y)


def plugin_gradient_estimate(oracle: ComponentOracle, outer: OuterFunction, x: Vector, sample) -> Vector:
    """Plug-in gradient estimate from raw sample means.

    Forms sample means (g~, g~') over ``sample`` and returns
    ``(g~')^T f'(g~)``.  This is biased for the composite gradient whenever
    f is nonlinear, however large the sample; it exists as the mini-batch
    baseline's gradient and as the raw ingredient of the anchor step.
    """
    x = as_point(x, oracle.dim_d)
    if oracle.batch_size(sample) == 0:
        raise ValueError("empty sample")
    y, jac = oracle.eval_batch_mean(sample, x)
    return jac.T @ outer.gradient(y)


def monte_carlo_value(
    oracle: ComponentOracle,
    outer: OuterFunction,
    reg,
    x: Vector,
    draws: int,
    rng_key: RngKey,
) -> float:
    """Plug-in objective estimate f(mean of sampled g) + r(x), expectation mode.

    Deterministic given (rng_key, draws).  Draw counts are diagnostics and
    are not charged to any run's sample counter.
    """
    if oracle.is_finite_sum:
        raise ValueError("finite-sum oracles evaluate exactly; use composite_value")
    if draws <= 0:
        raise ValueError("draws must be positive")
    x = as_point(x, oracle.dim_d)
    rng = substream(rng_key, PILOT)
    batch = oracle.sample_batch(rng, draws)
    y, _ = oracle.eval_batch_mean(batch, x)
    return outer.value(y) + reg.value(x)


def pilot_derived_constants(
    c: SmoothnessConstants,
    oracle: ComponentOracle,
    x0: Vector,
    draws: int = 1000,
    rng_key: RngKey = 0,
) -> DerivedConstants:
    """Derived constants with a pilot-estimated anchor-variance term.

    For expectation-mode problems whose variance bounds were not supplied,
    replaces sigma_0_sq by the :func:`pilot_sigma0_sq` estimate at ``x0``.
    Schedule builders stash the value in the schedule metadata, so it ends
    up in the run trace header.
    """
    base = derive_constants(c)
    if c.sigma_g_sq > 0 or c.sigma_gp_sq > 0:
        return base
    pilot = pilot_sigma0_sq(oracle, c, x0, draws, rng_key)
    return DerivedConstants(
        base.L_F, base.G_0, pilot, base.eta_max_nonconvex, base.eta_max_strongly
    )


def pilot_sigma0_sq(
    oracle: ComponentOracle,
    c: SmoothnessConstants,
    x0: Vector,
    draws: int = 1000,
    rng_key: RngKey = 0,
) -> float:
    """Empirical anchor-variance constant from a pilot batch at ``x0``.

    Estimates the component variances of g and g' at ``x0`` and plugs them
    into the derived-constant formula.  Used when variance bounds were not
    supplied for an expectation-mode schedule; the harness records the
    value in the trace header.
    """
    if draws <= 1:
        raise ValueError("pilot needs at least two draws")
    x0 = as_point(x0, oracle.dim_d)
    rng = substream(rng_key, PILOT)
    batch = oracle.sample_batch(rng, draws)
    vals = np.empty((draws, oracle.dim_p))
    jacs = np.empty((draws, oracle.dim_p, oracle.dim_d))
    for k, key in enumerate(oracle.iter_batch(batch)):
        vals[k], jacs[k] = oracle.eval_component(key, x0)
    var_g = float(((vals - vals.mean(axis=0)) ** 2).sum(axis=1).mean())
    var_gp = float(((jacs - jacs.mean(axis=0)) ** 2).sum(axis=(1, 2)).mean())
    return 2.0 * (c.ell_g**2 * c.L_f**2 * var_g + c.ell_f**2 * var_gp)


class CountingOracle(ComponentOracle):
    """Wrapper counting component evaluations; one unit per (value, Jacobian)
    pair at one point.  A measuring device for accounting tests; the counter
    makes it stateful, so do not share across threads."""

    def __init__(self, inner: ComponentOracle):
        self.inner = inner
        self.dim_d = inner.dim_d
        self.dim_p = inner.dim_p
        self.count = 0

    @property
    def n_components(self) -> int | None:
        return self.inner.n_components

    @property
    def exact_available(self) -> bool:
        return self.inner.exact_available

    @property
    def full_cost(self) -> int:
        return self.inner.full_cost

    def sample_batch(self, rng, size):
        return self.inner.sample_batch(rng, size)

    def batch_size(self, batch) -> int:
        return self.inner.batch_size(batch)

    def iter_batch(self, batch):
        return self.inner.iter_batch(batch)

    def eval_component(self, key, x):
        self.count += 1
        return self.inner.eval_component(key, x)

    def eval_batch_mean(self, batch, x):
        self.count += self.inner.batch_size(batch)
        return self.inner.eval_batch_mean(batch, x)

    def eval_full(self, x):
        self.count += self.inner.full_cost
        return self.inner.eval_full(x)
