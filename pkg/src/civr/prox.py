"""Regularizers, their proximal operators, and proximal gradient mappings."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .model import CompositeProblem, Vector, as_point, composite_gradient


class Regularizer(ABC):
    """Convex, lower-semicontinuous regularizer with a cheap prox.

    ``prox(v, eta)`` returns ``argmin_y { r(y) + ||y - v||^2 / (2 eta) }``.
    """

    @abstractmethod
    def value(self, x: Vector) -> float:
        ...

    @abstractmethod
    def prox(self, v: Vector, eta: float) -> Vector:
        ...

    @property
    def is_zero(self) -> bool:
        return False


class ZeroReg(Regularizer):
    """r = 0; the prox is the identity."""

    def value(self, x: Vector) -> float:
        return 0.0

    def prox(self, v: Vector, eta: float) -> Vector:
        return np.asarray(v, dtype=np.float64).copy()

    @property
    def is_zero(self) -> bool:
        return True

    def __repr__(self) -> str:
        return "ZeroReg()"


class L1Reg(Regularizer):
    """r(x) = weight * ||x||_1; the prox is componentwise soft-thresholding.

    Entries sitting exactly at the threshold map to 0, the sparser of the
    two valid limits.
    """

    def __init__(self, weight: float):
        if weight < 0:
            raise ValueError("weight must be nonnegative")
        self.weight = float(weight)

    def value(self, x: Vector) -> float:
        return self.weight * float(np.abs(x).sum())

    def prox(self, v: Vector, eta: float) -> Vector:
        v = np.asarray(v, dtype=np.float64)
        t = eta * self.weight
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)

    def __repr__(self) -> str:
        return f"L1Reg({self.weight})"


def project_l1_ball(v: Vector, radius: float) -> Vector:
    """Euclidean projection onto ``{x : ||x||_1 <= radius}``.

    Exact O(d log d) sort-based algorithm; vectors already inside the ball
    are returned unchanged (as a copy).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = np.asarray(v, dtype=np.float64)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    cumulative = np.cumsum(u) - radius
    idx = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u > cumulative / idx)[0][-1]) + 1
    theta = cumulative[rho - 1] / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


class L1BallReg(Regularizer):
    """Indicator of the l1 ball of a given radius; the prox is projection."""

    def __init__(self, radius: float, feasibility_tol: float = 1e-12):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.feasibility_tol = float(feasibility_tol)

    def value(self, x: Vector) -> float:
        if float(np.abs(x).sum()) <= self.radius + self.feasibility_tol:
            return 0.0
        return math.inf

    def prox(self, v: Vector, eta: float) -> Vector:
        # Projection is independent of eta for an indicator function.
        return project_l1_ball(v, self.radius)

    def __repr__(self) -> str:
        return f"L1BallReg({self.radius})"


def prox(reg: Regularizer, v: Vector, eta: float) -> Vector:
    """Proximal operator of ``reg`` with parameter ``eta > 0`` at ``v``."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    return reg.prox(as_point(v), eta)


def gradient_mapping(
    problem: CompositeProblem, reg: Regularizer, x: Vector, eta: float
) -> tuple[Vector, float]:
    """Exact proximal gradient mapping and its squared norm.

    ``map = (x - prox(x - eta * F'(x), eta)) / eta``; its squared norm is
    the stationarity measure used throughout.  With r = 0 the mapping
    reduces to the composite gradient itself.  Requires exact gradients,
    so the oracle must be exact-capable.
    """
    x = as_point(x, problem.oracle.dim_d)
    grad = composite_gradient(problem.oracle, problem.outer, x)
    return gradient_mapping_from(grad, reg, x, eta)


def gradient_mapping_from(grad: Vector, reg: Regularizer, x: Vector, eta: float) -> tuple[Vector, float]:
    """Gradient mapping computed from an already-evaluated gradient at ``x``."""
    step = prox(reg, x - eta * grad, eta)
    mapping = (x - step) / eta
    return mapping, float(mapping @ mapping)


def approx_gradient_mapping(x_i: Vector, x_next: Vector, eta: float) -> Vector:
    """Displacement-based mapping ``(x_i - x_next) / eta``.

    This is the mapping actually realised by a stochastic step: when
    ``x_next`` was produced with the exact gradient it coincides with
    :func:`gradient_mapping`.
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    x_i = as_point(x_i)
    x_next = as_point(x_next, x_i.shape[0])
    return (x_i - x_next) / eta
