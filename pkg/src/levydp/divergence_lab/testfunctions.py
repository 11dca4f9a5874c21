"""Analytic test functions with certified derivative bounds.

Every family evaluates on arrays of shape ``(..., d)`` and exposes
``sup_norm``, ``grad_bound`` and ``hessian_bound`` (operator norm), which the
quadrature in :mod:`levydp.divergence_lab.dirichlet` uses to size its
near-origin Taylor region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DomainError

_TANH_H = 4.0 / (3.0 * math.sqrt(3.0))  # max |2 t (1 - t^2)| over t in [-1, 1]


class TestFunction:
    """Interface: ``value``, ``grad``, bounds and a natural ``length_scale``."""

    __test__ = False  # not a pytest class
    dim: Optional[int] = None
    sup_norm: float = math.inf
    grad_bound: float = math.inf
    hessian_bound: float = math.inf
    length_scale: float = 1.0

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def check_dim(self, d: int) -> None:
        if self.dim is not None and self.dim != d:
            raise DomainError(f"{type(self).__name__} is defined on R^{self.dim}, samples are in R^{d}")


def _vec(v, name) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be a finite vector")
    return arr


@dataclass(frozen=True)
class GaussianBump(TestFunction):
    """``exp(-|x - c|^2 / (2 s^2))``."""

    center: np.ndarray = field(default_factory=lambda: np.zeros(1))
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "center"))
        if not self.scale > 0:
            raise DomainError("scale must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    @property
    def sup_norm(self):
        return 1.0

    @property
    def grad_bound(self):
        return math.exp(-0.5) / self.scale

    @property
    def hessian_bound(self):
        return 1.0 / self.scale**2

    @property
    def length_scale(self):
        return self.scale

    def value(self, x):
        u = np.asarray(x, dtype=float) - self.center
        return np.exp(-0.5 * np.sum(u * u, axis=-1) / self.scale**2)

    def grad(self, x):
        u = np.asarray(x, dtype=float) - self.center
        return -u / self.scale**2 * self.value(x)[..., None]


@dataclass(frozen=True)
class TanhRidge(TestFunction):
    """``tanh(<w, x> + b)``."""

    w: np.ndarray = field(default_factory=lambda: np.ones(1))
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "w", _vec(self.w, "w"))

    @property
    def dim(self):
        return self.w.shape[0]

    @property
    def sup_norm(self):
        return 1.0

    @property
    def grad_bound(self):
        return float(np.linalg.norm(self.w))

    @property
    def hessian_bound(self):
        return _TANH_H * float(self.w @ self.w)

    @property
    def length_scale(self):
        nw = float(np.linalg.norm(self.w))
        return 1.0 / nw if nw > 0 else 1.0

    def value(self, x):
        return np.tanh(np.asarray(x, dtype=float) @ self.w + self.b)

    def grad(self, x):
        t = self.value(x)
        return (1.0 - t * t)[..., None] * self.w


@dataclass(frozen=True)
class PolyBump(TestFunction):
    """``(x_1 - c_1) exp(-|x - c|^2 / (2 s^2))``."""

    center: np.ndarray = field(default_factory=lambda: np.zeros(1))
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "center"))
        if not self.scale > 0:
            raise DomainError("scale must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    @property
    def sup_norm(self):
        return self.scale * math.exp(-0.5)

    @property
    def grad_bound(self):
        return 1.0 + 2.0 / math.e

    @property
    def hessian_bound(self):
        return 3.0 / self.scale

    @property
    def length_scale(self):
        return self.scale

    def value(self, x):
        u = np.asarray(x, dtype=float) - self.center
        return u[..., 0] * np.exp(-0.5 * np.sum(u * u, axis=-1) / self.scale**2)

    def grad(self, x):
        u = np.asarray(x, dtype=float) - self.center
        g = np.exp(-0.5 * np.sum(u * u, axis=-1) / self.scale**2)[..., None]
        e1 = np.zeros(u.shape[-1])
        e1[0] = 1.0
        return g * (e1 - u[..., :1] * u / self.scale**2)


@dataclass(frozen=True)
class Constant(TestFunction):
    c: float = 0.0
    dim_: Optional[int] = None

    @property
    def dim(self):
        return self.dim_

    @property
    def sup_norm(self):
        return abs(self.c)

    @property
    def grad_bound(self):
        return 0.0

    @property
    def hessian_bound(self):
        return 0.0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], float(self.c))

    def grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def radial_energy(self, x, theta, alpha):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1])


@dataclass(frozen=True)
class Step(TestFunction):
    """Indicator ``1{<e, x> >= t}`` (not smooth; exact radial integrals instead of quadrature)."""

    direction: np.ndarray = field(default_factory=lambda: np.ones(1))
    threshold: float = 0.0

    def __post_init__(self):
        e = _vec(self.direction, "direction")
        ne = np.linalg.norm(e)
        if ne == 0:
            raise DomainError("direction must be non-zero")
        object.__setattr__(self, "direction", e / ne)

    @property
    def dim(self):
        return self.direction.shape[0]

    @property
    def sup_norm(self):
        return 1.0

    def value(self, x):
        return (np.asarray(x, dtype=float) @ self.direction >= self.threshold).astype(float)

    def grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def radial_energy(self, x, theta, alpha):
        """``int_0^inf (f(x + r theta) - f(x))^2 r^(-1-alpha) dr`` in closed form."""
        x = np.asarray(x, dtype=float)
        s = x @ self.direction - self.threshold      # signed distance
        v = np.asarray(theta, dtype=float) @ self.direction
        inside = s >= 0
        # the ray crosses the hyperplane iff it heads towards it
        crosses = np.where(inside, v < 0, v > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            r_cross = np.abs(s) / np.abs(v)
            out = np.where(crosses, r_cross ** (-alpha) / alpha, 0.0)
        return out
