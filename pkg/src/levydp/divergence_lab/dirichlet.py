"""Fractional Dirichlet forms by Monte Carlo over ``mu`` and radial quadrature.

For ``alpha < 2``

    E_alpha(f) = (C_{alpha,d} / 2) sigma_{d-1} E_{x ~ mu, theta ~ Unif(S^{d-1})}
                 [ int_0^inf (f(x + r theta) - f(x))^2 r^(-1-alpha) dr ],

and ``E_2(f) = E_mu |grad f|^2``.  The radial integral is split into

* ``[0, h]``: replaced by ``<grad f, theta>^2 h^(2-alpha) / (2-alpha)``, with
  the Taylor remainder bounded through the family's Hessian bound;
* ``[h, Z]``: composite Gauss-Legendre in ``log r``;
* ``[Z, inf)``: dropped, with the bound ``4 |f|_inf^2 Z^-alpha / alpha``.

``d = 1`` averages the two directions exactly; ``d > 1`` draws antithetic
pairs of random directions per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..constants import c_alpha_d, check_alpha, sphere_area
from ..errors import BudgetExceeded, DomainError
from ..stable_noise import make_rng
from .testfunctions import TestFunction

MAX_NONLOCAL_DIM = 3


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature budget.

    ``near_tol`` sets the Taylor region ``h = near_tol * min(length, G/H)``;
    ``tail_tol`` is the absolute error allowed for the dropped tail;
    ``zmax_limit`` caps the truncation radius (beyond it the budget is
    exceeded).  ``panel_width`` is measured in ``log r``.
    """

    near_tol: float = 1e-4
    tail_tol: float = 1e-5
    zmax_limit: float = 1e8
    panel_width: float = 0.5
    nodes: int = 8
    directions: int = 8
    chunk: int = 2048
    seed: int = 0
    s_panels_per_length: float = 1.0
    s_max_panels: int = 128

    def __post_init__(self):
        if not (self.near_tol > 0 and self.tail_tol > 0 and self.zmax_limit > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.nodes < 1 or self.directions < 2 or self.directions % 2:
            raise DomainError("need nodes >= 1 and an even number of directions >= 2")


@dataclass(frozen=True)
class DirichletEstimate:
    value: float
    mc_error: float
    near_error: float
    tail_error: float
    per_sample: np.ndarray

    @property
    def error_budget(self) -> float:
        return self.near_error + self.tail_error


def _samples(mu_samples) -> np.ndarray:
    x = np.asarray(mu_samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise DomainError("mu_samples must be a non-empty (N, d) array")
    if not np.all(np.isfinite(x)):
        raise DomainError("mu_samples contains non-finite values")
    return x


def _weights(weights, n: int) -> Optional[np.ndarray]:
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape[0] != n or np.any(w < 0) or not w.sum() > 0:
        raise DomainError("weights must be non-negative, one per sample, not all zero")
    return w / w.sum()


def _average(values: np.ndarray, w: Optional[np.ndarray]):
    """Mean and its Monte Carlo standard error (0 for quadrature weights)."""
    if w is None:
        n = values.shape[0]
        err = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return float(values.mean()), err
    return float(values @ w), 0.0


def _directions(d: int, n: int, quad: QuadConfig) -> np.ndarray:
    """Shape ``(n, m, d)`` unit vectors; exact pair for d = 1, antithetic otherwise."""
    if d == 1:
        return np.broadcast_to(np.array([[1.0], [-1.0]]), (n, 2, 1))
    rng = make_rng(quad.seed, d, n)
    half = rng.standard_normal((n, quad.directions // 2, d))
    half /= np.linalg.norm(half, axis=-1, keepdims=True)
    return np.concatenate([half, -half], axis=1)


def _gl_log_grid(lo: float, hi: float, quad: QuadConfig):
    """Nodes ``r`` and weights for ``int_lo^hi g(r) dr / r`` (Gauss-Legendre in ``log r``)."""
    a, b = math.log(lo), math.log(hi)
    panels = max(1, math.ceil((b - a) / quad.panel_width))
    t, wt = np.polynomial.legendre.leggauss(quad.nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    w = (half[:, None] * wt[None, :]).ravel()
    return np.exp(u), w


def _check_nonlocal(f: TestFunction, x: np.ndarray, alpha: float) -> int:
    d = x.shape[1]
    f.check_dim(d)
    if alpha < 2.0 and d > MAX_NONLOCAL_DIM:
        raise DomainError(f"nonlocal quadrature supports d <= {MAX_NONLOCAL_DIM}, got d={d}")
    return d


def _taylor_radius(f: TestFunction, quad: QuadConfig) -> float:
    G, H = f.grad_bound, f.hessian_bound
    scale = f.length_scale
    if H > 0 and math.isfinite(H) and G > 0:
        scale = min(scale, G / H)
    return quad.near_tol * scale


def _truncation_radius(f: TestFunction, alpha: float, prefactor: float, quad: QuadConfig, h: float) -> float:
    sup = f.sup_norm
    if not math.isfinite(sup):
        raise BudgetExceeded("test function has no finite sup-norm; tail cannot be bounded")
    if sup == 0:
        return max(10.0 * h, f.length_scale)
    z = (prefactor * 4.0 * sup**2 / (alpha * quad.tail_tol)) ** (1.0 / alpha)
    z = max(z, 10.0 * f.length_scale, 10.0 * h)
    if z > quad.zmax_limit:
        raise BudgetExceeded(
            f"tail truncation needs Z = {z:.3g} > zmax_limit = {quad.zmax_limit:.3g} for tail_tol = {quad.tail_tol:g}"
        )
    return z


def radial_energies(f: TestFunction, x: np.ndarray, alpha: float, quad: QuadConfig):
    """Per-sample direction-averaged ``int_0^inf (f(x + r theta) - f(x))^2 r^(-1-alpha) dr``.

    Returns ``(values, near_error, tail_bound)`` where the error terms bound
    the absolute error of each entry.
    """
    n, d = x.shape
    thetas = _directions(d, n, quad)
    if hasattr(f, "radial_energy"):
        vals = f.radial_energy(x[:, None, :], thetas, alpha).mean(axis=1)
        return vals, 0.0, 0.0
    h = _taylor_radius(f, quad)
    pref = 0.5 * c_alpha_d(alpha, d) * sphere_area(d)
    z = _truncation_radius(f, alpha, pref, quad, h)
    r, w = _gl_log_grid(h, z, quad)
    w = w * r ** (-alpha)
    out = np.empty(n)
    for start in range(0, n, quad.chunk):
        xs = x[start : start + quad.chunk]                    # (c, d)
        th = thetas[start : start + quad.chunk]                # (c, m, d)
        f0 = f.value(xs)[:, None, None]                       # (c, 1, 1)
        pts = xs[:, None, None, :] + r[None, None, :, None] * th[:, :, None, :]
        incr = (f.value(pts) - f0) ** 2                        # (c, m, R)
        middle = incr @ w                                      # (c, m)
        slope = np.einsum("cd,cmd->cm", f.grad(xs), th)
        near = slope**2 * h ** (2.0 - alpha) / (2.0 - alpha)
        out[start : start + quad.chunk] = (near + middle).mean(axis=1)
    G, H = f.grad_bound, f.hessian_bound
    near_err = G * H * h ** (3.0 - alpha) / (3.0 - alpha) + H**2 * h ** (4.0 - alpha) / (4.0 * (4.0 - alpha))
    tail = 4.0 * f.sup_norm**2 * z ** (-alpha) / alpha
    return out, near_err, tail


def dirichlet_form_estimate(
    f: TestFunction,
    mu_samples,
    alpha: float,
    quad: Optional[QuadConfig] = None,
    weights=None,
) -> DirichletEstimate:
    """:func:`dirichlet_form` with per-sample values and error terms."""
    quad = quad or QuadConfig()
    alpha = check_alpha(alpha, allow_two=True)
    x = _samples(mu_samples)
    w = _weights(weights, x.shape[0])
    d = _check_nonlocal(f, x, alpha)
    if alpha == 2.0:
        per = np.sum(f.grad(x) ** 2, axis=-1)
        value, err = _average(per, w)
        return DirichletEstimate(value, err, 0.0, 0.0, per)
    vals, near_err, tail = radial_energies(f, x, alpha, quad)
    pref = 0.5 * c_alpha_d(alpha, d) * sphere_area(d)
    per = pref * vals
    value, err = _average(per, w)
    return DirichletEstimate(value, err, pref * near_err, pref * tail, per)


def dirichlet_form(f: TestFunction, mu_samples, alpha: float, quad: Optional[QuadConfig] = None, weights=None) -> float:
    """Monte-Carlo estimate of ``E_{alpha,mu}(f, f)`` (``alpha = 2``: ``E_mu |grad f|^2``)."""
    return dirichlet_form_estimate(f, mu_samples, alpha, quad, weights).value


def _avg_slope_sq(u: TestFunction, x: np.ndarray, thetas: np.ndarray, r: float, quad: QuadConfig) -> np.ndarray:
    """``((1/r) int_0^r <theta, grad u(x + s theta)> ds)^2`` by Gauss-Legendre in ``s``."""
    panels = int(min(quad.s_max_panels, max(1, math.ceil(r / u.length_scale * quad.s_panels_per_length))))
    t, wt = np.polynomial.legendre.leggauss(quad.nodes)
    edges = np.linspace(0.0, r, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * t).ravel()
    ws = (half[:, None] * wt).ravel() / r
    pts = x[:, None, None, :] + s[None, None, :, None] * thetas[:, :, None, :]
    proj = np.einsum("cmsd,cmd->cms", u.grad(pts), thetas)
    return (proj @ ws) ** 2


def spherical_J(r: float, u: TestFunction, mu_samples, quad: Optional[QuadConfig] = None, weights=None) -> float:
    """``J(r) = d E_{x,theta}[((1/r) int_0^r <theta, grad u(x + s theta)> ds)^2]``; ``J(0) = E |grad u|^2``."""
    quad = quad or QuadConfig()
    r = float(r)
    if not (r >= 0 and math.isfinite(r)):
        raise DomainError(f"r must be a finite non-negative number, got {r!r}")
    x = _samples(mu_samples)
    w = _weights(weights, x.shape[0])
    d = _check_nonlocal(u, x, 1.0)
    if r == 0.0:
        return _average(np.sum(u.grad(x) ** 2, axis=-1), w)[0]
    thetas = _directions(d, x.shape[0], quad)
    per = np.empty(x.shape[0])
    for start in range(0, x.shape[0], quad.chunk):
        sl = slice(start, start + quad.chunk)
        per[sl] = d * _avg_slope_sq(u, x[sl], thetas[sl], r, quad).mean(axis=1)
    return _average(per, w)[0]


def dirichlet_form_spherical(
    u: TestFunction,
    mu_samples,
    alpha: float,
    quad: Optional[QuadConfig] = None,
    weights=None,
) -> float:
    """``(C sigma_{d-1} / (2d)) int_0^inf J(r) r^(1-alpha) dr`` by quadrature over ``r``.

    Independent of :func:`dirichlet_form`: it only uses gradients along
    segments.  ``[0, h]`` uses ``J(0)``; the tail beyond ``Z`` is dropped
    (``J(r) <= 4 d |u|_inf^2 / r^2``).
    """
    quad = quad or QuadConfig()
    alpha = check_alpha(alpha)
    x = _samples(mu_samples)
    d = _check_nonlocal(u, x, alpha)
    pref = c_alpha_d(alpha, d) * sphere_area(d) / (2.0 * d)
    h = _taylor_radius(u, quad)
    z = _truncation_radius(u, alpha, pref * d, quad, h)
    rs, wr = _gl_log_grid(h, z, quad)
    J = np.array([spherical_J(r, u, x, quad, weights) for r in rs])
    total = spherical_J(0.0, u, x, quad, weights) * h ** (2.0 - alpha) / (2.0 - alpha)
    total += float(np.sum(J * rs ** (2.0 - alpha) * wr))
    return pref * total
