"""Inequality checks: Bregman gap, empirical stable Poincare margins, Renyi flow vs bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from ..accountant import AccountingParams, DiscreteSteps, NoiseSpec, bound
from ..errors import DomainError
from ..poincare import PoincareConstants
from ..simulator import InitSpec, NeighborPair, QuadraticLoss, gradient_sensitivity, run_ensemble
from .dirichlet import QuadConfig, dirichlet_form_estimate
from .renyi import estimate_renyi, gaussian_renyi
from .testfunctions import TestFunction


def _bernoulli_gap(y: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``(1 + y)^c - 1 - c y`` for ``y >= -1``, accurate near ``y = 0``."""
    out = np.empty_like(y)
    small = np.abs(y) < 1e-3
    yb, cb = y[~small], c[~small]
    with np.errstate(divide="ignore"):
        out[~small] = np.expm1(cb * np.log1p(yb)) - cb * yb
    ys, cs = y[small], c[small]
    term = np.ones_like(ys)
    acc = np.zeros_like(ys)
    for k in range(1, 10):
        term = term * (cs - k + 1) / k * ys
        if k >= 2:
            acc = acc + term
    out[small] = acc
    return out


def bregman_gap(a, b, beta):
    """``d_{Phi_beta}(a, b) - d_{Phi_2}(a^(beta/2), b^(beta/2))`` with ``Phi_p(x) = x^p``.

    Written as ``2 b^beta ((1 + y)^(beta/2) - 1 - (beta/2) y)`` with
    ``y = a/b - 1`` so that the near-diagonal cancellation is done
    analytically.  Non-negative for ``beta >= 2``; identically 0 at ``beta = 2``.
    """
    a, b, beta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, beta)))
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("bregman_gap needs a, b >= 0")
    if np.any(beta < 2):
        raise DomainError("bregman_gap needs beta >= 2")
    out = np.zeros(a.shape)
    pos = (b > 0) & (beta > 2)
    if np.any(pos):
        bp, ap, betap = b[pos], a[pos], beta[pos]
        y = ap / bp - 1.0
        c = 0.5 * betap
        out[pos] = 2.0 * bp**betap * _bernoulli_gap(y, c)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PoincareCheck:
    """``margin = rhs - lhs`` with its Monte Carlo error and the quadrature budget."""

    lhs: float
    rhs: float
    margin: float
    mc_error: float
    quad_error: float

    def passed(self, k: float = 3.0) -> bool:
        return self.margin >= -k * self.mc_error - self.quad_error


def check_fractional_poincare(
    mu: Union[np.ndarray, Callable[[int], np.ndarray]],
    f: TestFunction,
    c: PoincareConstants,
    alpha: float,
    samples: int = 20000,
    quad: Optional[QuadConfig] = None,
) -> PoincareCheck:
    """Empirical margin of ``Var_mu f <= 2 c.frac E_alpha(f) + c.gauss E_2(f)``.

    ``mu`` is a sample array or a callable ``n -> samples``.  Each sample
    contributes ``2 c.frac e_alpha(x) + c.gauss |grad f(x)|^2 - (f(x) - mean)^2``
    (variance term unbiased), and the error bar is their standard error.
    """
    x = mu(samples) if callable(mu) else mu
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise DomainError("need at least two samples")
    fx = f.value(x)
    dev = (fx - fx.mean()) ** 2 * n / (n - 1)
    terms = np.zeros(n)
    quad_err = 0.0
    if c.frac > 0:
        est = dirichlet_form_estimate(f, x, alpha, quad)
        terms += 2.0 * c.frac * est.per_sample
        quad_err += 2.0 * c.frac * est.error_budget
    if c.gauss > 0:
        terms += c.gauss * np.sum(f.grad(x) ** 2, axis=-1)
    m = terms - dev
    return PoincareCheck(
        lhs=float(dev.mean()),
        rhs=float(terms.mean()),
        margin=float(m.mean()),
        mc_error=float(m.std(ddof=1) / math.sqrt(n)),
        quad_error=float(quad_err),
    )


@dataclass
class VerificationRow:
    """One line of a verification report."""

    check_name: str
    parameters: dict = field(default_factory=dict)
    lhs: float = math.nan
    rhs: float = math.nan
    margin: float = math.nan
    mc_error: float = 0.0
    passed: bool = False

    HEADER = ("check_name", "parameter_json", "lhs", "rhs", "margin", "mc_error", "pass")

    def as_csv_row(self) -> List[str]:
        return [
            self.check_name,
            json.dumps(self.parameters, sort_keys=True),
            repr(float(self.lhs)),
            repr(float(self.rhs)),
            repr(float(self.margin)),
            repr(float(self.mc_error)),
            "true" if self.passed else "false",
        ]


@dataclass(frozen=True)
class FlowRow:
    step: int
    t: float
    kappa_hat: float
    kappa_bound: float
    linear_bound: float
    regime: str
    oracle: Optional[float]
    conditional_on_R: bool = False

    @property
    def below_bound(self) -> bool:
        return self.kappa_hat <= self.kappa_bound


def gaussian_flow_oracle(pair: NeighborPair, noise: NoiseSpec, eta: float, steps: Sequence[int], beta: float, init: Optional[InitSpec] = None):
    """Exact order-``beta`` divergence between the checkpoint marginals.

    Valid for the quadratic loss, full batch, ``sigma_alpha = 0``, no
    projection, ``d = 1``: both chains are Gaussian with the same variance.
    """
    if noise.sigma_alpha != 0 or pair.s.dim != 1:
        raise DomainError("Gaussian oracle needs sigma_alpha = 0 and d = 1")
    init = init or InitSpec()
    gap_drive = eta * float(pair.s.points.mean() - pair.s_prime.points.mean())
    out = {}
    delta, var = 0.0, init.scale**2
    k = 0
    for target in sorted(steps):
        while k < target:
            delta = (1.0 - eta) * delta + gap_drive
            var = (1.0 - eta) ** 2 * var + 2.0 * eta * noise.sigma_2**2
            k += 1
        out[target] = 0.0 if var == 0 else gaussian_renyi(beta, delta, var)
    return out


def flow_check(
    pair: NeighborPair,
    noise: NoiseSpec,
    eta: float,
    checkpoints: Sequence[int],
    beta: float = 2.0,
    trajectories: int = 100_000,
    seed: int = 0,
    gamma: float = 1.0,
    sensitivity: Optional[float] = None,
    R: float = 1.0,
    batch: Optional[int] = None,
    init: Optional[InitSpec] = None,
    bins: Optional[int] = None,
    loss=None,
) -> List[FlowRow]:
    """Empirical ``kappa_hat(k eta)`` of a coupled ensemble vs the accountant bound.

    The sensitivity defaults to the certified bound of the loss on the data
    ball of ``pair.s``.  Pure-jump rows are flagged ``conditional_on_R``.
    The exact Gaussian value is attached when the dynamics are linear.
    """
    loss = loss or QuadraticLoss()
    if pair.s.dim != 1:
        raise DomainError("flow_check is one-dimensional")
    steps = sorted(set(int(k) for k in checkpoints))
    if not steps or steps[0] < 1:
        raise DomainError("checkpoints must be positive step counts")
    if sensitivity is None:
        sensitivity = gradient_sensitivity(loss, math.inf, pair.s.bound)
    ens = run_ensemble(
        pair, loss, noise, eta, steps[-1], trajectories, checkpoints=steps,
        batch=batch, seed=seed, init=init,
    )
    params = AccountingParams(n=pair.s.n, d=1, beta=beta, sensitivity=sensitivity, gamma=gamma, R=R, noise=noise)
    linear_gauss = (
        isinstance(loss, QuadraticLoss)
        and noise.sigma_alpha == 0
        and (batch is None or batch == pair.s.n)
    )
    oracle = gaussian_flow_oracle(pair, noise, eta, steps, beta, init) if linear_gauss else {}
    rows = []
    for k in steps:
        a, b = ens.clouds[k]
        ok = np.isfinite(a[:, 0]) & np.isfinite(b[:, 0])
        kappa_hat = estimate_renyi(a[ok, 0], b[ok, 0], beta, bins=bins)
        g = bound(params, DiscreteSteps(k, eta))
        rows.append(
            FlowRow(
                step=k,
                t=k * eta,
                kappa_hat=kappa_hat,
                kappa_bound=g.kappa,
                linear_bound=g.linear_kappa,
                regime=str(g.regime),
                oracle=oracle.get(k),
                conditional_on_R=noise.sigma_2 == 0,
            )
        )
    return rows
