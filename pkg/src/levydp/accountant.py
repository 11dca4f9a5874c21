"""Renyi-DP bounds for heavy-tailed noisy (S)GD and its continuous-time limit.

Two noise modes are supported:

* multifractal (``sigma_2 > 0``): drive ``K_n = beta S^2 / (2 sigma_2^2 n^2)``,
  contraction ``a = 1 / (gamma beta)``;
* pure jump (``sigma_2 = 0``): drive
  ``K_n = K_{alpha,d} (beta - 1) S^2 / (sigma_alpha^alpha n^2)``, contraction
  ``a = 1 / (2 gamma (beta - 1))``, with ``K_{alpha,d}`` from
  :func:`levydp.constants.k_alpha_d` at a user-chosen radius ``R``.

Both run through :func:`levydp.privacy_core.solve_envelope` at the effective
time ``t`` (continuous) or ``k * eta`` (discrete steps); the discrete and
continuous formulas coincide.  Mini-batch size does not enter: the batch
fraction ``b/n`` cancels against the ``1/b`` of the batch mean.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Union

from .constants import check_alpha, check_dimension, k_alpha_d
from .errors import DomainError
from .privacy_core import (
    EnvelopeParams,
    RdpGuarantee,
    Regime,
    envelope_guarantee,
    optimize_beta,
    rdp_to_eps_delta,
    rdp_to_zero_delta,
)


class NoiseMode(str, enum.Enum):
    MULTIFRACTAL = "multifractal"
    PURE_JUMP = "pure-jump"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class NoiseSpec:
    """Tail index and the stable / Gaussian noise scales."""

    alpha: float = 1.5
    sigma_alpha: float = 1.0
    sigma_2: float = 0.0

    def __post_init__(self):
        check_alpha(self.alpha)
        if not (self.sigma_alpha >= 0.0 and math.isfinite(self.sigma_alpha)):
            raise DomainError(f"sigma_alpha must be >= 0, got {self.sigma_alpha!r}")
        if not (self.sigma_2 >= 0.0 and math.isfinite(self.sigma_2)):
            raise DomainError(f"sigma_2 must be >= 0, got {self.sigma_2!r}")

    @property
    def mode(self) -> NoiseMode:
        return NoiseMode.MULTIFRACTAL if self.sigma_2 > 0.0 else NoiseMode.PURE_JUMP


@dataclass(frozen=True)
class ContinuousTime:
    t: float

    @property
    def time(self) -> float:
        return float(self.t)


@dataclass(frozen=True)
class DiscreteSteps:
    k: int
    eta: float

    @property
    def time(self) -> float:
        return self.k * float(self.eta)


Horizon = Union[ContinuousTime, DiscreteSteps]


def _check_horizon(h: Horizon) -> float:
    if isinstance(h, DiscreteSteps):
        if isinstance(h.k, bool) or int(h.k) != h.k or h.k < 0:
            raise DomainError(f"step count must be a non-negative integer, got {h.k!r}")
        if not (h.eta > 0.0 and math.isfinite(h.eta)):
            raise DomainError(f"step size must be positive, got {h.eta!r}")
    elif isinstance(h, ContinuousTime):
        if not (h.t >= 0.0 and math.isfinite(h.t)):
            raise DomainError(f"time must be non-negative, got {h.t!r}")
    else:
        raise DomainError(f"unknown horizon {h!r}")
    return h.time


@dataclass(frozen=True)
class AccountingParams:
    """Everything the bound formulas consume.

    ``f0`` is an expert override for the initial divergence (0 when both
    chains start from the same law, which is the only case with theorem
    backing).
    """

    n: int
    d: int = 1
    beta: float = 2.0
    sensitivity: float = 1.0
    gamma: float = 1.0
    R: float = 1.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    f0: float = 0.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        check_dimension(self.d)
        if not (math.isfinite(self.beta) and self.beta >= 2.0):
            raise DomainError(f"beta must be >= 2 for accountant bounds, got {self.beta!r}")
        if not (math.isfinite(self.sensitivity) and self.sensitivity >= 0.0):
            raise DomainError(f"sensitivity must be >= 0, got {self.sensitivity!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise DomainError(f"gamma must be > 0, got {self.gamma!r}")
        if not (math.isfinite(self.R) and self.R > 0.0):
            raise DomainError(f"R must be > 0, got {self.R!r}")
        if not (math.isfinite(self.f0) and self.f0 >= 0.0):
            raise DomainError(f"f0 must be >= 0, got {self.f0!r}")


def _finite_drive(compute) -> float:
    try:
        K = compute()
    except OverflowError:
        K = math.inf
    if not math.isfinite(K):
        raise DomainError("drive coefficient K_n overflows double precision")
    return K


def _ratio(compute) -> float:
    try:
        return compute()
    except (OverflowError, ZeroDivisionError):
        return math.inf


def multifractal_coefficients(p: AccountingParams) -> EnvelopeParams:
    s2 = p.noise.sigma_2
    if s2 <= 0.0:
        raise DomainError("multifractal bound requires sigma_2 > 0")
    K = _finite_drive(lambda: p.beta * (p.sensitivity / (s2 * p.n)) ** 2 / 2.0)
    a = 1.0 / (p.gamma * p.beta)
    return EnvelopeParams(K=K, a=a, f0=p.f0)


def pure_jump_coefficients(p: AccountingParams) -> EnvelopeParams:
    noise = p.noise
    if noise.sigma_2 != 0.0:
        raise DomainError("pure-jump bound requires sigma_2 = 0")
    if noise.sigma_alpha <= 0.0:
        raise DomainError("pure-jump bound requires sigma_alpha > 0")
    alpha = check_alpha(noise.alpha, require_heavy=True)
    k_ad = k_alpha_d(alpha, p.d, p.R)
    K = _finite_drive(lambda: k_ad * (p.beta - 1.0) * p.sensitivity**2 / (noise.sigma_alpha**alpha * p.n**2))
    a = 1.0 / (2.0 * p.gamma * (p.beta - 1.0))
    return EnvelopeParams(K=K, a=a, f0=p.f0)


def multifractal_uniform_value(p: AccountingParams) -> float:
    """``-log(1 - gamma S^2 beta^2 / (2 sigma_2^2 n^2))`` (finite only when ``K_n < a``)."""
    x = _ratio(lambda: p.gamma * p.beta**2 * (p.sensitivity / (p.noise.sigma_2 * p.n)) ** 2 / 2.0)
    return -math.log1p(-x) if x < 1.0 else math.inf


def pure_jump_uniform_value(p: AccountingParams) -> float:
    """``-log(1 - 2 gamma (beta-1)^2 K_{alpha,d} S^2 / (sigma^alpha n^2))``."""
    noise = p.noise
    k_ad = k_alpha_d(noise.alpha, p.d, p.R)
    x = _ratio(
        lambda: 2.0 * p.gamma * (p.beta - 1.0) ** 2 * k_ad * p.sensitivity**2
        / (noise.sigma_alpha**noise.alpha * p.n**2)
    )
    return -math.log1p(-x) if x < 1.0 else math.inf


def multifractal_bound(p: AccountingParams, h: Horizon) -> RdpGuarantee:
    """Renyi bound for Gaussian-plus-stable noise (continuous time or GD steps)."""
    return envelope_guarantee(p.beta, multifractal_coefficients(p), _check_horizon(h))


def pure_jump_bound(p: AccountingParams, h: Horizon) -> RdpGuarantee:
    """Renyi bound for pure stable noise on ``[0, T]`` with ``T`` the queried horizon.

    Conditional on the radius constant ``R`` (``p.R``); the value scales as
    ``R^-(2 - alpha)``.
    """
    return envelope_guarantee(p.beta, pure_jump_coefficients(p), _check_horizon(h))


def bound(p: AccountingParams, h: Horizon) -> RdpGuarantee:
    """Dispatch on the noise mode."""
    if p.noise.mode is NoiseMode.MULTIFRACTAL:
        return multifractal_bound(p, h)
    return pure_jump_bound(p, h)


def zero_delta_report(p: AccountingParams, h: Horizon) -> float:
    """``delta`` of the ``(0, delta)``-DP guarantee implied by :func:`bound`."""
    return rdp_to_zero_delta(bound(p, h))


SWEEP_AXES = ("alpha", "d", "n", "beta", "sigma")


@dataclass
class SweepRow:
    axis: str
    value: float
    beta: Optional[float] = None
    K_n: Optional[float] = None
    a: Optional[float] = None
    kappa: Optional[float] = None
    regime: Optional[str] = None
    epsilon: Optional[float] = None
    zero_delta: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _with_axis(base: AccountingParams, axis: str, value) -> AccountingParams:
    if axis == "alpha":
        return replace(base, noise=replace(base.noise, alpha=float(value)))
    if axis == "d":
        return replace(base, d=_as_int(value, "d"))
    if axis == "n":
        return replace(base, n=_as_int(value, "n"))
    if axis == "beta":
        return replace(base, beta=float(value))
    if axis == "sigma":
        if base.noise.mode is NoiseMode.MULTIFRACTAL:
            return replace(base, noise=replace(base.noise, sigma_2=float(value)))
        return replace(base, noise=replace(base.noise, sigma_alpha=float(value)))
    raise DomainError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def _as_int(value, name: str) -> int:
    f = float(value)
    if f != int(f):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    return int(f)


def sweep(
    base: AccountingParams,
    h: Horizon,
    axis: str,
    values: Iterable,
    delta: float = 1e-5,
    beta_grid: Optional[Sequence[float]] = None,
) -> List[SweepRow]:
    """One row per value of ``axis``; invalid configurations are kept with ``error`` set.

    When ``beta_grid`` is given and ``axis != "beta"``, each row reports the
    order minimising epsilon at ``delta``.
    """
    if axis not in SWEEP_AXES:
        raise DomainError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    rows = []
    for value in values:
        row = SweepRow(axis=axis, value=float(value))
        try:
            p = _with_axis(base, axis, value)
            if beta_grid and axis != "beta":
                best_beta, _ = optimize_beta(
                    lambda b: bound(replace(p, beta=b), h), beta_grid, delta
                )
                p = replace(p, beta=best_beta)
            g = bound(p, h)
            row.beta = g.beta
            row.K_n = g.K
            row.a = g.a
            row.kappa = g.kappa
            row.regime = str(g.regime)
            row.epsilon = rdp_to_eps_delta(g, delta)
            row.zero_delta = rdp_to_zero_delta(g)
        except DomainError as exc:
            row.error = str(exc)
        rows.append(row)
    return rows
