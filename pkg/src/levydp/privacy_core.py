"""Generic Renyi-DP machinery.

``solve_envelope`` bounds any non-negative ``f`` with
``f'(t) <= K - a (1 - exp(-f(t)))``; every accountant bound in
:mod:`levydp.accountant` is an instance of it.  The remaining helpers convert
an RDP guarantee into (epsilon, delta)-DP statements.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError

__all__ = [
    "Regime",
    "EnvelopeParams",
    "RdpGuarantee",
    "stationary_level",
    "envelope_closed_form",
    "solve_envelope",
    "envelope_regime",
    "rdp_to_eps_delta",
    "rdp_to_zero_delta",
    "optimize_beta",
]


class Regime(str, enum.Enum):
    LINEAR = "Linear"
    TIME_UNIFORM = "TimeUniform"
    DECAYING = "Decaying"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class EnvelopeParams:
    """Drive ``K >= 0``, contraction ``a > 0`` and initial value ``f0 >= 0``."""

    K: float
    a: float
    f0: float = 0.0

    def __post_init__(self):
        K, a, f0 = float(self.K), float(self.a), float(self.f0)
        if not (math.isfinite(a) and a > 0.0):
            raise DomainError(f"contraction a must be positive, got {self.a!r}")
        if not (math.isfinite(K) and K >= 0.0):
            raise DomainError(f"drive K must be non-negative, got {self.K!r}")
        if not (math.isfinite(f0) and f0 >= 0.0):
            raise DomainError(f"initial value f0 must be non-negative, got {self.f0!r}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "f0", f0)

    @property
    def contracting(self) -> bool:
        """True iff ``K < a`` (strictly), which unlocks the time-uniform cases."""
        return self.K < self.a


@dataclass(frozen=True)
class RdpGuarantee:
    """An order-``beta`` Renyi bound ``kappa`` and how it was obtained.

    ``linear_kappa`` and ``uniform_kappa`` keep the candidate bounds; the
    latter is ``None`` unless ``K < a``.  ``K`` and ``a`` are the envelope
    coefficients when the guarantee came from the envelope solver.
    """

    beta: float
    kappa: float
    regime: Regime = Regime.LINEAR
    K: Optional[float] = None
    a: Optional[float] = None
    linear_kappa: Optional[float] = None
    uniform_kappa: Optional[float] = None
    time: Optional[float] = None


def stationary_level(K: float, a: float) -> float:
    """``log(a / (a - K))`` for ``0 <= K < a``."""
    if not K < a:
        raise DomainError("stationary level requires K < a")
    return -math.log1p(-K / a)


def envelope_closed_form(K, a, f0, t):
    """Exact solution of ``f' = K - a(1 - e^-f)``, ``f(0) = f0``, for ``K < a``.

    ``log(a/(a-K)) + log(1 + e^{-(a-K)t} (e^{f0}(a-K)/a - 1))``, evaluated in
    log space so large ``f0`` does not overflow.  Vectorised over all inputs.
    """
    K, a, f0, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (K, a, f0, t)))
    if np.any(K >= a):
        raise DomainError("closed form requires K < a")
    c = a - K
    level = -np.log1p(-K / a)
    g0 = f0 - level
    decay = -c * t
    with np.errstate(divide="ignore"):
        # log(1 + e^{decay}(e^{g0} - 1)) = log((1 - e^{decay}) + e^{g0 + decay})
        head = np.log(-np.expm1(decay))
    # clamp rounding below the true lower bound 0
    out = np.maximum(level + np.logaddexp(head, g0 + decay), 0.0)
    return out if out.ndim else float(out)


def envelope_regime(p: EnvelopeParams) -> Regime:
    """The time-uniform case that applies for large ``t`` (``LINEAR`` if none)."""
    if not p.contracting:
        return Regime.LINEAR
    return Regime.TIME_UNIFORM if p.f0 <= stationary_level(p.K, p.a) else Regime.DECAYING


def solve_envelope(p: EnvelopeParams, t: float) -> float:
    """Tightest applicable upper bound on ``f(t)``.

    Always ``f0 + K t``; when ``K < a`` also ``log(a/(a-K))`` (if ``f0`` is
    below that level) or the decaying closed form (if above).  The minimum of
    all applicable cases is returned.  ``t = 0`` returns ``f0`` by continuity.
    """
    return _envelope(p, t)[0]


def _envelope(p: EnvelopeParams, t: float) -> Tuple[float, Regime, float, Optional[float]]:
    t = float(t)
    if not (t >= 0.0):
        raise DomainError(f"time must be non-negative, got {t!r}")
    linear = p.f0 + p.K * t
    if not p.contracting:
        return linear, Regime.LINEAR, linear, None
    level = stationary_level(p.K, p.a)
    if p.f0 <= level:
        uniform, regime = level, Regime.TIME_UNIFORM
    else:
        uniform, regime = envelope_closed_form(p.K, p.a, p.f0, t), Regime.DECAYING
    if uniform < linear:
        return uniform, regime, linear, uniform
    return linear, Regime.LINEAR, linear, uniform


def envelope_guarantee(beta: float, p: EnvelopeParams, t: float) -> RdpGuarantee:
    """Wrap :func:`solve_envelope` into an :class:`RdpGuarantee`."""
    kappa, regime, linear, uniform = _envelope(p, t)
    return RdpGuarantee(
        beta=float(beta),
        kappa=kappa,
        regime=regime,
        K=p.K,
        a=p.a,
        linear_kappa=linear,
        uniform_kappa=uniform,
        time=float(t),
    )


def _check_order(beta: float) -> float:
    beta = float(beta)
    if not (math.isfinite(beta) and beta > 1.0):
        raise DomainError(f"Renyi order must exceed 1, got {beta!r}")
    return beta


def rdp_to_eps_delta(g: RdpGuarantee, delta: float) -> float:
    """``epsilon = kappa + log(1/delta) / (beta - 1)``."""
    beta = _check_order(g.beta)
    delta = float(delta)
    if not (0.0 < delta <= 1.0):
        raise DomainError(f"delta must lie in (0, 1], got {delta!r}")
    return g.kappa - math.log(delta) / (beta - 1.0)


def rdp_to_zero_delta(g: RdpGuarantee) -> float:
    """``delta`` of the implied ``(0, delta)``-DP guarantee, ``min(1, sqrt(kappa/2))``."""
    _check_order(g.beta)
    if not g.kappa >= 0.0:
        raise DomainError(f"kappa must be non-negative, got {g.kappa!r}")
    return min(1.0, math.sqrt(0.5 * g.kappa))


def optimize_beta(
    bound_at_beta: Callable[[float], RdpGuarantee | float],
    beta_grid: Iterable[float],
    delta: float,
) -> Tuple[float, float]:
    """Minimise the converted epsilon over a grid of Renyi orders.

    ``bound_at_beta`` may return an :class:`RdpGuarantee` or a bare kappa.
    Ties go to the smaller order.  Returns ``(best_beta, best_epsilon)``.
    """
    grid: Sequence[float] = sorted(float(b) for b in beta_grid)
    if not grid:
        raise DomainError("beta grid is empty")
    best: Optional[Tuple[float, float]] = None
    for beta in grid:
        if beta < 2.0:
            raise DomainError(f"accountant orders must be >= 2, got {beta}")
        g = bound_at_beta(beta)
        if not isinstance(g, RdpGuarantee):
            g = RdpGuarantee(beta=beta, kappa=float(g))
        eps = rdp_to_eps_delta(g, delta)
        if best is None or eps < best[1]:
            best = (beta, eps)
    return best
