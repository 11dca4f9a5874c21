"""Gamma-function constants of the rotationally invariant alpha-stable law.

All constants are evaluated in log space (``math.lgamma``, with Gamma ratios
through ``scipy.special.poch``) and exponentiated at the end, so large
dimensions neither overflow nor lose digits to cancellation.
"""

from __future__ import annotations

import math

from scipy.special import poch

from .errors import DomainError

# alpha this close to 2 is rejected: Gamma(1 - alpha/2) has a pole at alpha = 2.
ALPHA_UPPER_GAP = 1e-9
_LOG_MAX = math.log(1.7976931348623157e308)


def check_alpha(alpha: float, *, require_heavy: bool = False, allow_two: bool = False) -> float:
    """Validate a tail index and return it as a float.

    ``require_heavy`` enforces ``alpha > 1`` as needed by the accountant;
    ``allow_two`` admits exactly ``alpha = 2`` (the Gaussian endpoint).
    """
    alpha = float(alpha)
    if allow_two and alpha == 2.0:
        return alpha
    if not math.isfinite(alpha) or alpha <= 0.0 or alpha >= 2.0 - ALPHA_UPPER_GAP:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha!r}")
    if require_heavy and alpha <= 1.0:
        raise DomainError(f"alpha must lie in (1, 2) for accounting, got {alpha!r}")
    return alpha


def check_dimension(d: int) -> int:
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def _lgamma(x: float) -> float:
    try:
        return math.lgamma(x)
    except OverflowError:
        raise DomainError(f"log-gamma overflows double precision at {x:.3g}") from None


def _log_gamma_ratio(x: float, a: float) -> float:
    """``log Gamma(x) - log Gamma(x + a)``, without cancellation for large ``x``."""
    return -math.log(poch(x, a))


def log_c_alpha_d(alpha: float, d: int) -> float:
    alpha = check_alpha(alpha)
    d = check_dimension(d)
    return (
        math.log(alpha)
        + (alpha - 1.0) * math.log(2.0)
        - 0.5 * d * math.log(math.pi)
        + _lgamma(0.5 * (alpha + d))
        - math.lgamma(1.0 - 0.5 * alpha)
    )


def c_alpha_d(alpha: float, d: int) -> float:
    """Normalising constant of the stable Levy measure ``C / |z|^(d+alpha)``.

    Equals ``alpha 2^(alpha-1) pi^(-d/2) Gamma((alpha+d)/2) / Gamma(1-alpha/2)``.

    >>> round(c_alpha_d(1.0, 1) * math.pi, 12)
    1.0
    """
    log_c = log_c_alpha_d(alpha, d)
    if log_c > _LOG_MAX:
        raise DomainError(f"C_(alpha,d) overflows double precision at d={d}; use log_c_alpha_d")
    return math.exp(log_c)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^(d-1) in R^d (2 for d = 1)."""
    d = check_dimension(d)
    return math.exp(math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d))


def k_alpha_d(alpha: float, d: int, R: float = 1.0) -> float:
    """Dimension constant of the pure-jump Renyi bound.

    ``4 (2-alpha) d Gamma(d/2) Gamma(1-alpha/2) / (alpha 2^alpha R^(2-alpha) Gamma((d+alpha)/2))``

    ``R`` is the (non-constructive) radius constant; the value scales as
    ``R^-(2-alpha)``.
    """
    alpha = check_alpha(alpha)
    d = check_dimension(d)
    R = float(R)
    if not math.isfinite(R) or R <= 0.0:
        raise DomainError(f"R must be a positive finite real, got {R!r}")
    log_k = (
        math.log(4.0)
        + math.log(2.0 - alpha)
        + math.log(d)
        + _log_gamma_ratio(0.5 * d, 0.5 * alpha)
        + math.lgamma(1.0 - 0.5 * alpha)
        - math.log(alpha)
        - alpha * math.log(2.0)
        - (2.0 - alpha) * math.log(R)
    )
    return math.exp(log_k)


def c_alpha_d_limit_ratio(alpha: float, d: int) -> float:
    """``C_{alpha,d} / ((2-alpha) pi^(-d/2) d Gamma(d/2))``; tends to 1 as alpha -> 2."""
    alpha = check_alpha(alpha)
    log_ref = (
        math.log(2.0 - alpha) - 0.5 * d * math.log(math.pi) + math.log(d) + math.lgamma(0.5 * d)
    )
    return math.exp(log_c_alpha_d(alpha, d) - log_ref)
