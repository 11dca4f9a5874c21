"""Algebra of alpha-stable Poincare constants ``(frac, gauss)``.

A measure ``mu`` satisfies the inequality with constants ``(a, b)`` when

    Var_mu(f) <= a C_{alpha,d} iint (f(x) - f(x+z))^2 |z|^-(d+alpha) dmu(x) dz
                 + b int |grad f|^2 dmu.

The helpers below propagate such constants through convolution, bi-Lipschitz
pushforward and bounded density perturbation, and :func:`track_sgd` chains
the first two through noisy gradient steps on a strongly convex, smooth loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .constants import check_alpha, check_dimension
from .errors import DomainError, PoincareConditionError


@dataclass(frozen=True)
class PoincareConstants:
    frac: float = 0.0
    gauss: float = 0.0

    def __post_init__(self):
        if not (self.frac >= 0.0 and self.gauss >= 0.0):
            raise DomainError(f"Poincare constants must be non-negative, got {self}")

    @property
    def is_trivial(self) -> bool:
        return self.frac == 0.0 and self.gauss == 0.0


def convolve(c1: PoincareConstants, c2: PoincareConstants) -> PoincareConstants:
    """Constants of ``mu * mu'``: componentwise sum."""
    return PoincareConstants(c1.frac + c2.frac, c1.gauss + c2.gauss)


def bilipschitz_factor(L1: float, L2: float, alpha: float, d: int) -> float:
    """``L2^(alpha+d) / L1^d``, the multiplier on the fractional constant."""
    return L2 ** (alpha + d) / L1**d


def pushforward_bilipschitz(
    c: PoincareConstants, L1: float, L2: float, alpha: float, d: int
) -> PoincareConstants:
    """Constants of ``T#mu`` for ``L1 |x-y| <= |T(x)-T(y)| <= L2 |x-y|``."""
    alpha = check_alpha(alpha)
    d = check_dimension(d)
    if not (L1 > 0.0):
        raise DomainError(f"L1 must be positive, got {L1!r}")
    if L1 > L2:
        raise DomainError(f"bi-Lipschitz constants need L1 <= L2, got {L1} > {L2}")
    return PoincareConstants(c.frac * bilipschitz_factor(L1, L2, alpha, d), c.gauss * L2**2)


def perturb_bounded(c: PoincareConstants, b: float) -> PoincareConstants:
    """Constants of ``mu'`` with ``e^-b <= dmu'/dmu <= e^b``: both scaled by ``e^(2b)``."""
    if not (b >= 0.0):
        raise DomainError(f"perturbation level must be >= 0, got {b!r}")
    s = math.exp(2.0 * b)
    return PoincareConstants(c.frac * s, c.gauss * s)


@dataclass(frozen=True)
class ConvexProblem:
    """``lambda``-strongly convex, ``M``-smooth loss run with step ``eta`` and stable scale ``sigma``."""

    lam: float
    M: float
    eta: float
    sigma: float
    alpha: float
    d: int

    def __post_init__(self):
        check_alpha(self.alpha)
        check_dimension(self.d)
        if not (0.0 < self.lam <= self.M):
            raise DomainError(f"need 0 < lambda <= M, got lambda={self.lam}, M={self.M}")
        if not (0.0 < self.eta < 1.0 / self.M):
            raise DomainError(f"need 0 < eta < 1/M = {1.0 / self.M:g}, got {self.eta}")
        if not (self.sigma > 0.0):
            raise DomainError(f"sigma must be positive, got {self.sigma}")

    @property
    def condition_value(self) -> float:
        return self.lam / self.M * (1.0 + self.alpha / self.d)

    @property
    def lipschitz_pair(self):
        """``(L1, L2) = (1 - eta M, 1 - eta lambda)`` of the gradient step map."""
        return 1.0 - self.eta * self.M, 1.0 - self.eta * self.lam


Variant = Literal["proof", "statement"]


def step_factor(problem: ConvexProblem, eta: float, variant: Variant = "proof") -> float:
    """Multiplier ``F(eta)`` on the fractional constant per step.

    ``"proof"``: ``(1 - eta lambda)^(alpha+d) / (1 - eta M)^d`` (bi-Lipschitz
    pushforward).  ``"statement"``: denominator exponent ``alpha`` instead.
    """
    L1, L2 = 1.0 - eta * problem.M, 1.0 - eta * problem.lam
    if variant == "proof":
        return bilipschitz_factor(L1, L2, problem.alpha, problem.d)
    if variant == "statement":
        return L2 ** (problem.alpha + problem.d) / L1**problem.alpha
    raise DomainError(f"unknown variant {variant!r}")


def optimal_step(problem: ConvexProblem) -> float:
    """Stationary point ``((alpha+d) lambda - d M) / (alpha lambda M)`` of the proof's ``F``."""
    a, d, lam, M = problem.alpha, problem.d, problem.lam, problem.M
    return ((a + d) * lam - d * M) / (a * lam * M)


@dataclass(frozen=True)
class SgdTracking:
    constants: PoincareConstants
    c0: float
    admissible: bool
    condition_value: float
    eta0: float
    F_eta0: float
    F_eta: float
    guaranteed: bool
    """True when the bound ``frac <= c0`` is backed: admissible, ``gamma0 <= c0``
    and ``F(eta) <= F(eta0)`` (so the affine map keeps ``[0, c0]`` invariant)."""


def track_sgd(
    problem: ConvexProblem,
    gamma0: float,
    k: int,
    variant: Variant = "proof",
    strict: bool = False,
) -> SgdTracking:
    """Propagate ``(gamma0, 0)`` through ``k`` noisy gradient steps.

    Each step applies ``c <- F(eta) c + eta sigma^alpha`` which is exactly
    :func:`pushforward_bilipschitz` with ``(1 - eta M, 1 - eta lambda)``
    followed by :func:`convolve` with ``(eta sigma^alpha, 0)``.  The Gaussian
    component stays 0.

    When ``(lambda/M)(1 + alpha/d) <= 1`` the result is returned with
    ``admissible=False`` and ``c0 = nan`` (or :class:`PoincareConditionError`
    is raised when ``strict``).
    """
    if not (gamma0 >= 0.0):
        raise DomainError(f"gamma0 must be >= 0, got {gamma0!r}")
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise DomainError(f"k must be a non-negative integer, got {k!r}")
    cond = problem.condition_value
    admissible = cond > 1.0
    if not admissible and strict:
        raise PoincareConditionError(cond)

    F = step_factor(problem, problem.eta, variant)
    drive = problem.eta * problem.sigma**problem.alpha
    c = float(gamma0)
    for _ in range(int(k)):
        c = F * c + drive

    if admissible:
        eta0 = optimal_step(problem)
        F0 = step_factor(problem, eta0, variant)
        c0 = drive / (1.0 - F0)
    else:
        eta0 = F0 = c0 = math.nan
    guaranteed = admissible and gamma0 <= c0 and F <= F0
    return SgdTracking(
        constants=PoincareConstants(c, 0.0),
        c0=c0,
        admissible=admissible,
        condition_value=cond,
        eta0=eta0,
        F_eta0=F0,
        F_eta=F,
        guaranteed=guaranteed,
    )
