"""Seeded samplers for isotropic alpha-stable and Gaussian noise.

The isotropic stable vector is produced by subordination: ``X = sqrt(2 A) Z``
with ``A`` a positive (alpha/2)-stable variable whose Laplace transform is
``exp(-u^(alpha/2))`` and ``Z`` standard Gaussian.  Then
``E exp(i xi.X) = E exp(-A |xi|^2) = exp(-|xi|^alpha)``, i.e. the law of
``L_1`` for the Levy process with characteristic exponent ``|xi|^alpha``.
Drawing each coordinate independently would *not* be rotationally invariant.

Streams
-------
A stream is a :class:`numpy.random.Generator` on PCG64.  ``make_rng(seed,
*path)`` derives a child stream by hashing ``(seed, *path)`` through
:class:`numpy.random.SeedSequence` (``spawn_key=path``).  The mapping is fixed
by NumPy's SeedSequence algorithm and does not depend on thread count or on
what other streams exist in the process.
"""

from __future__ import annotations

import math

import numpy as np

from .constants import check_alpha, check_dimension
from .errors import DomainError

__all__ = [
    "make_rng",
    "sample_positive_stable",
    "sample_isotropic_stable",
    "sample_gaussian",
]

_MAX_SEED = 2**64 - 1


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for ``seed`` split along the integer ``path``.

    ``make_rng(s)`` and ``make_rng(s, i)`` are independent streams; the
    trajectory ``i`` of an ensemble seeded with ``s`` uses ``make_rng(s, i)``.
    """
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))


def seed_sequence(seed, *path: int) -> np.random.SeedSequence:
    """SeedSequence for ``seed`` (int or SeedSequence) extended by ``path``."""
    key = tuple(int(p) for p in path)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(entropy=seed.entropy, spawn_key=seed.spawn_key + key)
    if isinstance(seed, bool) or int(seed) != seed:
        raise DomainError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if seed < 0 or seed > _MAX_SEED:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.SeedSequence(entropy=seed, spawn_key=key)


def _kanter(alpha_prime: float, u: np.ndarray, e: np.ndarray) -> np.ndarray:
    # Chambers-Mallows-Stuck with skewness 1 and the cos(pi a/2)^(1/a) scale
    # folded in (Kanter's form); u ~ U(0, pi), e ~ Exp(1).
    a = alpha_prime
    s = np.sin(u)
    return (np.sin(a * u) / s ** (1.0 / a)) * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)


def sample_positive_stable(alpha_prime: float, rng: np.random.Generator, size=None):
    """Draw ``A > 0`` with Laplace transform ``E exp(-u A) = exp(-u^alpha_prime)``.

    Parameters
    ----------
    alpha_prime : float
        Stability index in (0, 1).
    rng : numpy.random.Generator
        Source stream; consumed as ``size`` uniforms followed by ``size``
        exponentials (plus redraws for the rare non-finite result).
    size : int or tuple, optional
        Output shape; ``None`` returns a Python float.
    """
    a = float(alpha_prime)
    if not (0.0 < a < 1.0):
        raise DomainError(f"alpha_prime must lie in (0, 1), got {alpha_prime!r}")
    shape = () if size is None else size
    # 1 - random() lies in (0, 1], keeping sin(u) away from 0 at the left end.
    u = math.pi * (1.0 - rng.random(shape))
    e = rng.standard_exponential(shape)
    out = np.asarray(_kanter(a, u, e), dtype=float)
    bad = ~np.isfinite(out) | (out <= 0.0)
    while np.any(bad):
        k = int(np.count_nonzero(bad))
        u2 = math.pi * (1.0 - rng.random(k))
        e2 = rng.standard_exponential(k)
        out[bad] = _kanter(a, u2, e2)
        bad = ~np.isfinite(out) | (out <= 0.0)
    return float(out) if size is None else out


def sample_isotropic_stable(alpha: float, d: int, rng: np.random.Generator, size=None):
    """Draw isotropic alpha-stable vectors with characteristic function ``exp(-|xi|^alpha)``.

    Returns an array of shape ``(d,)`` when ``size`` is None, else
    ``(*size, d)``.  Components are always finite; values can be astronomically
    large since the tails are polynomial with index ``alpha``.
    """
    alpha = check_alpha(alpha)
    d = check_dimension(d)
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    a = np.atleast_1d(sample_positive_stable(0.5 * alpha, rng, shape if shape else 1))
    z = rng.standard_normal(shape + (d,))
    scale = np.sqrt(2.0 * a).reshape(shape + (1,)) if shape else math.sqrt(2.0 * a[0])
    x = scale * z
    return x


def sample_gaussian(d: int, rng: np.random.Generator, size=None):
    """Standard normal vectors of shape ``(d,)`` or ``(*size, d)``."""
    d = check_dimension(d)
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    return rng.standard_normal(shape + (d,))
