"""Histogram Renyi divergence between two 1-D sample sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from ..errors import DegenerateSupportError, DomainError

MIN_BINS = 50
MAX_BINS = 2000
# p mass allowed on empty reference bins before the supports count as disjoint
DEFAULT_SUPPORT_TOL = 1e-2


@dataclass(frozen=True)
class DensityEstimate:
    """Per-bin probabilities on uniform ``edges`` (``len(edges) == len(mass) + 1``)."""

    edges: np.ndarray
    mass: np.ndarray
    floor: float = 0.0

    def __post_init__(self):
        if self.edges.shape[0] != self.mass.shape[0] + 1:
            raise DomainError("edges must have one more entry than mass")
        if np.any(self.mass < 0) or abs(self.mass.sum() - 1.0) > 1e-12:
            raise DomainError("mass must be non-negative and sum to 1")

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    def floored(self) -> np.ndarray:
        """Mass with empty bins raised to ``floor``."""
        return np.where(self.mass > 0, self.mass, self.floor)


def default_bins(count: int) -> int:
    """``ceil(count^(1/3))`` clamped to ``[50, 2000]``."""
    return int(min(MAX_BINS, max(MIN_BINS, math.ceil(count ** (1.0 / 3.0)))))


def _as_samples(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def shared_histograms(
    p_samples,
    q_samples,
    bins: Optional[int] = None,
    floor: float = 1e-12,
    tail_quantile: float = 5e-4,
) -> Tuple[DensityEstimate, DensityEstimate]:
    """Histograms of both sets on one uniform grid.

    The grid spans the overlap of the two ``[tail_quantile, 1 - tail_quantile]``
    ranges (their union when they do not overlap); samples outside it are
    counted in the edge bins, so heavy tails do not stretch the grid and
    both edge bins carry mass from both sets.
    """
    p = _as_samples(p_samples, "p_samples")
    q = _as_samples(q_samples, "q_samples")
    if bins is None:
        bins = default_bins(p.size + q.size)
    if isinstance(bins, bool) or int(bins) != bins or bins < 1:
        raise DomainError(f"bins must be a positive integer, got {bins!r}")
    if not (0.0 <= tail_quantile < 0.5):
        raise DomainError("tail_quantile must lie in [0, 0.5)")
    lo_p, hi_p = np.quantile(p, [tail_quantile, 1 - tail_quantile])
    lo_q, hi_q = np.quantile(q, [tail_quantile, 1 - tail_quantile])
    # overlap of the central ranges: each edge bin then holds both tails
    lo, hi = max(lo_p, lo_q), min(hi_p, hi_q)
    if not hi > lo:
        lo, hi = min(lo_p, lo_q), max(hi_p, hi_q)
    if not hi > lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, int(bins) + 1)

    def hist(x):
        idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.int64)
        counts = np.bincount(np.clip(idx, 0, bins - 1), minlength=bins)
        return counts / x.size

    return DensityEstimate(edges, hist(p), floor), DensityEstimate(edges, hist(q), floor)


def _merge_orphans(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Move the ``p`` mass of bins where ``q`` is empty to the nearest bin where it is not."""
    occupied = np.flatnonzero(q > 0)
    orphan = np.flatnonzero((q == 0) & (p > 0))
    if orphan.size == 0:
        return p
    pos = np.searchsorted(occupied, orphan)
    left = occupied[np.clip(pos - 1, 0, occupied.size - 1)]
    right = occupied[np.clip(pos, 0, occupied.size - 1)]
    target = np.where(np.abs(orphan - left) <= np.abs(right - orphan), left, right)
    merged = p.copy()
    np.add.at(merged, target, p[orphan])
    merged[orphan] = 0.0
    return merged


def renyi_from_histograms(
    p: DensityEstimate, q: DensityEstimate, beta: float, support_tol: float = DEFAULT_SUPPORT_TOL
) -> float:
    """``(beta-1)^-1 log sum_i p_i^beta q_i^(1-beta)`` over the shared bins.

    ``p`` mass on bins where ``q`` is empty (sampling gaps in sparse tails)
    is merged into the nearest bin where ``q`` has mass, which is the exact
    value on that coarser partition.  More than ``support_tol`` such mass
    raises :class:`DegenerateSupportError`.
    """
    beta = float(beta)
    if not (beta > 1.0 and math.isfinite(beta)):
        raise DomainError(f"Renyi order must exceed 1, got {beta!r}")
    if not np.array_equal(p.edges, q.edges):
        raise DomainError("histograms must share a grid")
    orphan = float(p.mass[(q.mass == 0) & (p.mass > 0)].sum())
    if orphan > support_tol:
        raise DegenerateSupportError(orphan, support_tol)
    pm = _merge_orphans(p.mass, q.mass)
    qf = q.floored()
    keep = pm > 0
    log_terms = beta * np.log(pm[keep]) + (1.0 - beta) * np.log(qf[keep])
    return float(logsumexp(log_terms) / (beta - 1.0))


def estimate_renyi(
    p_samples,
    q_samples,
    beta: float,
    bins: Optional[int] = None,
    floor: float = 1e-12,
    tail_quantile: float = 5e-4,
    support_tol: float = DEFAULT_SUPPORT_TOL,
) -> float:
    """Plug-in order-``beta`` Renyi divergence of ``p`` from ``q`` on shared bins."""
    hp, hq = shared_histograms(p_samples, q_samples, bins, floor, tail_quantile)
    return renyi_from_histograms(hp, hq, beta, support_tol)


def gaussian_renyi(beta: float, mean_gap: float, variance: float) -> float:
    """Closed form ``beta Delta^2 / (2 sigma^2)`` for equal-variance Gaussians."""
    if not variance > 0:
        raise DomainError("variance must be positive")
    return float(beta) * float(mean_gap) ** 2 / (2.0 * float(variance))
