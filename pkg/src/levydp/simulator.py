"""Coupled heavy-tailed (S)GD on neighbouring datasets.

Both chains share the initial draw, the mini-batch indices and every noise
increment; only the dataset differs.  One step is

    X_{k+1} = Pi_C(X_k - eta g_S(X_k, Omega_k) + sigma_alpha eta^(1/alpha) xi_k
                   + sigma_2 sqrt(2 eta) zeta_k)

with ``Pi_C`` the projection onto a centred ball (or the identity).

Randomness layout
-----------------
Trajectory ``i`` of a run seeded with ``seed`` owns the stream
``make_rng(seed, i)`` (:func:`run_pair` with ``seed=s`` uses
``make_rng(s, 0)``, so a one-trajectory ensemble reproduces it).  The stream
is consumed in blocks: initial draw (Gaussian init only), batches
(skipped for full batches), stable increments (skipped when
``sigma_alpha = 0``), Gaussian increments (skipped when ``sigma_2 = 0``).
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .accountant import NoiseSpec
from .errors import DomainError, UnsupportedFamilyError
from .stable_noise import make_rng, sample_isotropic_stable

__all__ = [
    "Dataset",
    "NeighborPair",
    "QuadraticLoss",
    "RegularizedLogisticLoss",
    "ClippedGradientLoss",
    "InitSpec",
    "TrajectoryPair",
    "EnsembleResult",
    "gradient_sensitivity",
    "run_pair",
    "run_ensemble",
    "worker_count",
]


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True)
class Dataset:
    """``points`` has shape ``(n, d_z)``; ``bound`` is an optional data-ball radius."""

    points: np.ndarray
    bound: Optional[float] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise DomainError("dataset must be a non-empty (n, d_z) array")
        if not np.all(np.isfinite(pts)):
            raise DomainError("dataset contains non-finite values")
        if self.bound is not None:
            if not self.bound > 0:
                raise DomainError(f"data bound must be positive, got {self.bound}")
            norms = np.linalg.norm(pts, axis=1)
            if np.any(norms > self.bound * (1 + 1e-12)):
                raise DomainError(
                    f"point with norm {norms.max():.6g} exceeds data bound {self.bound}"
                )
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class NeighborPair:
    s: Dataset
    s_prime: Dataset
    differing_index: int

    def __post_init__(self):
        a, b = self.s.points, self.s_prime.points
        if a.shape != b.shape:
            raise DomainError("neighbouring datasets must have the same shape")
        i = self.differing_index
        if not (0 <= i < a.shape[0]):
            raise DomainError(f"differing index {i} out of range")
        mask = np.ones(a.shape[0], dtype=bool)
        mask[i] = False
        if not np.array_equal(a[mask], b[mask]):
            raise DomainError("datasets differ outside the declared index")

    @classmethod
    def replace_point(cls, s: Dataset, index: int, point) -> "NeighborPair":
        pts = np.array(s.points)
        pts[index] = np.asarray(point, dtype=float)
        return cls(s, Dataset(pts, s.bound), index)

    def swapped(self) -> "NeighborPair":
        return NeighborPair(self.s_prime, self.s, self.differing_index)


# ---------------------------------------------------------------------------
# losses


@dataclass(frozen=True)
class QuadraticLoss:
    """``l(w, z) = |w - z|^2 / 2``; gradient ``w - z``."""

    family = "quadratic"

    def gradients(self, w: np.ndarray, z: np.ndarray) -> np.ndarray:
        return w - z

    def param_dim(self, data_dim: int) -> int:
        return data_dim

    def sensitivity(self, region_radius: float, data_bound: Optional[float]) -> float:
        if data_bound is None:
            raise UnsupportedFamilyError("quadratic loss needs a data bound for finite sensitivity")
        return 2.0 * data_bound


@dataclass(frozen=True)
class RegularizedLogisticLoss:
    """``log(1 + exp(-y <w, x>)) + ridge |w|^2`` on points ``z = (x, y)``, ``y = +-1``.

    ``feature_bound`` bounds ``|x|``; the ridge term cancels in gradient
    differences, leaving ``S_g <= 2 * feature_bound``.
    """

    feature_bound: float
    ridge: float = 0.0
    family = "logistic"

    def __post_init__(self):
        if not self.feature_bound > 0:
            raise DomainError("feature bound must be positive")
        if not self.ridge >= 0:
            raise DomainError("ridge must be non-negative")

    def gradients(self, w: np.ndarray, z: np.ndarray) -> np.ndarray:
        x, y = z[..., :-1], z[..., -1:]
        margin = y * np.sum(w * x, axis=-1, keepdims=True)
        # d/dw log(1 + e^{-m}) = -y x sigmoid(-m)
        s = 0.5 * (1.0 - np.tanh(0.5 * margin))
        return -y * x * s + 2.0 * self.ridge * w

    def param_dim(self, data_dim: int) -> int:
        return data_dim - 1

    def sensitivity(self, region_radius: float, data_bound: Optional[float]) -> float:
        return 2.0 * self.feature_bound


@dataclass(frozen=True)
class ClippedGradientLoss:
    """Any inner loss with per-sample gradients clipped to norm ``clip``."""

    inner: object
    clip: float
    family = "clipped"

    def __post_init__(self):
        if not self.clip > 0:
            raise DomainError("clip radius must be positive")

    def gradients(self, w: np.ndarray, z: np.ndarray) -> np.ndarray:
        g = self.inner.gradients(w, z)
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(norm > self.clip, self.clip / norm, 1.0)
        return g * scale

    def param_dim(self, data_dim: int) -> int:
        return self.inner.param_dim(data_dim)

    def sensitivity(self, region_radius: float, data_bound: Optional[float]) -> float:
        return 2.0 * self.clip


def gradient_sensitivity(loss, region_radius: float = math.inf, data_bound: Optional[float] = None) -> float:
    """Certified ``sup_w sup_{z,z'} |grad l(w,z) - grad l(w,z')|`` over the region.

    Exact for the quadratic and clipped families; ``2 * feature_bound`` for
    the regularised logistic loss.
    """
    if not (region_radius > 0):
        raise DomainError(f"region radius must be positive, got {region_radius}")
    fn = getattr(loss, "sensitivity", None)
    if fn is None:
        raise UnsupportedFamilyError(f"no certified sensitivity bound for {loss!r}")
    return fn(region_radius, data_bound)


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class InitSpec:
    """Point mass at ``w0`` (``scale = 0``) or ``w0 + scale * N(0, I)``."""

    w0: Tuple[float, ...] | float = 0.0
    scale: float = 0.0

    def __post_init__(self):
        if not self.scale >= 0:
            raise DomainError("initial scale must be non-negative")

    def center(self, d: int) -> np.ndarray:
        w0 = np.broadcast_to(np.asarray(self.w0, dtype=float), (d,))
        return np.array(w0)


@dataclass
class TrajectoryPair:
    """Iterates of both chains plus the shared randomness.

    ``w`` and ``w_prime`` have shape ``(steps + 1, d)``.  ``stable_noise`` and
    ``gauss_noise`` hold the applied increments ``sigma_alpha eta^(1/alpha) xi_k``
    and ``sigma_2 sqrt(2 eta) zeta_k`` (shape ``(steps, d)``); ``batches`` has
    shape ``(steps, b)``.  When the run overflowed, ``truncated_at`` is the
    first bad step and the arrays stop before it.
    """

    w: np.ndarray
    w_prime: np.ndarray
    stable_noise: np.ndarray
    gauss_noise: np.ndarray
    batches: np.ndarray
    truncated_at: Optional[int] = None
    diagnostic: Optional[str] = None

    @property
    def steps(self) -> int:
        return self.w.shape[0] - 1

    @property
    def noise_log(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.stable_noise, self.gauss_noise

    @property
    def batch_log(self) -> np.ndarray:
        return self.batches


@dataclass
class EnsembleResult:
    checkpoints: List[int]
    clouds: Dict[int, Tuple[np.ndarray, np.ndarray]]
    trajectories: int
    truncated: Dict[int, int] = field(default_factory=dict)
    """trajectory id -> first overflowing step (its cloud entries are NaN from there on)."""

    def write_csv(self, path) -> None:
        """Columns ``trajectory_id, step, which, w_1..w_d`` (which in {S, Sprime})."""
        first = self.clouds[self.checkpoints[0]][0]
        d = first.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trajectory_id", "step", "which"] + [f"w_{j + 1}" for j in range(d)])
            for i in range(self.trajectories):
                for k in self.checkpoints:
                    a, b = self.clouds[k]
                    writer.writerow([i, k, "S"] + [repr(float(v)) for v in a[i]])
                    writer.writerow([i, k, "Sprime"] + [repr(float(v)) for v in b[i]])


def worker_count() -> int:
    """Worker cap from ``LEVYDP_THREADS`` (default: CPU count)."""
    raw = os.environ.get("LEVYDP_THREADS")
    if raw:
        try:
            v = int(raw)
        except ValueError:
            raise DomainError(f"LEVYDP_THREADS must be an integer, got {raw!r}") from None
        return max(1, v)
    return os.cpu_count() or 1


@dataclass(frozen=True)
class _Config:
    pair: NeighborPair
    loss: object
    noise: NoiseSpec
    eta: float
    steps: int
    batch: int
    projection_radius: Optional[float]
    init: InitSpec
    d: int


def _validate(pair, loss, noise, eta, steps, batch, projection_radius, init) -> _Config:
    if not (eta > 0 and math.isfinite(eta)):
        raise DomainError(f"step size must be positive, got {eta}")
    if isinstance(steps, bool) or int(steps) != steps or steps < 1:
        raise DomainError(f"steps must be a positive integer, got {steps}")
    n = pair.s.n
    if isinstance(batch, bool) or int(batch) != batch or not (1 <= batch <= n):
        raise DomainError(f"batch must be an integer in [1, n={n}], got {batch}")
    if projection_radius is not None and not projection_radius > 0:
        raise DomainError("projection radius must be positive")
    d = loss.param_dim(pair.s.dim)
    if d < 1:
        raise DomainError("loss/data combination leaves no parameters")
    init = init if init is not None else InitSpec()
    return _Config(pair, loss, noise, float(eta), int(steps), int(batch), projection_radius, init, d)


def _partial_fisher_yates(rng: np.random.Generator, n: int, b: int, steps: int) -> np.ndarray:
    # One partial shuffle per step, vectorised across steps.
    idx = np.tile(np.arange(n), (steps, 1))
    rows = np.arange(steps)
    for i in range(b):
        j = rng.integers(i, n, size=steps)
        tmp = idx[rows, i].copy()
        idx[rows, i] = idx[rows, j]
        idx[rows, j] = tmp
    return idx[:, :b]


@dataclass
class _Draws:
    x0: np.ndarray          # (d,)
    batches: np.ndarray     # (steps, b) or empty for full batch
    stable: np.ndarray      # (steps, d) applied increments
    gauss: np.ndarray       # (steps, d)


def _draw(cfg: _Config, seed) -> _Draws:
    rng = make_rng(seed) if isinstance(seed, np.random.SeedSequence) else seed
    d, steps, n, b = cfg.d, cfg.steps, cfg.pair.s.n, cfg.batch
    x0 = cfg.init.center(d)
    if cfg.init.scale > 0:
        x0 = x0 + cfg.init.scale * rng.standard_normal(d)
    if b < n:
        batches = _partial_fisher_yates(rng, n, b, steps)
    else:
        batches = np.empty((steps, 0), dtype=np.int64)
    noise = cfg.noise
    if noise.sigma_alpha > 0:
        xi = sample_isotropic_stable(noise.alpha, d, rng, steps)
        stable = noise.sigma_alpha * cfg.eta ** (1.0 / noise.alpha) * xi
    else:
        stable = np.zeros((steps, d))
    if noise.sigma_2 > 0:
        gauss = noise.sigma_2 * math.sqrt(2.0 * cfg.eta) * rng.standard_normal((steps, d))
    else:
        gauss = np.zeros((steps, d))
    return _Draws(x0, batches, stable, gauss)


def _project(x: np.ndarray, radius: Optional[float]) -> np.ndarray:
    if radius is None:
        return x
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > radius, radius / norm, 1.0)
    return x * scale


def _mean_gradient(loss, w: np.ndarray, data: np.ndarray, batch_idx: Optional[np.ndarray]) -> np.ndarray:
    """Batch-mean gradient for a stack of iterates ``w`` of shape ``(T, d)``."""
    if batch_idx is None or batch_idx.shape[-1] == 0:
        z = data[None, :, :]                     # (1, n, d_z)
    else:
        z = data[batch_idx]                      # (T, b, d_z)
    g = loss.gradients(w[:, None, :], z)         # (T, b or n, d)
    return g.mean(axis=1)


def _advance(cfg: _Config, w, wp, batch_idx, stable, gauss):
    data_s, data_p = cfg.pair.s.points, cfg.pair.s_prime.points
    noise = stable + gauss
    w_next = _project(w - cfg.eta * _mean_gradient(cfg.loss, w, data_s, batch_idx) + noise, cfg.projection_radius)
    wp_next = _project(wp - cfg.eta * _mean_gradient(cfg.loss, wp, data_p, batch_idx) + noise, cfg.projection_radius)
    return w_next, wp_next


def run_pair(
    pair: NeighborPair,
    loss,
    noise: NoiseSpec,
    eta: float,
    steps: int,
    batch: Optional[int] = None,
    projection_radius: Optional[float] = None,
    seed: int = 0,
    init: Optional[InitSpec] = None,
) -> TrajectoryPair:
    """Run one coupled pair of chains for ``steps`` steps.

    On overflow (a non-finite iterate) the run stops; ``truncated_at`` and
    ``diagnostic`` record the step and the size of the offending jump.
    """
    cfg = _validate(pair, loss, noise, eta, steps, pair.s.n if batch is None else batch, projection_radius, init)
    draws = _draw(cfg, make_rng(seed, 0))
    d = cfg.d
    w = np.empty((cfg.steps + 1, d))
    wp = np.empty((cfg.steps + 1, d))
    w[0] = wp[0] = _project(draws.x0[None, :], cfg.projection_radius)[0]
    truncated = diag = None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(cfg.steps):
            bidx = draws.batches[k : k + 1] if draws.batches.shape[1] else None
            a, b = _advance(cfg, w[k : k + 1], wp[k : k + 1], bidx, draws.stable[k], draws.gauss[k])
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
                truncated = k + 1
                jump = float(np.linalg.norm(draws.stable[k] + draws.gauss[k]))
                diag = f"non-finite iterate at step {k + 1} (noise jump norm {jump:.6g})"
                break
            w[k + 1], wp[k + 1] = a[0], b[0]
    last = cfg.steps + 1 if truncated is None else truncated
    nsteps = last - 1
    return TrajectoryPair(
        w=w[:last],
        w_prime=wp[:last],
        stable_noise=draws.stable[:nsteps],
        gauss_noise=draws.gauss[:nsteps],
        batches=draws.batches[:nsteps],
        truncated_at=truncated,
        diagnostic=diag,
    )


def run_ensemble(
    pair: NeighborPair,
    loss,
    noise: NoiseSpec,
    eta: float,
    steps: int,
    trajectories: int,
    checkpoints: Optional[Sequence[int]] = None,
    batch: Optional[int] = None,
    projection_radius: Optional[float] = None,
    seed: int = 0,
    init: Optional[InitSpec] = None,
    chunk: int = 8192,
) -> EnsembleResult:
    """Run ``trajectories`` independent coupled pairs and keep checkpoint clouds.

    Trajectory ``i`` uses ``make_rng(seed, i)``, so trajectory 0 reproduces
    :func:`run_pair` with the same seed.  Draws are generated per trajectory
    (optionally on ``LEVYDP_THREADS`` workers) and the dynamics advance
    vectorised over a chunk of trajectories; results do not depend on the
    worker count.
    """
    if isinstance(trajectories, bool) or int(trajectories) != trajectories or trajectories < 1:
        raise DomainError(f"trajectories must be a positive integer, got {trajectories}")
    cfg = _validate(pair, loss, noise, eta, steps, pair.s.n if batch is None else batch, projection_radius, init)
    cps = sorted(set(int(k) for k in (checkpoints if checkpoints is not None else range(cfg.steps + 1))))
    if not cps or cps[0] < 0 or cps[-1] > cfg.steps:
        raise DomainError(f"checkpoints must lie in [0, {cfg.steps}]")
    T, d = int(trajectories), cfg.d
    clouds = {k: (np.empty((T, d)), np.empty((T, d))) for k in cps}
    truncated: Dict[int, int] = {}
    workers = worker_count()
    full_batch = cfg.batch == cfg.pair.s.n

    for start in range(0, T, chunk):
        ids = range(start, min(T, start + chunk))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                draws = list(pool.map(lambda i: _draw(cfg, make_rng(seed, i)), ids))
        else:
            draws = [_draw(cfg, make_rng(seed, i)) for i in ids]
        m = len(draws)
        x0 = _project(np.stack([dr.x0 for dr in draws]), cfg.projection_radius)
        stable = np.stack([dr.stable for dr in draws], axis=1)      # (steps, m, d)
        gauss = np.stack([dr.gauss for dr in draws], axis=1)
        batches = None if full_batch else np.stack([dr.batches for dr in draws], axis=1)
        del draws
        w, wp = x0.copy(), x0.copy()
        alive = np.ones(m, dtype=bool)
        sl = slice(start, start + m)
        if 0 in clouds:
            clouds[0][0][sl], clouds[0][1][sl] = w, wp
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(cfg.steps):
                bidx = None if batches is None else batches[k]
                w, wp = _advance(cfg, w, wp, bidx, stable[k], gauss[k])
                bad = alive & ~(np.all(np.isfinite(w), axis=1) & np.all(np.isfinite(wp), axis=1))
                if np.any(bad):
                    for j in np.flatnonzero(bad):
                        truncated[start + int(j)] = k + 1
                    alive &= ~bad
                    w[~alive] = np.nan
                    wp[~alive] = np.nan
                if k + 1 in clouds:
                    clouds[k + 1][0][sl], clouds[k + 1][1][sl] = w, wp
    return EnsembleResult(checkpoints=cps, clouds=clouds, trajectories=T, truncated=truncated)
