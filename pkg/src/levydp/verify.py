"""Named verification suites; each returns a list of :class:`VerificationRow`."""

from __future__ import annotations

import math
from typing import Callable, Dict, List

import numpy as np
from scipy import stats

from .accountant import NoiseSpec
from .divergence_lab import (
    Constant,
    GaussianBump,
    PolyBump,
    TanhRidge,
    VerificationRow,
    bregman_gap,
    check_fractional_poincare,
    dirichlet_form,
    dirichlet_form_spherical,
    estimate_renyi,
    flow_check,
    spherical_J,
)
from .errors import PoincareConditionError
from .poincare import ConvexProblem, PoincareConstants, track_sgd
from .simulator import Dataset, NeighborPair
from .stable_noise import make_rng, sample_isotropic_stable, sample_positive_stable


def _row(name, params, lhs, rhs, passed, mc_error=0.0, margin=None) -> VerificationRow:
    if margin is None:
        margin = rhs - lhs
    return VerificationRow(name, params, float(lhs), float(rhs), float(margin), float(mc_error), bool(passed))


def suite_bregman(seed: int = 0) -> List[VerificationRow]:
    rng = make_rng(seed, 1)
    n = 100_000
    a = rng.uniform(0.0, 10.0, n)
    a[a == 0.0] = 10.0
    b = rng.uniform(0.0, 10.0, n)
    b[b == 0.0] = 10.0
    beta = rng.uniform(2.0, 8.0, n)
    g = bregman_gap(a, b, beta)
    rows = [_row("bregman_random_nonneg", {"samples": n, "seed": seed}, -float(g.min()), 1e-12, g.min() >= -1e-12)]
    z2 = np.max(np.abs(bregman_gap(a, b, 2.0)))
    rows.append(_row("bregman_beta2_zero", {"samples": n}, z2, 0.0, z2 == 0.0))
    zd = np.max(np.abs(bregman_gap(a, a, beta)))
    rows.append(_row("bregman_diagonal_zero", {"samples": n}, zd, 0.0, zd == 0.0))
    v = bregman_gap(0.0, 1.0, 3.0)
    rows.append(_row("bregman_a0_b1_beta3", {"a": 0, "b": 1, "beta": 3}, v, 1.0, abs(v - 1.0) <= 1e-15, margin=1.0 - v))
    return rows


def _bbm_samples(seed: int, n: int = 2000) -> np.ndarray:
    return make_rng(seed, 2).standard_normal(n)


def suite_bbm(seed: int = 0) -> List[VerificationRow]:
    x = _bbm_samples(seed)
    f = TanhRidge()
    e2 = dirichlet_form(f, x, 2.0)
    rows = []
    gaps = []
    for alpha in (1.5, 1.9, 1.99):
        ea = dirichlet_form(f, x, alpha)
        gaps.append(abs(ea - e2))
        rows.append(_row("bbm_gap", {"alpha": alpha, "f": "tanh", "mu": "N(0,1)"}, gaps[-1], e2, True))
    decreasing = all(g1 > g2 for g1, g2 in zip(gaps, gaps[1:]))
    for r in rows:
        r.passed = decreasing
    rel = gaps[-1] / e2
    rows.append(_row("bbm_final_within_5pct", {"alpha": 1.99}, rel, 0.05, rel <= 0.05))
    e15 = dirichlet_form(f, x, 1.5)
    sph = dirichlet_form_spherical(f, x, 1.5)
    rel = abs(sph - e15) / e15
    rows.append(_row("spherical_reconstruction", {"alpha": 1.5, "d": 1}, rel, 0.10, rel <= 0.10))
    j0 = spherical_J(0.0, f, x)
    jsmall = spherical_J(1e-6, f, x)
    rel = abs(jsmall - e2) / e2
    rows.append(_row("spherical_J0", {"r": 1e-6}, rel, 0.01, rel <= 0.01 and j0 == e2))
    return rows


def suite_sampler(seed: int = 0, samples: int = 1_000_000) -> List[VerificationRow]:
    rows = []
    for i, alpha in enumerate((1.2, 1.5, 1.9)):
        for d in (1, 2, 3):
            x = sample_isotropic_stable(alpha, d, make_rng(seed, 3, i, d), samples)
            worst = 0.0
            for s in (0.5, 1.0, 2.0):
                emp = float(np.mean(np.cos(s * x[:, 0])))
                worst = max(worst, abs(emp - math.exp(-(s**alpha))))
            rows.append(_row("sampler_charfn", {"alpha": alpha, "d": d, "samples": samples}, worst, 5e-3, worst <= 5e-3))
    n = 100_000
    a = sample_positive_stable(0.5, make_rng(seed, 3, 99), n)
    # A with Laplace transform exp(-sqrt(u)) is Levy with scale 1/2
    ks = stats.kstest(a, stats.levy(scale=0.5).cdf).statistic
    rows.append(_row("sampler_levy_ks", {"alpha_prime": 0.5, "samples": n}, ks, 0.01, ks <= 0.01))
    return rows


def suite_poincare(seed: int = 0, samples: int = 20_000) -> List[VerificationRow]:
    rows = []
    alpha = 1.5
    rng = make_rng(seed, 4)
    x = sample_isotropic_stable(alpha, 1, rng, samples)
    x2 = x + sample_isotropic_stable(alpha, 1, rng, samples)
    fns = {"gaussian_bump": GaussianBump(), "tanh_ridge": TanhRidge(), "poly_bump": PolyBump()}
    for name, f in fns.items():
        for label, pts, c in (("stable", x, PoincareConstants(1.0, 0.0)), ("convolution", x2, PoincareConstants(2.0, 0.0))):
            chk = check_fractional_poincare(pts, f, c, alpha)
            rows.append(
                _row(
                    "fractional_poincare",
                    {"alpha": alpha, "mu": label, "f": name, "frac": c.frac, "samples": samples},
                    chk.lhs, chk.rhs, chk.passed(3.0), chk.mc_error, chk.margin,
                )
            )
    chk = check_fractional_poincare(x, Constant(1.0), PoincareConstants(1.0, 0.0), alpha)
    rows.append(_row("fractional_poincare_constant", {"alpha": alpha}, chk.lhs, chk.rhs, chk.margin == 0.0))

    prob = ConvexProblem(lam=0.9, M=1.0, eta=1.15 / 1.35, sigma=1.0, alpha=1.5, d=2)
    tr = track_sgd(prob, 0.0, 0)
    for name, got, want in (("tracker_eta0", tr.eta0, 0.85185), ("tracker_F_eta0", tr.F_eta0, 0.2796), ("tracker_c0", tr.c0, 1.18251)):
        rel = abs(got - want) / want
        rows.append(_row(name, {"lambda": 0.9, "M": 1, "alpha": 1.5, "d": 2}, got, want, rel <= 5e-4, margin=5e-4 - rel))
    fixed = track_sgd(prob, tr.c0, 1000)
    dev = abs(fixed.constants.frac - tr.c0)
    rows.append(_row("tracker_fixed_point", {"steps": 1000}, dev, 1e-12, dev <= 1e-12))
    bad = ConvexProblem(lam=0.5, M=1.0, eta=0.5, sigma=1.0, alpha=1.5, d=100)
    try:
        track_sgd(bad, 0.0, 1, strict=True)
        rejected = False
    except PoincareConditionError:
        rejected = True
    rows.append(_row("tracker_inadmissible", {"lambda": 0.5, "M": 1, "alpha": 1.5, "d": 100}, bad.condition_value, 1.0, rejected))
    return rows


def suite_renyi(seed: int = 0, samples: int = 1_000_000) -> List[VerificationRow]:
    rng = make_rng(seed, 5)
    p = rng.standard_normal(samples)
    q = rng.standard_normal(samples) + 1.0
    k2 = estimate_renyi(p, q, 2.0, bins=200)
    rel = abs(k2 - 1.0)
    rows = [_row("renyi_gaussian_closed_form", {"beta": 2, "gap": 1, "samples": samples, "bins": 200}, k2, 1.0, rel <= 0.10, margin=0.10 - rel)]
    vals = [estimate_renyi(p, q, b, bins=200) for b in (1.5, 2.0, 4.0, 8.0)]
    mono = all(v1 <= v2 for v1, v2 in zip(vals, vals[1:]))
    rows.append(_row("renyi_monotone_in_beta", {"betas": [1.5, 2, 4, 8]}, vals[0], vals[-1], mono))
    same = estimate_renyi(p, p, 2.0)
    rows.append(_row("renyi_identical", {"beta": 2}, same, 0.0, abs(same) <= 1e-12))
    return rows


def flow_experiment(seed: int = 0, trajectories: int = 100_000):
    z = np.linspace(-1.0, 1.0, 10)[:, None]
    pair = NeighborPair.replace_point(Dataset(z, 1.0), 0, [1.0])
    return flow_check(pair, NoiseSpec(alpha=1.5, sigma_alpha=0.0, sigma_2=1.0), 0.1, [1, 5, 10, 20, 50], beta=2.0, trajectories=trajectories, seed=seed)


def suite_flow(seed: int = 0, trajectories: int = 100_000) -> List[VerificationRow]:
    rows = []
    for r in flow_experiment(seed, trajectories):
        rows.append(
            _row(
                "flow_below_linear_bound",
                {"step": r.step, "t": r.t, "oracle": r.oracle, "trajectories": trajectories},
                r.kappa_hat, r.linear_bound, r.kappa_hat <= r.linear_bound,
            )
        )
    return rows


SUITES: Dict[str, Callable[[int], List[VerificationRow]]] = {
    "bregman": suite_bregman,
    "bbm": suite_bbm,
    "sampler": suite_sampler,
    "poincare": suite_poincare,
    "renyi": suite_renyi,
    "flow": suite_flow,
}
SUITE_NAMES = tuple(SUITES) + ("all",)


def run_suite(name: str, seed: int = 0) -> List[VerificationRow]:
    if name == "all":
        return [row for fn in SUITES.values() for row in fn(seed)]
    return SUITES[name](seed)
