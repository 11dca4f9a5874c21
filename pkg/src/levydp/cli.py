"""``levydp`` command line: account | simulate | verify | sweep.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 domain/runtime error (including overflow-truncated simulations).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .accountant import AccountingParams, ContinuousTime, DiscreteSteps, NoiseSpec, bound, sweep
from .config import (
    COMMAND_SECTIONS,
    ConfigError,
    dump_ini,
    dump_manifest,
    keys_for,
    read_config_file,
    require,
    resolve,
)
from .errors import LevyDPError
from .privacy_core import rdp_to_eps_delta, rdp_to_zero_delta
from .simulator import (
    ClippedGradientLoss,
    Dataset,
    InitSpec,
    NeighborPair,
    QuadraticLoss,
    RegularizedLogisticLoss,
    gradient_sensitivity,
    run_ensemble,
)
from .stable_noise import make_rng
from .verify import run_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# helpers


def _out_dir(cfg) -> str:
    path = cfg["output.dir"]
    os.makedirs(path, exist_ok=True)
    return path


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_resolved(cfg, out: str) -> None:
    _write_text(os.path.join(out, "resolved.ini"), dump_ini(cfg))


# ---------------------------------------------------------------------------
# account / sweep


def _accounting_inputs(cfg):
    mode = require(cfg, "accounting.mode")
    setting = require(cfg, "accounting.setting")
    n = require(cfg, "problem.n")
    sg = require(cfg, "problem.sg")
    alpha = cfg["noise.alpha"]
    if mode == "multifractal":
        sigma2 = cfg["noise.sigma2"]
        if not sigma2 > 0:
            raise ConfigError("noise.sigma2 must be > 0 in multifractal mode (flag --sigma2)")
        noise = NoiseSpec(alpha=alpha, sigma_alpha=cfg["noise.sigma_alpha"], sigma_2=sigma2)
    else:
        if cfg["noise.sigma2"] != 0:
            raise ConfigError("noise.sigma2 must be 0 in pure-jump mode (flag --sigma2)")
        sa = cfg["noise.sigma_alpha"]
        if not sa > 0:
            raise ConfigError("noise.sigma_alpha must be > 0 in pure-jump mode (flag --sigma-alpha)")
        if not alpha > 1:
            raise ConfigError("noise.alpha must lie in (1, 2) in pure-jump mode (flag --alpha)")
        noise = NoiseSpec(alpha=alpha, sigma_alpha=sa, sigma_2=0.0)
    if setting == "continuous":
        horizon = ContinuousTime(require(cfg, "accounting.t", "continuous setting"))
    else:
        horizon = DiscreteSteps(
            require(cfg, "accounting.k", "discrete setting"),
            require(cfg, "accounting.eta", "discrete setting"),
        )
    params = AccountingParams(
        n=n,
        d=cfg["problem.d"],
        beta=cfg["accounting.beta"],
        sensitivity=sg,
        gamma=cfg["accounting.gamma"],
        R=cfg["accounting.R"],
        noise=noise,
        f0=cfg["accounting.f0"],
    )
    return params, horizon, mode, setting


ACCOUNT_HEADER = ("beta", "kappa", "regime", "epsilon_at_delta", "zero_delta")


def cmd_account(cfg) -> int:
    params, horizon, mode, setting = _accounting_inputs(cfg)
    delta = cfg["accounting.delta"]
    betas = cfg["accounting.beta_grid"] or (cfg["accounting.beta"],)
    rows = []
    guarantees = []
    for b in betas:
        g = bound(replace(params, beta=b), horizon)
        eps = rdp_to_eps_delta(g, delta)
        zd = rdp_to_zero_delta(g)
        guarantees.append((g, eps, zd))
        rows.append((_num(g.beta), _num(g.kappa), str(g.regime), _num(eps), _num(zd)))
    out = _out_dir(cfg)
    _write_csv(os.path.join(out, "account.csv"), ACCOUNT_HEADER, rows)
    _write_resolved(cfg, out)

    t = horizon.time
    print(f"mode: {mode}  setting: {setting}  t = {t:g}  delta = {delta:g}")
    if mode == "pure-jump":
        alpha = params.noise.alpha
        print(
            f"conditional on R = {params.R:g}: the bound scales as R^-(2 - alpha) = R^-{2 - alpha:g}"
        )
    for g, eps, zd in guarantees:
        print(
            f"beta = {g.beta:g}  K_n = {g.K:.6g}  a = {g.a:.6g}  kappa = {g.kappa:.6g}  "
            f"regime = {g.regime}  epsilon = {eps:.6g}  zero_delta = {zd:.6g}"
        )
    if len(guarantees) > 1:
        g, eps, _ = min(guarantees, key=lambda x: (x[1], x[0].beta))
        print(f"best beta = {g.beta:g}  epsilon = {eps:.6g}")
    print(f"wrote {os.path.join(out, 'account.csv')}")
    return EXIT_OK


SWEEP_HEADER = ("axis", "value", "beta", "K_n", "a", "kappa", "regime", "epsilon_at_delta", "zero_delta", "error")
# neutral valid values for the swept key; every row overrides it
SWEEP_PLACEHOLDERS = {"n": ("problem.n", 1), "d": ("problem.d", 1), "alpha": ("noise.alpha", 1.5), "beta": ("accounting.beta", 2.0)}


def cmd_sweep(cfg) -> int:
    axis = require(cfg, "sweep.axis")
    values = require(cfg, "sweep.values")
    base_cfg = dict(cfg)
    if axis == "sigma":
        key = "noise.sigma2" if cfg.get("accounting.mode") == "multifractal" else "noise.sigma_alpha"
        base_cfg[key] = 1.0
    else:
        key, value = SWEEP_PLACEHOLDERS[axis]
        base_cfg[key] = value
    params, horizon, mode, setting = _accounting_inputs(base_cfg)
    delta = cfg["accounting.delta"]
    rows = sweep(params, horizon, axis, values, delta=delta, beta_grid=cfg["accounting.beta_grid"])
    wide = [
        (
            r.axis, _num(r.value), _num(r.beta), _num(r.K_n), _num(r.a), _num(r.kappa),
            r.regime or "", _num(r.epsilon), _num(r.zero_delta), r.error or "",
        )
        for r in rows
    ]
    long = []
    for r in rows:
        for metric in ("beta", "K_n", "a", "kappa", "epsilon", "zero_delta"):
            v = getattr(r, metric)
            if v is not None:
                long.append((r.axis, _num(r.value), "epsilon_at_delta" if metric == "epsilon" else metric, _num(v)))
    out = _out_dir(cfg)
    _write_csv(os.path.join(out, "sweep.csv"), SWEEP_HEADER, wide)
    _write_csv(os.path.join(out, "sweep_long.csv"), ("axis", "value", "metric", "metric_value"), long)
    _write_resolved(cfg, out)
    print(f"sweep over {axis} ({mode}, {setting}), delta = {delta:g}")
    for r in rows:
        if r.ok:
            print(f"{axis} = {r.value:g}  kappa = {r.kappa:.6g}  regime = {r.regime}  epsilon = {r.epsilon:.6g}  zero_delta = {r.zero_delta:.6g}")
        else:
            print(f"{axis} = {r.value:g}  invalid: {r.error}")
    print(f"wrote {os.path.join(out, 'sweep.csv')} and sweep_long.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _build_loss(cfg):
    family = cfg["problem.loss"]
    if family == "quadratic":
        return QuadraticLoss()
    logistic = RegularizedLogisticLoss(cfg["problem.feature_bound"], cfg["problem.ridge"])
    if family == "logistic":
        return logistic
    inner = QuadraticLoss() if cfg["problem.inner"] == "quadratic" else logistic
    return ClippedGradientLoss(inner, cfg["problem.clip"])


def _uses_labels(cfg) -> bool:
    return cfg["problem.loss"] == "logistic" or (cfg["problem.loss"] == "clipped" and cfg["problem.inner"] == "logistic")


def _uniform_ball(rng, n: int, d: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return radius * g * rng.uniform(size=(n, 1)) ** (1.0 / d)


def _build_pair(cfg) -> NeighborPair:
    labels = _uses_labels(cfg)
    if cfg["problem.data"]:
        try:
            pts = np.loadtxt(cfg["problem.data"], delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"problem.data: cannot read numeric CSV ({exc})") from None
        bound_ = None if labels else cfg["problem.data_bound"]
    else:
        n = require(cfg, "problem.n", "synthetic data")
        d = cfg["problem.d"]
        rng = make_rng(cfg["problem.data_seed"])
        if labels:
            x = _uniform_ball(rng, n, d, cfg["problem.feature_bound"])
            y = np.where(rng.uniform(size=(n, 1)) < 0.5, -1.0, 1.0)
            pts = np.hstack([x, y])
            bound_ = None
        else:
            pts = _uniform_ball(rng, n, d, cfg["problem.data_bound"])
            bound_ = cfg["problem.data_bound"]
    s = Dataset(pts, bound_)
    i = cfg["problem.differing_index"]
    if i >= s.n:
        raise ConfigError(f"problem.differing_index must be < n = {s.n}, got {i}")
    rep = cfg["problem.replacement"]
    if rep is None:
        rep = -s.points[i]
        if labels:
            rep[-1] = s.points[i, -1]
    elif len(rep) != s.dim:
        raise ConfigError(f"problem.replacement must have {s.dim} entries, got {len(rep)}")
    return NeighborPair.replace_point(s, i, rep)


def cmd_simulate(cfg) -> int:
    steps = require(cfg, "simulate.steps")
    eta = require(cfg, "simulate.eta")
    seed = require(cfg, "simulate.seed")
    pair = _build_pair(cfg)
    loss = _build_loss(cfg)
    noise = NoiseSpec(cfg["noise.alpha"], cfg["noise.sigma_alpha"], cfg["noise.sigma2"])
    d = loss.param_dim(pair.s.dim)
    w0 = cfg["simulate.w0"]
    if len(w0) not in (1, d):
        raise ConfigError(f"simulate.w0 must have 1 or {d} entries, got {len(w0)}")
    batch = cfg["simulate.batch"]
    if batch is not None and batch > pair.s.n:
        raise ConfigError(f"simulate.batch must be <= n = {pair.s.n}, got {batch}")
    checkpoints = cfg["simulate.checkpoints"]
    if checkpoints is not None and any(k > steps for k in checkpoints):
        raise ConfigError(f"simulate.checkpoints must lie in [0, {steps}]")
    init = InitSpec(tuple(w0) if len(w0) > 1 else w0[0], cfg["simulate.init_scale"])
    radius = cfg["simulate.projection_radius"]
    result = run_ensemble(
        pair, loss, noise, eta, steps, cfg["simulate.trajectories"],
        checkpoints=checkpoints, batch=batch, projection_radius=radius, seed=seed, init=init,
    )
    try:
        sg = gradient_sensitivity(loss, radius if radius is not None else math.inf, pair.s.bound)
    except LevyDPError:
        sg = None
    out = _out_dir(cfg)
    result.write_csv(os.path.join(out, "checkpoints.csv"))
    _write_resolved(cfg, out)
    first = min(result.truncated.values()) if result.truncated else None
    manifest = [(k, v) for k, v in cfg.items() if v is not None]
    manifest += [
        ("run.version", __version__),
        ("run.parameter_dim", d),
        ("run.gradient_sensitivity", sg if sg is not None else "unavailable"),
        ("run.truncated_trajectories", len(result.truncated)),
        ("run.first_truncation_step", first if first is not None else "none"),
    ]
    _write_text(os.path.join(out, "manifest.txt"), dump_manifest(manifest))
    print(f"simulated {result.trajectories} trajectory pair(s) for {steps} steps; wrote {os.path.join(out, 'checkpoints.csv')}")
    if result.truncated:
        print(
            f"error: {len(result.truncated)} trajectory pair(s) overflowed; first truncation at step {first}",
            file=sys.stderr,
        )
        return EXIT_DOMAIN
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(cfg) -> int:
    from .divergence_lab import VerificationRow

    suite = cfg["verify.suite"]
    rows = run_suite(suite, cfg["verify.seed"])
    out = _out_dir(cfg)
    _write_csv(os.path.join(out, "verify.csv"), VerificationRow.HEADER, [r.as_csv_row() for r in rows])
    _write_resolved(cfg, out)
    failed = [r for r in rows if not r.passed]
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.check_name}  {r.as_csv_row()[1]}  margin = {r.margin:.4g}")
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"account": cmd_account, "simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep}

HELP = {
    "account": "Renyi/(epsilon, delta) guarantee for one configuration",
    "simulate": "run coupled (S)GD chains and write checkpoint clouds",
    "verify": "run numerical verification suites",
    "sweep": "tabulate the accountant along one parameter axis",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levydp",
        description="Renyi-DP accounting and checks for heavy-tailed noisy (S)GD. "
        "Flags override keys from --config, which override built-in defaults.",
    )
    parser.add_argument("--version", action="version", version=f"levydp {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{account,simulate,verify,sweep}")
    sub.required = True
    for name in COMMAND_SECTIONS:
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", help="INI file with sections " + ", ".join(COMMAND_SECTIONS[name]))
        for key in keys_for(name):
            names = [key.flag]
            if key.dotted == "output.dir":
                names.append("--out")
            hint = f" (choices: {', '.join(key.choices)})" if key.choices else ""
            default = "" if key.default is None else f"; default {key.default}"
            p.add_argument(*names, dest=key.dotted, default=None, metavar="V", help=f"{key.dotted}: {key.help}{hint}{default}")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if "." in k}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve(args.command, file_values, flags)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LevyDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
