"""INI run configuration: schema, parsing, range checks and flag merging.

Precedence (lowest first): schema defaults, ``--config`` file, command-line
flags.  Every key lives in a section (``noise``, ``problem``, ``accounting``,
``simulate``, ``verify``, ``output``, ``sweep``); unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from .errors import ConfigError


def _finite(v: float) -> bool:
    return math.isfinite(v)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    f = float(text)
    if not f.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(f)


def _parse_floats(text: str) -> Tuple[float, ...]:
    items = [s for s in str(text).replace(";", ",").split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(s) for s in items)


def _parse_ints(text: str) -> Tuple[int, ...]:
    return tuple(_parse_int(s) for s in str(text).split(",") if s.strip())


@dataclass(frozen=True)
class Key:
    section: str
    name: str
    parse: Callable[[str], Any]
    check: Optional[Callable[[Any], bool]] = None
    requirement: str = ""
    default: Any = None
    help: str = ""
    choices: Optional[Tuple[str, ...]] = None

    @property
    def dotted(self) -> str:
        return f"{self.section}.{self.name}"

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def convert(self, raw) -> Any:
        if self.choices is not None:
            value = str(raw).strip()
            if value not in self.choices:
                raise ConfigError(f"{self.dotted}: {value!r} is not one of {', '.join(self.choices)}")
            return value
        try:
            value = raw if not isinstance(raw, str) else self.parse(raw.strip())
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.dotted}: cannot parse {raw!r} ({exc})") from None
        if self.check is not None:
            vals = value if isinstance(value, tuple) else (value,)
            if not all(self.check(v) for v in vals):
                raise ConfigError(f"{self.dotted} must be {self.requirement}, got {raw!r}")
        return value


def _pos(v):
    return _finite(v) and v > 0


def _nonneg(v):
    return _finite(v) and v >= 0


SCHEMA: List[Key] = [
    Key("noise", "alpha", _parse_float, lambda v: 0 < v < 2, "in (0, 2)", 1.5, "stable tail index"),
    Key("noise", "sigma_alpha", _parse_float, _nonneg, ">= 0", 1.0, "stable noise scale"),
    Key("noise", "sigma2", _parse_float, _nonneg, ">= 0", 0.0, "Gaussian noise scale"),
    Key("problem", "n", _parse_int, lambda v: v >= 1, "an integer >= 1", None, "dataset size"),
    Key("problem", "d", _parse_int, lambda v: v >= 1, "an integer >= 1", 1, "parameter dimension"),
    Key("problem", "sg", _parse_float, _nonneg, ">= 0", None, "gradient sensitivity"),
    Key("problem", "loss", str, None, "", "quadratic", "loss family", ("quadratic", "logistic", "clipped")),
    Key("problem", "inner", str, None, "", "quadratic", "inner loss for clipped", ("quadratic", "logistic")),
    Key("problem", "data", str, None, "", None, "numeric CSV of data points (no header)"),
    Key("problem", "data_bound", _parse_float, _pos, "> 0", 1.0, "data-ball radius"),
    Key("problem", "feature_bound", _parse_float, _pos, "> 0", 1.0, "feature norm bound (logistic)"),
    Key("problem", "ridge", _parse_float, _nonneg, ">= 0", 0.0, "ridge coefficient (logistic)"),
    Key("problem", "clip", _parse_float, _pos, "> 0", 1.0, "gradient clip radius"),
    Key("problem", "differing_index", _parse_int, lambda v: v >= 0, "an integer >= 0", 0, "index replaced in S'"),
    Key("problem", "replacement", _parse_floats, _finite, "finite", None, "replacement point (default: antipode)"),
    Key("problem", "data_seed", _parse_int, lambda v: v >= 0, "an integer >= 0", 0, "seed of synthetic data"),
    Key("accounting", "mode", str, None, "", None, "noise mode", ("multifractal", "pure-jump")),
    Key("accounting", "setting", str, None, "", None, "time setting", ("continuous", "discrete")),
    Key("accounting", "beta", _parse_float, lambda v: _finite(v) and v >= 2, ">= 2", 2.0, "Renyi order"),
    Key("accounting", "beta_grid", _parse_floats, lambda v: _finite(v) and v >= 2, "a list of orders >= 2", None, "orders to optimise over"),
    Key("accounting", "gamma", _parse_float, _pos, "> 0", 1.0, "Poincare constant"),
    Key("accounting", "R", _parse_float, _pos, "> 0", 1.0, "radius constant of the pure-jump bound"),
    Key("accounting", "t", _parse_float, _nonneg, ">= 0", None, "continuous horizon"),
    Key("accounting", "k", _parse_int, lambda v: v >= 0, "an integer >= 0", None, "number of steps"),
    Key("accounting", "eta", _parse_float, _pos, "> 0", None, "step size"),
    Key("accounting", "delta", _parse_float, lambda v: 0 < v <= 1, "in (0, 1]", 1e-5, "target delta"),
    Key("accounting", "f0", _parse_float, _nonneg, ">= 0", 0.0, "initial divergence override"),
    Key("simulate", "steps", _parse_int, lambda v: v >= 1, "an integer >= 1", None, "number of steps"),
    Key("simulate", "eta", _parse_float, _pos, "> 0", None, "step size"),
    Key("simulate", "batch", _parse_int, lambda v: v >= 1, "an integer >= 1", None, "mini-batch size (default n)"),
    Key("simulate", "trajectories", _parse_int, lambda v: v >= 1, "an integer >= 1", 1, "number of coupled pairs"),
    Key("simulate", "seed", _parse_int, lambda v: 0 <= v < 2**64, "an integer in [0, 2^64)", None, "RNG seed"),
    Key("simulate", "checkpoints", _parse_ints, lambda v: v >= 0, "non-negative step indices", None, "steps to record (default all)"),
    Key("simulate", "projection_radius", _parse_float, _pos, "> 0", None, "ball projection radius"),
    Key("simulate", "init_scale", _parse_float, _nonneg, ">= 0", 0.0, "std of Gaussian initialisation"),
    Key("simulate", "w0", _parse_floats, _finite, "finite", (0.0,), "initial point"),
    Key("verify", "suite", str, None, "", "all", "suite name", ("bregman", "bbm", "sampler", "poincare", "renyi", "flow", "all")),
    Key("verify", "seed", _parse_int, lambda v: 0 <= v < 2**64, "an integer in [0, 2^64)", 0, "RNG seed"),
    Key("output", "dir", str, None, "", "levydp-out", "output directory"),
    Key("sweep", "axis", str, None, "", None, "swept parameter", ("alpha", "d", "n", "beta", "sigma")),
    Key("sweep", "values", _parse_floats, None, "", None, "comma-separated values"),
]

KEYS: Dict[str, Key] = {k.dotted: k for k in SCHEMA}

COMMAND_SECTIONS = {
    "account": ("noise", "problem", "accounting", "output"),
    "simulate": ("noise", "problem", "simulate", "output"),
    "verify": ("verify", "output"),
    "sweep": ("noise", "problem", "accounting", "sweep", "output"),
}


def keys_for(command: str) -> List[Key]:
    sections = COMMAND_SECTIONS[command]
    return [k for k in SCHEMA if k.section in sections]


def read_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse INI text into ``{"section.key": value}``; rejects unknown keys."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep key case (e.g. accounting.R)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    out: Dict[str, Any] = {}
    for section in cp.sections():
        for name, raw in cp.items(section):
            dotted = f"{section}.{name}"
            key = KEYS.get(dotted)
            if key is None:
                raise ConfigError(f"{source}: unknown key {dotted!r}")
            out[dotted] = key.convert(raw)
    return out


def read_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc.strerror}") from None
    return read_config_text(text, source=path)


def resolve(command: str, file_values: Dict[str, Any], flag_values: Dict[str, Any]) -> Dict[str, Any]:
    """Merge defaults < file < flags over the sections used by ``command``."""
    resolved: Dict[str, Any] = {}
    for key in keys_for(command):
        value = key.default
        if key.dotted in file_values:
            value = file_values[key.dotted]
        if flag_values.get(key.dotted) is not None:
            value = key.convert(flag_values[key.dotted])
        resolved[key.dotted] = value
    return resolved


def require(cfg: Dict[str, Any], dotted: str, why: str = "") -> Any:
    value = cfg.get(dotted)
    if value is None:
        key = KEYS[dotted]
        extra = f" ({why})" if why else ""
        raise ConfigError(f"missing required setting {dotted} (flag {key.flag}){extra}")
    return value


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_ini(cfg: Dict[str, Any]) -> str:
    """Resolved configuration as INI text (unset keys omitted); re-readable by ``--config``."""
    sections: Dict[str, List[Tuple[str, Any]]] = {}
    for dotted, value in cfg.items():
        if value is None:
            continue
        section, name = dotted.split(".", 1)
        sections.setdefault(section, []).append((name, value))
    buf = io.StringIO()
    for section, items in sections.items():
        buf.write(f"[{section}]\n")
        for name, value in items:
            buf.write(f"{name} = {_format(value)}\n")
        buf.write("\n")
    return buf.getvalue()


def dump_manifest(items: Iterable[Tuple[str, Any]]) -> str:
    """Flat ``key = value`` lines."""
    return "".join(f"{k} = {_format(v)}\n" for k, v in items)
