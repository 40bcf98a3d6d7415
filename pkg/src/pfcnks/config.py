"""Run configuration: ``key = value`` text files with ``#`` comments."""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, fields

from .energy import Scheme
from .grid import BoundaryKind
from .operators import MobilityKind
from .scenarios import SCENARIO_DEFAULTS, Scenario
from .schwarz import SUBSOLVERS, Variant


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# ----------------------------------------------------------------------------
# value parsing

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
            and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval(node.args[0]))
    raise ValueError("not a numeric expression")


def _number(text: str) -> float:
    try:
        value = _eval(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError):
        raise ValueError(f"malformed number {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return float(value)


def _int(text: str) -> int:
    v = _number(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _bool(text: str) -> bool:
    key = text.strip().lower()
    if key in ("true", "yes", "on", "1"):
        return True
    if key in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _list(conv):
    def parse(text: str):
        parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(conv(p) for p in parts)
    return parse


def _opt(conv):
    def parse(text: str):
        return None if text.strip().lower() in ("none", "") else conv(text)
    return parse


def _str(text: str) -> str:
    return text.strip()


def _choice(*options):
    def parse(text: str):
        key = text.strip().lower()
        if key not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return key
    return parse


# ----------------------------------------------------------------------------


@dataclass
class RunConfig:
    ndim: int = 2
    lengths: tuple = ()
    counts: tuple = ()
    bc: str = "periodic"
    gamma: float | None = None
    mobility: str = "constant"
    scheme: str = "dvd"
    scenario: str = "random_quench"
    seed: int = 0
    phi_bar: float | None = None
    noise_amp: float = 0.07
    amplitude: float | None = None
    q_x: float | None = None
    q_y: float | None = None
    patch_size: float = 25.0
    radius: float = 5.0 * math.pi
    notch: tuple = (40, 20)
    liquid: float = 0.79
    sine_period: float = 32.0
    dt_min: float | None = None
    dt_max: float | None = None
    eta: float | None = None
    t_end: float = 1.0
    max_steps: int | None = None
    clip_to_end: bool = False
    eps_r: float = 1e-8
    eps_a: float = 1e-10
    xi_r: float = 1e-3
    xi_a: float = 1e-11
    max_newton: int = 50
    restart: int = 30
    maxit: int = 10000
    jacobian: str = "exact"
    precond: str = "lras"
    overlap: int = 1
    subsolver: str = "ilu0"
    reuse: bool = True
    np: int = 1
    output_dir: str = "output"
    snapshot_every: int = 0

    def __post_init__(self):
        sc = Scenario.parse(self.scenario)
        for key, value in SCENARIO_DEFAULTS[sc].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")

    def scenario_kind(self) -> Scenario:
        return Scenario.parse(self.scenario)


_PARSERS = {
    "ndim": _int, "lengths": _list(_number), "counts": _list(_int),
    "bc": lambda t: BoundaryKind.parse(t).value,
    "gamma": _number, "mobility": lambda t: MobilityKind.parse(t).value,
    "scheme": lambda t: Scheme(t.strip().lower()).value,
    "scenario": lambda t: Scenario.parse(t).value,
    "seed": _int, "phi_bar": _opt(_number), "noise_amp": _number, "amplitude": _opt(_number),
    "q_x": _opt(_number), "q_y": _opt(_number), "patch_size": _number, "radius": _number,
    "notch": _list(_int), "liquid": _number, "sine_period": _number,
    "dt_min": _number, "dt_max": _number, "eta": _number, "t_end": _number,
    "max_steps": _opt(_int), "clip_to_end": _bool,
    "eps_r": _number, "eps_a": _number, "xi_r": _number, "xi_a": _number,
    "max_newton": _int, "restart": _int, "maxit": _int,
    "jacobian": _choice("exact", "frozen"),
    "precond": lambda t: Variant.parse(t).value,
    "overlap": _int, "subsolver": _choice(*SUBSOLVERS), "reuse": _bool, "np": _int,
    "output_dir": _str, "snapshot_every": _int,
}
REQUIRED = ("ndim", "lengths", "counts", "scenario")
assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def _check(cfg: dict, lines: dict):
    def fail(key, msg):
        raise ConfigError(msg, lines.get(key))

    nd = cfg["ndim"]
    if nd not in (1, 2, 3):
        fail("ndim", f"ndim must be 1, 2 or 3, got {nd}")
    for key in ("lengths", "counts"):
        if len(cfg[key]) != nd:
            fail(key, f"{key} needs {nd} entries, got {len(cfg[key])}")
    if any(n < 8 for n in cfg["counts"]):
        fail("counts", "cell counts must be >= 8")
    if any(v <= 0 for v in cfg["lengths"]):
        fail("lengths", "lengths must be > 0")
    positive = ("gamma", "dt_min", "dt_max", "restart", "maxit", "np")
    for key in positive:
        if key in cfg and cfg[key] is not None and cfg[key] <= 0:
            fail(key, f"{key} must be > 0, got {cfg[key]}")
    for key in ("eta", "t_end", "eps_r", "eps_a", "xi_r", "xi_a", "noise_amp", "snapshot_every",
                "max_newton"):
        if key in cfg and cfg[key] < 0:
            fail(key, f"{key} must be >= 0, got {cfg[key]}")
    if cfg.get("dt_min") is not None and cfg.get("dt_max") is not None and cfg["dt_min"] > cfg["dt_max"]:
        fail("dt_max", "dt_max must be >= dt_min")
    if "overlap" in cfg and cfg["overlap"] not in (0, 1, 2):
        fail("overlap", f"overlap must be 0, 1 or 2, got {cfg['overlap']}")
    if "notch" in cfg and len(cfg["notch"]) != 2:
        fail("notch", "notch needs two cell counts")


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        lines[key] = lineno
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    _check(values, lines)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def format_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(cfg))
