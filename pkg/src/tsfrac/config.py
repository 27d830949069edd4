"""Run configuration: a flat JSON object validated into a :class:`RunSpec`.

Keys: ``scale``, ``h_max``, ``alpha``, ``p``, ``beta``, ``rho``, ``lambda``,
``nonlinearity``, ``solver``, ``out``, ``svg`` (plus ``command``).
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import SchemaError
from .timescale import PRESETS, TimeScale, build_time_scale, parse_scale_text, preset

COMMANDS = ("verify", "solve", "bounds")
METHODS = ("auto", "minimize", "mountain_pass", "multistart")
DEFAULT_SEED = 20240917
DEFAULT_H_MAX = 1 / 128

_TOP_KEYS = {"command", "scale", "h_max", "alpha", "p", "beta", "rho", "lambda", "nonlinearity", "solver", "out", "svg"}
_SOLVER_KEYS = {"method", "tol_grad", "max_iter", "path_points", "seed", "starts"}


@dataclass
class NonlinearitySpec:
    type: str
    c: float | None = None
    mu: float | None = None
    r: float | None = None
    d: Any = None

    def to_json(self) -> dict:
        if self.type == "power":
            return {"type": "power", "c": self.c, "mu": self.mu}
        return {"type": "weighted_power", "r": self.r, "d": self.d}


@dataclass
class SolverSpec:
    method: str = "auto"
    tol_grad: float = 1e-6
    max_iter: int = 5000
    path_points: int = 21
    seed: int = DEFAULT_SEED
    starts: int = 20


@dataclass
class RunSpec:
    command: str = "solve"
    scale: Any = "unit-interval"
    h_max: float = DEFAULT_H_MAX
    alpha: float | None = None
    p: float | None = None
    beta: float = 1.0
    rho: float = 1.0
    lam: Any = 1.0
    nonlinearity: NonlinearitySpec | None = None
    solver: SolverSpec = field(default_factory=SolverSpec)
    out: str | None = None
    svg: str | None = None

    def time_scale(self, base: Path | None = None) -> TimeScale:
        return resolve_scale(self.scale, base)


def _num(obj: dict, key: str, where: str, *, required: bool = True, default=None) -> float | None:
    if key not in obj:
        if required:
            raise SchemaError(f"{where}{key}: missing required key")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}{key}: expected a number, got {v!r}")
    if not np.isfinite(v):
        raise SchemaError(f"{where}{key}: must be finite")
    return float(v)


def _int(obj: dict, key: str, where: str, default: int) -> int:
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}{key}: expected an integer, got {v!r}")
    return v


def _table_or_number(v: Any, where: str, *, positive: bool) -> Any:
    if isinstance(v, bool):
        raise SchemaError(f"{where}: expected a number or a node table")
    if isinstance(v, (int, float)):
        if positive and not v > 0:
            raise SchemaError(f"{where}: must be > 0, got {v}")
        if not positive and v < 0:
            raise SchemaError(f"{where}: must be >= 0, got {v}")
        return float(v)
    if isinstance(v, dict):
        extra = set(v) - {"nodes", "values"}
        if extra:
            raise SchemaError(f"{where}: unknown key {sorted(extra)[0]!r}")
        nodes, values = v.get("nodes"), v.get("values")
        if not isinstance(nodes, list) or not isinstance(values, list) or len(nodes) != len(values) or not nodes:
            raise SchemaError(f"{where}: node table needs equal-length nonempty 'nodes' and 'values' lists")
        vals = [float(x) for x in values]
        if positive and min(vals) <= 0:
            raise SchemaError(f"{where}: values must be > 0")
        if not positive and min(vals) < 0:
            raise SchemaError(f"{where}: values must be >= 0")
        if list(nodes) != sorted(nodes):
            raise SchemaError(f"{where}: nodes must be increasing")
        return {"nodes": [float(x) for x in nodes], "values": vals}
    raise SchemaError(f"{where}: expected a number or a node table")


def _scale(v: Any) -> Any:
    if isinstance(v, str):
        return v
    if isinstance(v, dict) and set(v) == {"segments"} and isinstance(v["segments"], list):
        try:
            segs = [[float(lo), float(hi)] for lo, hi in v["segments"]]
            build_time_scale(segs)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"scale: {exc}") from None
        return {"segments": segs}
    raise SchemaError("scale: expected a preset name, a file path or {'segments': [[lo, hi], ...]}")


def resolve_scale(v: Any, base: Path | None = None) -> TimeScale:
    if isinstance(v, dict):
        return build_time_scale(v["segments"])
    if v in PRESETS:
        return preset(v)
    path = Path(v)
    if base is not None and not path.is_absolute():
        path = base / path
    try:
        text = path.read_text()
    except OSError:
        raise SchemaError(f"scale: {v!r} is neither a preset ({', '.join(PRESETS)}) nor a readable file") from None
    if text.lstrip().startswith("{"):
        return build_time_scale(json.loads(text)["segments"])
    return parse_scale_text(text)


def parse_config(text: str, command: str | None = None) -> RunSpec:
    """Validate a JSON config into a :class:`RunSpec`; raises :class:`SchemaError`."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise SchemaError("config must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise SchemaError(f"unknown key {sorted(unknown)[0]!r}")
    cmd = command or obj.get("command", "solve")
    if cmd not in COMMANDS:
        raise SchemaError(f"command: expected one of {COMMANDS}, got {cmd!r}")
    needs_problem = cmd == "solve"
    spec = RunSpec(command=cmd)
    if "scale" in obj:
        spec.scale = _scale(obj["scale"])
    spec.h_max = _num(obj, "h_max", "", required=False, default=DEFAULT_H_MAX)
    if not spec.h_max > 0:
        raise SchemaError("h_max: must be > 0")
    spec.alpha = _num(obj, "alpha", "", required=cmd != "verify")
    spec.p = _num(obj, "p", "", required=cmd != "verify")
    if spec.alpha is not None and not 0 < spec.alpha <= 1:
        raise SchemaError(f"alpha: alpha out of (0,1], got {spec.alpha:g}")
    if spec.p is not None and not spec.p > 1:
        raise SchemaError(f"p: must exceed 1, got {spec.p:g}")
    if needs_problem and not spec.alpha * spec.p > 1:
        raise SchemaError(f"alpha: solve needs alpha > 1/p = {1 / spec.p:g}")
    spec.beta = _num(obj, "beta", "", required=False, default=1.0)
    spec.rho = _num(obj, "rho", "", required=False, default=1.0)
    if not spec.beta > 0:
        raise SchemaError("beta: must be > 0")
    if not spec.rho > 0:
        raise SchemaError("rho: must be > 0")
    if "lambda" in obj:
        spec.lam = _table_or_number(obj["lambda"], "lambda", positive=True)
    if "nonlinearity" in obj:
        spec.nonlinearity = _nonlinearity(obj["nonlinearity"], spec.p)
    elif needs_problem:
        raise SchemaError("nonlinearity: missing required key")
    if "solver" in obj:
        spec.solver = _solver(obj["solver"])
    for key in ("out", "svg"):
        if key in obj:
            if not isinstance(obj[key], str):
                raise SchemaError(f"{key}: expected a path string")
            setattr(spec, key, obj[key])
    return spec


def _nonlinearity(v: Any, p: float | None) -> NonlinearitySpec:
    if not isinstance(v, dict) or "type" not in v:
        raise SchemaError("nonlinearity: expected an object with a 'type'")
    kind = v["type"]
    if kind == "power":
        extra = set(v) - {"type", "c", "mu"}
        if extra:
            raise SchemaError(f"nonlinearity.{sorted(extra)[0]}: unknown key")
        c = _num(v, "c", "nonlinearity.", required=False, default=1.0)
        mu = _num(v, "mu", "nonlinearity.")
        if not c > 0:
            raise SchemaError("nonlinearity.c: must be > 0")
        if p is not None and not mu > p * p:
            raise SchemaError(f"nonlinearity.mu: ar_exponent must exceed p² = {p * p:g}")
        return NonlinearitySpec("power", c=c, mu=mu)
    if kind == "weighted_power":
        extra = set(v) - {"type", "r", "d"}
        if extra:
            raise SchemaError(f"nonlinearity.{sorted(extra)[0]}: unknown key")
        r = _num(v, "r", "nonlinearity.")
        if p is not None and not 1 < r < p * p:
            raise SchemaError(f"nonlinearity.r: must lie in (1, p² = {p * p:g})")
        d = _table_or_number(v.get("d", 1.0), "nonlinearity.d", positive=False)
        if d == 0 or (isinstance(d, dict) and max(d["values"]) == 0):
            raise SchemaError("nonlinearity.d: must not vanish identically")
        return NonlinearitySpec("weighted_power", r=r, d=d)
    raise SchemaError(f"nonlinearity.type: expected 'power' or 'weighted_power', got {kind!r}")


def _solver(v: Any) -> SolverSpec:
    if not isinstance(v, dict):
        raise SchemaError("solver: expected an object")
    extra = set(v) - _SOLVER_KEYS
    if extra:
        raise SchemaError(f"solver.{sorted(extra)[0]}: unknown key")
    s = SolverSpec()
    s.method = v.get("method", s.method)
    if s.method not in METHODS:
        raise SchemaError(f"solver.method: expected one of {METHODS}")
    s.tol_grad = _num(v, "tol_grad", "solver.", required=False, default=s.tol_grad)
    if not s.tol_grad > 0:
        raise SchemaError("solver.tol_grad: must be > 0")
    s.max_iter = _int(v, "max_iter", "solver.", s.max_iter)
    s.path_points = _int(v, "path_points", "solver.", s.path_points)
    s.seed = _int(v, "seed", "solver.", s.seed)
    s.starts = _int(v, "starts", "solver.", s.starts)
    if s.max_iter < 0:
        raise SchemaError("solver.max_iter: must be >= 0")
    if s.path_points < 3:
        raise SchemaError("solver.path_points: must be >= 3")
    if s.starts < 1:
        raise SchemaError("solver.starts: must be >= 1")
    return s


def emit(spec: RunSpec) -> str:
    """Serialize ``spec`` back to the JSON config format."""
    obj: dict[str, Any] = {"command": spec.command, "scale": spec.scale, "h_max": spec.h_max}
    for key in ("alpha", "p"):
        if getattr(spec, key) is not None:
            obj[key] = getattr(spec, key)
    obj.update({"beta": spec.beta, "rho": spec.rho, "lambda": spec.lam})
    if spec.nonlinearity is not None:
        obj["nonlinearity"] = spec.nonlinearity.to_json()
    obj["solver"] = asdict(spec.solver)
    if spec.out is not None:
        obj["out"] = spec.out
    if spec.svg is not None:
        obj["svg"] = spec.svg
    return json.dumps(obj, indent=2)


def load_config(path: str | os.PathLike, command: str | None = None) -> RunSpec:
    return parse_config(Path(path).read_text(), command)


def node_values(v: Any, nodes: np.ndarray) -> np.ndarray:
    """Realize a number or ``{nodes, values}`` table at mesh nodes (linear interpolation)."""
    if isinstance(v, dict):
        return np.interp(nodes, v["nodes"], v["values"])
    return np.full(len(nodes), float(v))
