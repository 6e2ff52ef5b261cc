"""Run configuration: a single JSON document validated with key-level errors."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid

TASKS = ("steady", "gap", "sweep", "wigner", "semiclassical", "fit", "extrapolate", "mapcheck")
THREADS_ENV = "KERRCRIT_THREADS"


@dataclass
class ModelBlock:
    delta: float
    u_tilde: float
    gamma: float = 1.0


@dataclass
class FGrid:
    start: float
    stop: float
    points: int

    def values(self) -> list[float]:
        return np.linspace(self.start, self.stop, self.points).tolist()


@dataclass
class SweepBlock:
    N: list
    F: FGrid


@dataclass
class CutoffBlock:
    mode: str = "auto"  # auto | per_n | fixed
    value: int | None = None
    tail_tol: float = 1e-10
    obs_tol: float = 1e-8
    hard_max: int = 400

    def spec(self):
        return self.value if self.mode == "fixed" else self.mode


@dataclass
class SolverBlock:
    dense_dim_threshold: int = 144
    krylov_k: int = 10
    tol: float = 1e-12
    max_restarts: int = 3


@dataclass
class FitBlock:
    N: list | None = None
    bracket: list = field(default_factory=lambda: [0.7, 1.2])
    offset_step: float = 0.005
    offset_points: int = 100
    power_n_min: float = 0.0


@dataclass
class WignerBlock:
    N: list = field(default_factory=lambda: [1.0])
    F: list = field(default_factory=lambda: [1.0])
    points: int = 201
    half_width: float | None = None
    rel_threshold: float = 0.05


@dataclass
class MapcheckBlock:
    hopping: float = 0.0
    dim: int = 1
    n_sites: int = 1
    detuning: float = 0.0
    f_tilde: float = 0.0
    coordination: int | None = None


@dataclass
class RunConfig:
    model: ModelBlock
    sweep: SweepBlock | None = None
    cutoff: CutoffBlock = field(default_factory=CutoffBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    tasks: list = field(default_factory=list)
    output: str = "kerrcrit_out"
    threads: int = 1
    seed: int = 0  # reserved; deterministic paths ignore it except --check sampling
    fit: FitBlock = field(default_factory=FitBlock)
    wigner: WignerBlock = field(default_factory=WignerBlock)
    mapcheck: MapcheckBlock | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# -- validation helpers ------------------------------------------------------

def _fail(key, msg):
    raise ConfigInvalid(f"{key}: {msg}")


def _num(d, key, path, default=..., positive=False, nonneg=False):
    if key not in d:
        if default is ...:
            _fail(f"{path}.{key}", "required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        _fail(f"{path}.{key}", f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        _fail(f"{path}.{key}", f"must be positive, got {v}")
    if nonneg and v < 0:
        _fail(f"{path}.{key}", f"must be non-negative, got {v}")
    return float(v)


def _int(d, key, path, default=..., minimum=None):
    if key not in d:
        if default is ...:
            _fail(f"{path}.{key}", "required")
        return default
    v = d[key]
    if v is None and default is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(f"{path}.{key}", f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        _fail(f"{path}.{key}", f"must be >= {minimum}, got {v}")
    return v


def _numlist(d, key, path, default=..., positive=False, nonneg=False):
    if key not in d:
        if default is ...:
            _fail(f"{path}.{key}", "required")
        return default
    v = d[key]
    if not isinstance(v, list) or not v:
        _fail(f"{path}.{key}", "expected a nonempty list")
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
            _fail(f"{path}.{key}[{i}]", f"expected a finite number, got {x!r}")
        if positive and x <= 0:
            _fail(f"{path}.{key}[{i}]", f"must be positive, got {x}")
        if nonneg and x < 0:
            _fail(f"{path}.{key}[{i}]", f"must be non-negative, got {x}")
    return [float(x) for x in v]


def _block(d, key, path=""):
    v = d.get(key, {})
    if not isinstance(v, dict):
        _fail(f"{path}{key}", "expected an object")
    return v


def _unknown(d, allowed, path):
    extra = sorted(set(d) - set(allowed))
    if extra:
        _fail(f"{path}.{extra[0]}" if path else extra[0], "unknown key")


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        _fail("<root>", "expected a JSON object")
    _unknown(raw, ("model", "sweep", "cutoff", "solver", "tasks", "output", "threads", "seed",
                   "fit", "wigner", "mapcheck"), "")
    m = _block(raw, "model")
    if "model" not in raw:
        _fail("model", "required")
    _unknown(m, ("delta", "u_tilde", "gamma"), "model")
    model = ModelBlock(_num(m, "delta", "model"), _num(m, "u_tilde", "model", nonneg=True),
                       _num(m, "gamma", "model", 1.0, positive=True))
    if model.gamma != 1.0:
        _fail("model.gamma", "all quantities are in units of gamma; gamma must be 1")

    tasks = raw.get("tasks", [])
    if not isinstance(tasks, list):
        _fail("tasks", "expected a list")
    for i, t in enumerate(tasks):
        if t not in TASKS:
            _fail(f"tasks[{i}]", f"unknown task {t!r}; choose from {', '.join(TASKS)}")

    sweep = None
    if "sweep" in raw:
        s = _block(raw, "sweep")
        _unknown(s, ("N", "F"), "sweep")
        fg = _block(s, "F", "sweep.")
        if "F" not in s:
            _fail("sweep.F", "required")
        _unknown(fg, ("start", "stop", "points"), "sweep.F")
        grid = FGrid(_num(fg, "start", "sweep.F", nonneg=True), _num(fg, "stop", "sweep.F", nonneg=True),
                     _int(fg, "points", "sweep.F", minimum=1))
        if grid.stop < grid.start:
            _fail("sweep.F.stop", "must be >= start")
        sweep = SweepBlock(_numlist(s, "N", "sweep", positive=True), grid)
    elif any(t in ("steady", "gap", "sweep") for t in tasks):
        _fail("sweep", "required by the steady/gap/sweep tasks")

    c = _block(raw, "cutoff")
    _unknown(c, ("mode", "value", "tail_tol", "obs_tol", "hard_max"), "cutoff")
    mode = c.get("mode", "auto")
    if mode not in ("auto", "per_n", "fixed"):
        _fail("cutoff.mode", f"expected auto, per_n or fixed, got {mode!r}")
    cutoff = CutoffBlock(mode, _int(c, "value", "cutoff", None, minimum=0),
                         _num(c, "tail_tol", "cutoff", 1e-10, positive=True),
                         _num(c, "obs_tol", "cutoff", 1e-8, positive=True),
                         _int(c, "hard_max", "cutoff", 400, minimum=2))
    if mode == "fixed" and cutoff.value is None:
        _fail("cutoff.value", "required when mode is fixed")
    for k in ("tail_tol", "obs_tol"):
        if getattr(cutoff, k) >= 1:
            _fail(f"cutoff.{k}", "must lie in (0, 1)")

    sv = _block(raw, "solver")
    _unknown(sv, ("dense_dim_threshold", "krylov_k", "tol", "max_restarts"), "solver")
    solver = SolverBlock(_int(sv, "dense_dim_threshold", "solver", 144, minimum=1),
                         _int(sv, "krylov_k", "solver", 10, minimum=1),
                         _num(sv, "tol", "solver", 1e-12, positive=True),
                         _int(sv, "max_restarts", "solver", 3, minimum=0))

    f = _block(raw, "fit")
    _unknown(f, ("N", "bracket", "offset_step", "offset_points", "power_n_min"), "fit")
    fit = FitBlock(_numlist(f, "N", "fit", None, positive=True),
                   _numlist(f, "bracket", "fit", [0.7, 1.2], nonneg=True),
                   _num(f, "offset_step", "fit", 0.005, positive=True),
                   _int(f, "offset_points", "fit", 100, minimum=6),
                   _num(f, "power_n_min", "fit", 0.0, nonneg=True))
    if len(fit.bracket) != 2 or fit.bracket[1] <= fit.bracket[0]:
        _fail("fit.bracket", "expected [lo, hi] with lo < hi")
    if "fit" in tasks and fit.N is None:
        if sweep is None:
            _fail("fit.N", "required when no sweep block is given")
        fit.N = list(sweep.N)

    w = _block(raw, "wigner")
    _unknown(w, ("N", "F", "points", "half_width", "rel_threshold"), "wigner")
    wig = WignerBlock(_numlist(w, "N", "wigner", [1.0], positive=True), _numlist(w, "F", "wigner", [1.0], nonneg=True),
                      _int(w, "points", "wigner", 201, minimum=3), _num(w, "half_width", "wigner", None, positive=True),
                      _num(w, "rel_threshold", "wigner", 0.05, positive=True))
    if not wig.rel_threshold < 1:
        _fail("wigner.rel_threshold", "must lie in (0, 1)")

    mapcheck = None
    if "mapcheck" in raw:
        mc = _block(raw, "mapcheck")
        _unknown(mc, ("hopping", "dim", "n_sites", "detuning", "f_tilde", "coordination"), "mapcheck")
        mapcheck = MapcheckBlock(_num(mc, "hopping", "mapcheck", 0.0), _int(mc, "dim", "mapcheck", 1, minimum=1),
                                 _int(mc, "n_sites", "mapcheck", 1, minimum=1), _num(mc, "detuning", "mapcheck", 0.0),
                                 _num(mc, "f_tilde", "mapcheck", 0.0, nonneg=True),
                                 _int(mc, "coordination", "mapcheck", None, minimum=1))
    elif "mapcheck" in tasks:
        _fail("mapcheck", "required by the mapcheck task")

    output = raw.get("output", "kerrcrit_out")
    if not isinstance(output, str) or not output:
        _fail("output", "expected a nonempty path string")
    threads = _int(raw, "threads", "<root>", default_threads(), minimum=1)
    seed = _int(raw, "seed", "<root>", 0)
    return RunConfig(model, sweep, cutoff, solver, list(tasks), output, threads, seed, fit, wig, mapcheck)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigInvalid(f"{path}: file not found")
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: invalid JSON ({exc})")
    return parse_config(raw)
