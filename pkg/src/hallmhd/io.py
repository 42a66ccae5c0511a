"""Run configuration, binary snapshots, CSV time series and JSON reports.

Config files are flat ``key = value`` lines with dotted section names
(``model.alpha = 0.6``); ``#`` starts a comment.  Every key is listed in
:data:`KEYS` together with its default and a one-line description.
"""
from __future__ import annotations

import csv
import json
import math
import struct
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .evolve import SYSTEMS, ModelSpec, SimState, StepperConfig
from .fields import VectorField, random_divfree
from .spectral import Grid

__all__ = [
    "ConfigError",
    "KEYS",
    "RunConfig",
    "parse_config",
    "format_config",
    "load_config",
    "Snapshot",
    "write_snapshot",
    "read_snapshot",
    "CsvSink",
    "write_json",
    "initial_state",
    "ANALYTIC_FIELDS",
]

MAGIC = b"HMHD"
FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration text or values."""


# ---------------------------------------------------------------- sections

@dataclass(frozen=True)
class GridConfig:
    dim: int = 2
    n: int = 128
    band: int | None = None

    def build(self) -> Grid:
        return Grid.square(self.dim, self.n, self.band)


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "random"
    path: str | None = None
    name: str | None = None
    band: int = 8
    spectrum_slope: float = 2.0
    h3: float | None = 1.0
    velocity_seed_offset: int = 1


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "run"
    snapshot_stride: int = 1
    formats: tuple[str, ...] = ("csv", "snapshot")


@dataclass(frozen=True)
class ScalingConfig:
    beta: float = 1.5
    lam: int = 2
    t_end: float = 0.1
    dt: float = 1e-4
    tol: float = 1e-6
    checkpoints: int = 10
    n: int = 64
    band: int = 4
    h3: float = 1.0
    seed: int = 7


@dataclass(frozen=True)
class VerifyConfig:
    dims: tuple[int, ...] = (2, 3)
    seeds: int = 10
    seeds_3d: int = 5
    n: int = 64
    band: int = 10
    n_3d: int = 32
    band_3d: int = 5
    ratio_samples: int = 100
    report: str = "verify_report.json"


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs; see :data:`KEYS` for the text form."""

    model: ModelSpec = field(default_factory=ModelSpec)
    grid: GridConfig = field(default_factory=GridConfig)
    seed: int = 0
    initial: InitialConfig = field(default_factory=InitialConfig)
    stepper: StepperConfig = field(default_factory=lambda: StepperConfig(dt=1e-3))
    output: OutputConfig = field(default_factory=OutputConfig)
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)


# ---------------------------------------------------------------- value codecs

def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(s: str) -> Any:
        return None if s.strip().lower() in ("none", "") else conv(s)
    return parse


def _tuple(conv: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(s: str) -> tuple:
        return tuple(conv(p.strip()) for p in s.split(",") if p.strip())
    return parse


def _choice(options: Iterable[str]) -> Callable[[str], str]:
    options = tuple(options)

    def parse(s: str) -> str:
        v = s.strip()
        if v not in options:
            raise ValueError(f"{v!r} not one of {', '.join(options)}")
        return v
    return parse


def _fmt(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[str], Any]
    help: str


KEYS: dict[str, Key] = {k.name: k for k in [
    Key("model.system", _choice(SYSTEMS), "evolved system: " + ", ".join(SYSTEMS)),
    Key("model.alpha", float, "fractional exponent alpha (vertical / horizontal-velocity diffusion)"),
    Key("model.beta", float, "exponent beta for electron_general, diffusion (-Delta)^beta"),
    Key("model.eps", float, "Hall coefficient"),
    Key("model.nu", float, "viscosity coefficient"),
    Key("model.eta", float, "resistivity coefficient"),
    Key("model.nonlinear", _bool, "false drops all nonlinear terms (pure diffusion)"),
    Key("grid.dim", int, "grid dimension; time stepping needs 2"),
    Key("grid.n", int, "points per axis (even)"),
    Key("grid.band", _optional(int), "retained band K per axis; none means n/2 - 1"),
    Key("seed", int, "seed of the Philox stream for random initial data"),
    Key("initial.kind", _choice(("random", "snapshot", "analytic")), "initial data source"),
    Key("initial.path", _optional(str), "snapshot file when initial.kind = snapshot"),
    Key("initial.name", _optional(str), "analytic field name when initial.kind = analytic"),
    Key("initial.band", int, "band of random initial data"),
    Key("initial.spectrum_slope", float, "random coefficients scale like |k|^-slope"),
    Key("initial.h3", _optional(float), "rescale b (and u) to this homogeneous H3 norm; none keeps it"),
    Key("initial.velocity_seed_offset", int, "random u uses seed + offset"),
    Key("stepper.dt", _optional(float), "fixed time step; none selects the adaptive CFL step"),
    Key("stepper.cfl", float, "CFL number for the adaptive step"),
    Key("stepper.scheme", _choice(("if_rk4", "if_rk2")), "integrating-factor Runge-Kutta scheme"),
    Key("stepper.t_end", float, "final time"),
    Key("stepper.diagnostics_stride", int, "steps between diagnostics rows"),
    Key("stepper.h3_ceiling", float, "H3 norm of b treated as blow-up"),
    Key("stepper.dt_max", float, "upper cap for the adaptive step"),
    Key("output.directory", str, "directory for CSV, snapshots and reports"),
    Key("output.snapshot_stride", int, "diagnostics rows between snapshots"),
    Key("output.formats", _tuple(_choice(("csv", "snapshot"))), "comma list from csv, snapshot"),
    Key("scaling.beta", float, "exponent beta of the scaling test"),
    Key("scaling.lam", int, "integer scaling factor lambda >= 2"),
    Key("scaling.t_end", float, "final time of the unscaled trajectory"),
    Key("scaling.dt", float, "step used by both trajectories"),
    Key("scaling.tol", float, "largest accepted relative mismatch"),
    Key("scaling.checkpoints", int, "number of comparison times"),
    Key("scaling.n", int, "points per axis for the scaling test"),
    Key("scaling.band", int, "band of the initial data, at most n / (4 lam)"),
    Key("scaling.h3", float, "H3 norm of the initial data"),
    Key("scaling.seed", int, "seed of the initial data"),
    Key("verify.dims", _tuple(int), "grid dimensions checked by verify"),
    Key("verify.seeds", int, "number of 2-D random fields"),
    Key("verify.seeds_3d", int, "number of 3-D random fields"),
    Key("verify.n", int, "2-D points per axis"),
    Key("verify.band", int, "2-D band of random fields"),
    Key("verify.n_3d", int, "3-D points per axis"),
    Key("verify.band_3d", int, "3-D band of random fields"),
    Key("verify.ratio_samples", int, "random fields per bound-functional ratio study"),
    Key("verify.report", str, "JSON report path (relative paths go under output.directory)"),
]}


def _get(cfg: RunConfig, name: str) -> Any:
    obj: Any = cfg
    for part in name.split("."):
        obj = getattr(obj, part)
    return obj


def _set(cfg: RunConfig, values: dict[str, Any]) -> RunConfig:
    sections: dict[str, dict[str, Any]] = {}
    top: dict[str, Any] = {}
    for name, v in values.items():
        if "." in name:
            sec, attr = name.split(".", 1)
            sections.setdefault(sec, {})[attr] = v
        else:
            top[name] = v
    for sec, kv in sections.items():
        top[sec] = replace(getattr(cfg, sec), **kv)
    return replace(cfg, **top)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse config text; unknown keys and bad values raise :class:`ConfigError`."""
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        name, value = (p.strip() for p in line.split("=", 1))
        values[name] = value
    return apply_overrides(base or RunConfig(), values)


def apply_overrides(cfg: RunConfig, values: dict[str, str]) -> RunConfig:
    parsed = {}
    for name, value in values.items():
        key = KEYS.get(name)
        if key is None:
            raise ConfigError(f"unknown config key {name!r}")
        try:
            parsed[name] = key.parse(value)
        except ValueError as err:
            raise ConfigError(f"bad value for {name}: {err}") from None
    try:
        return _validate(_set(cfg, parsed))
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from None


def _validate(cfg: RunConfig) -> RunConfig:
    g, ini = cfg.grid, cfg.initial
    g.build()
    if ini.kind == "snapshot" and not ini.path:
        raise ConfigError("initial.kind = snapshot needs initial.path")
    if ini.kind == "analytic" and ini.name not in ANALYTIC_FIELDS:
        raise ConfigError(f"initial.name must be one of {', '.join(ANALYTIC_FIELDS)}")
    if ini.kind == "random" and not 1 <= ini.band <= (g.band if g.band is not None else g.n // 2 - 1):
        raise ConfigError(f"initial.band {ini.band} outside the grid band")
    if cfg.output.snapshot_stride < 1:
        raise ConfigError("output.snapshot_stride must be >= 1")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Every key, one per line; ``parse_config(format_config(c)) == c``."""
    return "".join(f"{name} = {_fmt(_get(cfg, name))}\n" for name in KEYS)


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def keys_help() -> str:
    width = max(len(k) for k in KEYS)
    defaults = RunConfig()
    return "\n".join(f"  {k:<{width}}  {v.help} [default: {_fmt(_get(defaults, k))}]"
                     for k, v in KEYS.items())


# ---------------------------------------------------------------- snapshots

@dataclass(frozen=True)
class Snapshot:
    """A saved state plus what is needed to continue its run exactly."""

    state: SimState
    model: ModelSpec
    dissipated: float = 0.0
    energy0: float = 0.0


def write_snapshot(path: str | Path, snap: Snapshot) -> None:
    """Little-endian binary snapshot.

    Layout: ``b"HMHD"``, u32 version, u32 dim, u32 size per axis, u32 tag
    length and UTF-8 model tag, f64 alpha, beta, eps, f64 time; then u32 band
    per axis, f64 period per axis, u64 step, f64 last dt, f64 dissipated,
    f64 initial energy, f64 nu, f64 eta, u8 nonlinear, u32 component count;
    then each component's coefficients in C (axis-major) order as f64
    ``(re, im)`` pairs.
    """
    st, m = snap.state, snap.model
    g = st.grid
    tag = m.tag.encode()
    y = np.ascontiguousarray(st.stacked(), dtype="<c16")
    parts = [
        MAGIC,
        struct.pack("<II", FORMAT_VERSION, g.dim),
        struct.pack(f"<{g.dim}I", *g.n),
        struct.pack("<I", len(tag)), tag,
        struct.pack("<4d", m.alpha, m.beta, m.eps, st.t),
        struct.pack(f"<{g.dim}I", *g.band_limit),
        struct.pack(f"<{g.dim}d", *g.length),
        struct.pack("<Q5dB", st.step_count, st.last_dt, snap.dissipated, snap.energy0,
                    m.nu, m.eta, int(m.nonlinear)),
        struct.pack("<I", y.shape[0]),
        y.tobytes(),
    ]
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(b"".join(parts))
    tmp.replace(path)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str) -> tuple:
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise ValueError("truncated snapshot")
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out

    def raw(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise ValueError("truncated snapshot")
        out = self.data[self.pos:self.pos + size]
        self.pos += size
        return out


def read_snapshot(path: str | Path) -> Snapshot:
    r = _Reader(Path(path).read_bytes())
    if r.raw(4) != MAGIC:
        raise ValueError(f"{path}: not a snapshot (bad magic)")
    version, dim = r.take("<II")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    n = r.take(f"<{dim}I")
    (tlen,) = r.take("<I")
    tag = r.raw(tlen).decode()
    alpha, beta, eps, t = r.take("<4d")
    band = r.take(f"<{dim}I")
    length = r.take(f"<{dim}d")
    step, last_dt, dissipated, energy0, nu, eta, nonlinear = r.take("<Q5dB")
    (ncomp,) = r.take("<I")
    grid = Grid(dim, n, length, band)
    count = ncomp * int(np.prod(n))
    y = np.frombuffer(r.raw(16 * count), dtype="<c16").astype(complex).reshape((ncomp,) + tuple(n))
    if r.pos != len(r.data):
        raise ValueError(f"{path}: trailing bytes after coefficients")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = ModelSpec(tag, alpha, beta, eps, nu, eta, bool(nonlinear))
    state = SimState.from_stacked(grid, y, t, step, last_dt)
    return Snapshot(state, model, dissipated, energy0)


# ---------------------------------------------------------------- time series and reports

class CsvSink:
    """Appends one row per record and flushes, so partial runs stay readable."""

    def __init__(self, path: str | Path, append: bool = False):
        self.path = Path(path)
        exists = append and self.path.exists() and self.path.stat().st_size > 0
        self._fh = open(self.path, "a" if append else "w", newline="")
        self._writer = csv.DictWriter(self._fh, fieldnames=list(CSV_COLUMNS))
        if not exists:
            self._writer.writeheader()
            self._fh.flush()

    def __call__(self, rec: DiagnosticsRecord) -> None:
        self._writer.writerow({k: str(int(v)) if isinstance(v, (int, np.integer)) else repr(float(v))
                               for k, v in rec.flat().items()})
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "CsvSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: str | Path, obj: Any) -> None:
    """JSON with non-finite floats written as strings (``"inf"``, ``"nan"``)."""
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2) + "\n")


# ---------------------------------------------------------------- initial data

def _taylor_green(grid: Grid) -> tuple[VectorField, VectorField]:
    x1, x2 = (np.broadcast_to(x, grid.shape) for x in grid.coordinates()[:2])
    b = VectorField.from_physical(grid, np.stack([np.sin(x1) * np.cos(x2), -np.cos(x1) * np.sin(x2),
                                                  np.cos(x1 + x2)]), "magnetic")
    u = VectorField.from_physical(grid, np.stack([np.cos(x1) * np.sin(x2), -np.sin(x1) * np.cos(x2),
                                                  np.sin(x1)]), "velocity")
    return b, u


def _orszag_tang(grid: Grid) -> tuple[VectorField, VectorField]:
    x1, x2 = (np.broadcast_to(x, grid.shape) for x in grid.coordinates()[:2])
    zero = np.zeros(grid.shape)
    u = VectorField.from_physical(grid, np.stack([-np.sin(x2), np.sin(x1), zero]), "velocity")
    b = VectorField.from_physical(grid, np.stack([-np.sin(x2), np.sin(2 * x1), np.cos(x1) * np.cos(x2)]),
                                  "magnetic")
    return b, u


def _shear(grid: Grid) -> tuple[VectorField, VectorField]:
    x1, x2 = (np.broadcast_to(x, grid.shape) for x in grid.coordinates()[:2])
    zero = np.zeros(grid.shape)
    b = VectorField.from_physical(grid, np.stack([np.sin(x2), np.sin(x1), np.cos(2 * x1 + x2)]), "magnetic")
    u = VectorField.from_physical(grid, np.stack([np.cos(2 * x2), zero, np.sin(x1)]), "velocity")
    return b, u


ANALYTIC_FIELDS: dict[str, Callable[[Grid], tuple[VectorField, VectorField]]] = {
    "taylor_green": _taylor_green,
    "orszag_tang": _orszag_tang,
    "shear": _shear,
}


def _normalize(f: VectorField, h3: float | None) -> VectorField:
    if h3 is None:
        return f
    norm = f.hs(3.0)
    if norm == 0.0:
        raise ConfigError("initial field has zero H3 norm")
    return VectorField(f.grid, f.coeffs * (h3 / norm), f.kind, True)


def initial_state(cfg: RunConfig) -> tuple[SimState, float, float | None]:
    """Initial state plus ``(dissipated0, energy0)`` for the energy ledger.

    A snapshot restores its time, step count and ledger totals; other kinds
    start at ``t = 0`` with an empty ledger (``energy0 = None``).
    """
    ini = cfg.initial
    if ini.kind == "snapshot":
        snap = read_snapshot(ini.path)
        if snap.model.has_velocity != cfg.model.has_velocity:
            raise ConfigError(f"snapshot holds a {snap.model.system} state, config asks for {cfg.model.system}")
        return snap.state, snap.dissipated, snap.energy0
    grid = cfg.grid.build()
    if ini.kind == "analytic":
        b, u = ANALYTIC_FIELDS[ini.name](grid)
    else:
        b = random_divfree(grid, cfg.seed, ini.band, ini.spectrum_slope)
        u = random_divfree(grid, cfg.seed + ini.velocity_seed_offset, ini.band, ini.spectrum_slope, "velocity")
    b = _normalize(b, ini.h3)
    u = _normalize(u, ini.h3) if cfg.model.has_velocity else None
    return SimState(0.0, b, u), 0.0, None
