"""Integrating-factor Runge-Kutta time stepping for the 2.5-D model systems.

Diffusion acts diagonally in Fourier space with a per-component exponent
``p_c``: coefficient ``c(k)`` of component ``c`` decays like
``exp(-|k|^{p_c} t)``.  The exponential is applied exactly and only the
nonlinear terms go through the Runge-Kutta stages.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Optional

import numpy as np

from .fields import VectorField, curl_coeffs, ik3, leray_coeffs, vec_to_physical
from .spectral import Grid, RealPadder, padded_size, symbol

__all__ = [
    "SYSTEMS",
    "ModelSpec",
    "SimState",
    "StepperConfig",
    "BlowUpError",
    "rhs",
    "step",
    "simulate",
    "cfl_dt",
    "log_mean",
    "Integrator",
    "RunResult",
    "run_to",
]

System = Literal["electron_aniso", "electron_general", "hallmhd_mixed", "hallmhd_classical"]
SYSTEMS = ("electron_aniso", "electron_general", "hallmhd_mixed", "hallmhd_classical")


@dataclass(frozen=True)
class ModelSpec:
    """Which system is evolved and its diffusion exponents.

    Exponents are for ``Lambda^p`` (``|k|^p``); ``(-Delta)^s`` is ``p = 2 s``.

    ========================  =====================  ==================
    system                    b exponents            u exponents
    ========================  =====================  ==================
    ``electron_aniso``        (3, 3, 2 alpha)        none
    ``electron_general``      (2 beta,) * 3          none
    ``hallmhd_mixed``         (3, 3, 2 alpha)        (2 alpha, 2 alpha, 2)
    ``hallmhd_classical``     (2, 2, 2)              (2, 2, 2)
    ========================  =====================  ==================
    """

    system: System = "electron_aniso"
    alpha: float = 0.6
    beta: float = 1.5
    eps: float = 1.0
    nu: float = 1.0
    eta: float = 1.0
    nonlinear: bool = True

    def __post_init__(self) -> None:
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}; expected one of {SYSTEMS}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("diffusion exponents must be non-negative")
        if self.system in ("electron_aniso", "hallmhd_mixed") and not 0.5 < self.alpha < 1.0:
            warnings.warn(f"alpha = {self.alpha} lies outside (1/2, 1), the range covered by the "
                          "global regularity result for this system", RuntimeWarning, stacklevel=2)

    @property
    def has_velocity(self) -> bool:
        return self.system.startswith("hallmhd")

    @property
    def in_theorem_range(self) -> bool:
        if self.system in ("electron_aniso", "hallmhd_mixed"):
            return 0.5 < self.alpha < 1.0
        return True

    @property
    def b_exponents(self) -> tuple[float, float, float]:
        if self.system in ("electron_aniso", "hallmhd_mixed"):
            return (3.0, 3.0, 2.0 * self.alpha)
        if self.system == "electron_general":
            return (2.0 * self.beta,) * 3
        return (2.0, 2.0, 2.0)

    @property
    def u_exponents(self) -> tuple[float, float, float] | None:
        if self.system == "hallmhd_mixed":
            return (2.0 * self.alpha, 2.0 * self.alpha, 2.0)
        if self.system == "hallmhd_classical":
            return (2.0, 2.0, 2.0)
        return None

    def decay_rates(self, grid: Grid) -> np.ndarray:
        """``(ncomp, *n)`` array of ``coef * |k|^p`` for b then u components."""
        rates = [self.eta * symbol(grid, p) for p in self.b_exponents]
        if self.has_velocity:
            rates += [self.nu * symbol(grid, p) for p in self.u_exponents]
        return np.stack(rates)

    @property
    def tag(self) -> str:
        return self.system


@dataclass(frozen=True)
class SimState:
    t: float
    b: VectorField
    u: Optional[VectorField] = None
    step_count: int = 0
    last_dt: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.b.grid

    def stacked(self) -> np.ndarray:
        if self.u is None:
            return np.array(self.b.coeffs)
        return np.concatenate([self.b.coeffs, self.u.coeffs])

    @classmethod
    def from_stacked(cls, grid: Grid, y: np.ndarray, t: float, step_count: int, last_dt: float) -> "SimState":
        b = VectorField(grid, y[:3], "magnetic", True)
        u = VectorField(grid, y[3:6], "velocity", True) if y.shape[0] == 6 else None
        return cls(t, b, u, step_count, last_dt)


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping parameters; ``dt=None`` selects the adaptive step."""

    dt: Optional[float] = None
    cfl: float = 0.25
    scheme: Literal["if_rk4", "if_rk2"] = "if_rk4"
    t_end: float = 1.0
    diagnostics_stride: int = 10
    h3_ceiling: float = 1e6
    dt_max: float = 1e-2

    def __post_init__(self) -> None:
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.scheme not in ("if_rk4", "if_rk2"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.diagnostics_stride < 1:
            raise ValueError("diagnostics_stride must be >= 1")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")


class BlowUpError(RuntimeError):
    """Non-finite coefficients or an H3 norm above the ceiling."""

    def __init__(self, t: float, reason: str, last_good: "SimState | None" = None):
        super().__init__(f"blow-up at t = {t:.6g}: {reason}")
        self.t = t
        self.reason = reason
        self.last_good = last_good


class _Kernel:
    """Nonlinear right side on stacked coefficient arrays, with cached padding."""

    def __init__(self, spec: ModelSpec, grid: Grid):
        if grid.dim != 2:
            raise ValueError("time stepping is implemented for x3-independent fields on 2-D grids")
        self.spec = spec
        self.grid = grid
        self.shape = tuple(padded_size(2 * k, k) for k in grid.band_limit)
        self.ik = ik3(grid)
        self.pad = RealPadder(grid, self.shape)

    def phys(self, c: np.ndarray) -> np.ndarray:
        return self.pad.to_physical(c)

    def back(self, x: np.ndarray) -> np.ndarray:
        return self.pad.from_physical(x)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        spec = self.spec
        out = np.zeros_like(y)
        if not spec.nonlinear:
            return out
        b = y[:3]
        j = curl_coeffs(b, self.grid)
        if not spec.has_velocity:
            bp, jp = self.phys(np.stack([b, j]))
            out[:3] = -spec.eps * curl_coeffs(self.back(_cross(jp, bp)), self.grid)
            return out
        u = y[3:]
        d1, d2 = self.ik[0], self.ik[1]
        # one batched transform: b, j, u and their horizontal gradients
        bp, jp, up, gu1, gu2, gb1, gb2 = self.phys(
            np.stack([b, j, u, d1 * u, d2 * u, d1 * b, d2 * b]))
        # (a . grad) f with a in {u, b}; x3-derivatives vanish.
        mom_p = bp[0] * gb1 + bp[1] * gb2 - up[0] * gu1 - up[1] * gu2
        ind_p = bp[0] * gu1 + bp[1] * gu2 - up[0] * gb1 - up[1] * gb2
        mom, ind, jxb = self.back(np.stack([mom_p, ind_p, _cross(jp, bp)]))
        out[:3] = ind - spec.eps * curl_coeffs(jxb, self.grid)
        out[3:] = leray_coeffs(mom, self.grid)
        # both advective sides are divergences of tensors, so their means vanish
        out[:, 0, 0] = 0.0
        return out


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def rhs(spec: ModelSpec, state: SimState) -> tuple[VectorField, Optional[VectorField]]:
    """Nonlinear part of the time derivative (diffusion excluded)."""
    if spec.has_velocity != (state.u is not None):
        raise ValueError(f"state does not match system {spec.system!r}")
    y = _Kernel(spec, state.grid)(state.stacked())
    db = VectorField(state.grid, y[:3], "generic")
    du = VectorField(state.grid, y[3:], "generic") if spec.has_velocity else None
    return db, du


def _project(y: np.ndarray, grid: Grid) -> np.ndarray:
    y = y.copy()
    y[:3] = leray_coeffs(y[:3], grid)
    if y.shape[0] == 6:
        y[3:] = leray_coeffs(y[3:], grid)
    return y


class Integrator:
    """Reusable stepper for one ``(spec, grid)`` pair."""

    def __init__(self, spec: ModelSpec, grid: Grid, scheme: str = "if_rk4"):
        self.spec = spec
        self.grid = grid
        self.scheme = scheme
        self.kernel = _Kernel(spec, grid)
        self.rates = spec.decay_rates(grid)
        self._dt = None

    def _factors(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        if self._dt != dt:
            self._E = np.exp(-self.rates * dt)
            self._E2 = np.exp(-self.rates * (0.5 * dt))
            self._dt = dt
        return self._E, self._E2

    def advance(self, y: np.ndarray, dt: float) -> np.ndarray:
        E, E2 = self._factors(dt)
        N = self.kernel
        if self.scheme == "if_rk4":
            k1 = N(y)
            k2 = N(E2 * (y + 0.5 * dt * k1))
            k3 = N(E2 * y + 0.5 * dt * k2)
            k4 = N(E * y + dt * (E2 * k3))
            y_new = E * (y + dt / 6.0 * k1) + dt / 6.0 * (E2 * (2.0 * k2 + 2.0 * k3) + k4)
        else:
            k1 = N(y)
            k2 = N(E * (y + dt * k1))
            y_new = E * (y + 0.5 * dt * k1) + 0.5 * dt * k2
        return _project(y_new, self.grid)

    def dissipated(self, y0: np.ndarray, y1: np.ndarray, dt: float) -> float:
        """Energy removed by diffusion over one step, ``int sum rate |c|^2 dt``.

        Each mode's ``|c|^2`` is integrated with the logarithmic mean of its
        end values, exact when the mode decays exponentially.
        """
        a = np.abs(y0) ** 2
        b = np.abs(y1) ** 2
        return dt * self.grid.volume * float(np.sum(self.rates * log_mean(a, b)))


def log_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise ``(a - b) / ln(a / b)``; ``(a + b)/2`` limit near ``a = b``, 0 if either is 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros(np.broadcast(a, b).shape)
    pos = (a > 0) & (b > 0)
    ap, bp = a[pos], b[pos]
    r = bp / ap
    x = r - 1.0
    small = np.abs(x) < 1e-4
    val = np.empty_like(ap)
    # series of x / ln(1 + x) about x = 0
    xs = x[small]
    val[small] = ap[small] * (1.0 + xs / 2.0 - xs * xs / 12.0 + xs ** 3 / 24.0)
    big = ~small
    val[big] = ap[big] * x[big] / np.log(r[big])
    out[pos] = val
    return out


def cfl_dt(state: SimState, cfg: StepperConfig) -> float:
    """Heuristic stable step ``cfl / (max|u| K + max|grad b| K^2)``, capped by ``dt_max``."""
    grid = state.grid
    K = max(grid.band_limit)
    ik = ik3(grid)
    gb = vec_to_physical(np.concatenate([ik[0] * state.b.coeffs, ik[1] * state.b.coeffs]), grid)
    speed = float(np.max(np.sqrt(np.sum(gb * gb, axis=0)))) * K * K
    if state.u is not None:
        up = state.u.physical()
        speed += float(np.max(np.sqrt(np.sum(up * up, axis=0)))) * K
    if speed == 0.0:
        return cfg.dt_max
    return min(cfg.cfl / speed, cfg.dt_max)


def _h3(y: np.ndarray, grid: Grid) -> float:
    return math.sqrt(grid.volume * float(np.sum(grid.k2 ** 3 * np.abs(y[:3]) ** 2)))


def step(spec: ModelSpec, state: SimState, cfg: StepperConfig, dt: float | None = None,
         integrator: Integrator | None = None) -> SimState:
    """One integrating-factor RK step followed by re-projection."""
    integ = integrator or Integrator(spec, state.grid, cfg.scheme)
    dt = dt if dt is not None else (cfg.dt if cfg.dt is not None else cfl_dt(state, cfg))
    y = integ.advance(state.stacked(), dt)
    t = state.t + dt
    _check_alive(y, state.grid, t, cfg, state)
    return SimState.from_stacked(state.grid, y, t, state.step_count + 1, dt)


def _check_alive(y: np.ndarray, grid: Grid, t: float, cfg: StepperConfig, last_good: SimState) -> None:
    if not np.all(np.isfinite(y)):
        raise BlowUpError(t, "non-finite coefficients", last_good)
    h3 = _h3(y, grid)
    if h3 > cfg.h3_ceiling:
        raise BlowUpError(t, f"H3 norm {h3:.3e} above ceiling {cfg.h3_ceiling:.3e}", last_good)


Sink = Callable[["object"], None]


@dataclass
class RunResult:
    state: SimState
    records: list = field(default_factory=list)
    blowup: BlowUpError | None = None
    dissipated: float = 0.0
    energy0: float = 0.0


def simulate(spec: ModelSpec, initial: SimState, cfg: StepperConfig, sink: Sink | None = None,
             dissipated0: float = 0.0, energy0: float | None = None,
             snapshot_hook: Callable[[SimState, float, float], None] | None = None) -> RunResult:
    """Advance to ``cfg.t_end`` emitting diagnostics every ``diagnostics_stride`` steps.

    The run never raises on blow-up; the error and the last good state are
    returned in :class:`RunResult` so partial output stays usable.
    ``dissipated0``/``energy0`` continue the energy ledger of a resumed run.
    ``snapshot_hook(state, dissipated, energy0)`` is called with every record.
    """
    from .diagnostics import EnergyLedger, record_from_state

    if spec.has_velocity != (initial.u is not None):
        raise ValueError(f"initial state does not match system {spec.system!r}")
    integ = Integrator(spec, initial.grid, cfg.scheme)
    energy = EnergyLedger(initial, dissipated0, energy0)
    state = initial
    result = RunResult(state)

    def emit(s: SimState) -> None:
        rec = record_from_state(spec, s, energy)
        result.records.append(rec)
        if sink is not None:
            sink(rec)
        if snapshot_hook is not None:
            snapshot_hook(s, energy.dissipated, energy.energy0)

    emit(state)
    tol = 1e-12 * max(cfg.t_end, 1.0)
    y = state.stacked()
    while state.t < cfg.t_end - tol:
        dt = cfg.dt if cfg.dt is not None else cfl_dt(state, cfg)
        dt = min(dt, cfg.t_end - state.t)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                y_new = integ.advance(y, dt)
            t_new = state.t + dt
            _check_alive(y_new, state.grid, t_new, cfg, state)
        except BlowUpError as err:
            result.blowup = err
            break
        energy.add(integ.dissipated(y, y_new, dt))
        y = y_new
        state = SimState.from_stacked(state.grid, y, t_new, state.step_count + 1, dt)
        if state.step_count % cfg.diagnostics_stride == 0 or state.t >= cfg.t_end - tol:
            emit(state)
    result.state = state
    result.dissipated = energy.dissipated
    result.energy0 = energy.energy0
    return result


def run_to(integ: Integrator, y: np.ndarray, t0: float, t1: float, dt: float) -> np.ndarray:
    """Steps of ``dt`` from ``t0`` to ``t1``, shortening the last one to land exactly."""
    t = t0
    tol = 1e-12 * max(abs(t1), 1.0)
    while t < t1 - tol:
        h = min(dt, t1 - t)
        y = integ.advance(y, h)
        t += h
    return y
