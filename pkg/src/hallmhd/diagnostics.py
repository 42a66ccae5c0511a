"""Run-time diagnostics: norms, energy budget, criterion surrogates, scaling harness."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .evolve import Integrator, ModelSpec, SimState, StepperConfig, run_to
from .fields import VectorField, curl_coeffs, divergence, ik3, vec_to_physical
from .nonlinear import _Padded, hall_coeffs, omega3
from .spectral import Grid, sobolev_seminorm, symbol

__all__ = [
    "DiagnosticsRecord",
    "ScalingReport",
    "EnergyLedger",
    "record_from_state",
    "energy",
    "energy_budget",
    "criterion_surrogates",
    "z3_residual",
    "scaling_test",
    "rescale",
    "CRITERION_DEFAULTS",
    "BMO_SURROGATE_NOTE",
]

CRITERION_DEFAULTS = {"p1": 6.0, "r1": 4.0, "p2": 2.0, "r2": 4.0}
BMO_SURROGATE_NOTE = "linf_j is an L-infinity surrogate for the BMO norm of j (BMO <= C L-infinity)"
HS_DEFAULT = (1, 2, 3)


@dataclass
class DiagnosticsRecord:
    """One row of the trajectory time series.

    ``energy`` is ``(||b||^2 + ||u||^2) / 2`` and ``dissipated`` is the
    time integral of ``dissipation_h + dissipation_v + dissipation_u``, so ``energy + dissipated`` stays at
    its initial value for an exact solution.
    """

    t: float
    step: int
    dt: float
    l2_b: float
    l2_u: float
    hs_norms: dict = field(default_factory=dict)
    dissipation_h: float = 0.0
    dissipation_v: float = 0.0
    dissipation_u: float = 0.0
    energy: float = 0.0
    dissipated: float = 0.0
    energy_defect: float = 0.0
    div_residuals: dict = field(default_factory=dict)
    criterion_integrands: tuple = (0.0, 0.0, 0.0)
    z3_residual: float = math.nan
    linf_j: float = 0.0

    def flat(self) -> dict[str, float]:
        """Scalar columns in a fixed order (used for CSV)."""
        out = {"t": self.t, "step": self.step, "dt": self.dt, "l2_b": self.l2_b, "l2_u": self.l2_u}
        for s in sorted(self.hs_norms):
            out[f"hs_b_{s}"] = self.hs_norms[s]
        out.update({
            "dissipation_h": self.dissipation_h,
            "dissipation_v": self.dissipation_v,
            "dissipation_u": self.dissipation_u,
            "energy": self.energy,
            "dissipated": self.dissipated,
            "energy_defect": self.energy_defect,
            "div_b": self.div_residuals.get("b", 0.0),
            "div_u": self.div_residuals.get("u", 0.0),
            "crit_uh_lp": self.criterion_integrands[0],
            "crit_d2bh_lp": self.criterion_integrands[1],
            "crit_j_linf2": self.criterion_integrands[2],
            "z3_residual": self.z3_residual,
            "linf_j": self.linf_j,
        })
        return out


CSV_COLUMNS = tuple(DiagnosticsRecord(0, 0, 0, 0, 0, {s: 0 for s in HS_DEFAULT}).flat())


@dataclass(frozen=True)
class ScalingReport:
    """Outcome of :func:`scaling_test`.

    ``prefactor`` is the squared L2 ratio of rescaled to original data, with
    the rescaled norm taken over the image cell ``T^n / lam``.
    """

    lam: int
    beta: float
    mismatch: float
    prefactor: float
    prefactor_expected: float
    times: tuple[float, ...] = ()
    mismatches: tuple[float, ...] = ()

    @property
    def prefactor_error(self) -> float:
        return abs(self.prefactor - self.prefactor_expected) / abs(self.prefactor_expected)


def energy(state: SimState) -> float:
    """``(||b||^2 + ||u||^2) / 2``."""
    e = state.b.l2() ** 2
    if state.u is not None:
        e += state.u.l2() ** 2
    return 0.5 * e


class EnergyLedger:
    """Running sum of dissipated energy for one trajectory."""

    def __init__(self, initial: SimState, dissipated0: float = 0.0, energy0: float | None = None):
        self.energy0 = energy(initial) if energy0 is None else float(energy0)
        self.dissipated = float(dissipated0)

    def add(self, amount: float) -> None:
        self.dissipated += amount

    def defect(self, state: SimState) -> float:
        if self.energy0 == 0.0:
            return abs(energy(state) + self.dissipated)
        return abs(energy(state) + self.dissipated - self.energy0) / self.energy0


def _weighted(c: np.ndarray, grid: Grid, p: float) -> float:
    return grid.volume * float(np.sum(symbol(grid, p) * np.abs(c) ** 2))


def dissipation_rates(spec: ModelSpec, state: SimState) -> tuple[float, float, float]:
    """``(||Lambda^{p/2} b_h||^2, ||Lambda^{p/2} b_v||^2, sum_c ||Lambda^{p_c/2} u_c||^2)``."""
    g = state.grid
    pb = spec.b_exponents
    dh = spec.eta * (_weighted(state.b.coeffs[0], g, pb[0]) + _weighted(state.b.coeffs[1], g, pb[1]))
    dv = spec.eta * _weighted(state.b.coeffs[2], g, pb[2])
    du = 0.0
    if state.u is not None:
        du = spec.nu * sum(_weighted(state.u.coeffs[i], g, p) for i, p in enumerate(spec.u_exponents))
    return dh, dv, du


def _rel_div(f: VectorField) -> float:
    g = f.hs(1.0)
    return 0.0 if g == 0 else sobolev_seminorm(divergence(f), 0.0) / g


def criterion_surrogates(state: SimState, p1: float = 6.0, r1: float = 4.0, p2: float = 2.0,
                         r2: float = 4.0) -> tuple[float, float, float]:
    """Instantaneous integrands of the regularity-criterion norms.

    Returns ``(||u_h||_{L^p1}^r1, ||D^2 b_h||_{L^p2}^r2, ||j||_{L^inf}^2)``;
    the last replaces a BMO norm by its L-infinity upper bound.  Warns when
    the exponent pairs leave the admissible ranges ``3/p1 + 2/r1 <= 1`` with
    ``3 < p1 <= inf`` and ``3/p2 + 2/r2 <= 2`` with ``2 <= p2 <= 3``.
    """
    if not (3.0 < p1 and 3.0 / p1 + 2.0 / r1 <= 1.0 + 1e-12):
        warnings.warn(f"(p1, r1) = ({p1}, {r1}) violates 3/p1 + 2/r1 <= 1, 3 < p1", RuntimeWarning, stacklevel=2)
    if not (2.0 <= p2 <= 3.0 and 3.0 / p2 + 2.0 / r2 <= 2.0 + 1e-12):
        warnings.warn(f"(p2, r2) = ({p2}, {r2}) violates 3/p2 + 2/r2 <= 2, 2 <= p2 <= 3", RuntimeWarning,
                      stacklevel=2)
    g = state.grid
    shape = tuple(2 * n for n in g.n)
    if state.u is None:
        first = 0.0
    else:
        uh = state.u.physical(shape)[:2]
        mag = np.sqrt(np.sum(uh * uh, axis=0))
        first = _lp(mag, p1, g) ** r1
    ik = ik3(g)[: g.dim]
    hess = []
    for a in range(g.dim):
        for c in range(g.dim):
            hess.append(ik[a] * ik[c] * state.b.coeffs[:2])
    h = vec_to_physical(np.concatenate(hess), g, shape)
    second = _lp(np.sqrt(np.sum(h * h, axis=0)), p2, g) ** r2
    jp = vec_to_physical(curl_coeffs(state.b.coeffs, g), g, shape)
    third = float(np.max(np.sqrt(np.sum(jp * jp, axis=0)))) ** 2
    return float(first), float(second), third


def _lp(mag: np.ndarray, p: float, grid: Grid) -> float:
    if math.isinf(p):
        return float(mag.max())
    return float((grid.volume * np.mean(mag ** p)) ** (1.0 / p))


def z3_residual(u: VectorField, b: VectorField, spec: ModelSpec) -> float:
    """Relative L2 gap between two assemblies of ``d_t z3`` with ``z3 = w3 + b3``.

    The first adds the third-vorticity right side to the ``b3`` right side
    (both with their Hall contributions); the second is
    ``-(u . grad) z3 + (b . grad) u3 - Lambda^{2 alpha} z3``.
    """
    from .nonlinear import omega3_rhs

    g = u.grid
    if g.dim != 2:
        raise ValueError("defined for 2-D grids")
    alpha = spec.alpha
    eps = spec.eps
    w_rhs = omega3_rhs(u, b, alpha, eps).coeffs
    pad = _Padded(g, [u.coeffs, b.coeffs])
    ik = ik3(g)
    up, bp = pad.phys(u.coeffs), pad.phys(b.coeffs)
    b3 = b.coeffs[2]
    u3 = u.coeffs[2]
    ugb3 = pad.back((up[0] * pad.phys((ik[0] * b3)[None])[0] + up[1] * pad.phys((ik[1] * b3)[None])[0])[None])[0]
    bgu3 = pad.back((bp[0] * pad.phys((ik[0] * u3)[None])[0] + bp[1] * pad.phys((ik[1] * u3)[None])[0])[None])[0]
    hall3 = eps * hall_coeffs(b.coeffs, g)[2]
    b3_rhs = -ugb3 - hall3 + bgu3 - symbol(g, spec.b_exponents[2]) * b3
    first = w_rhs + b3_rhs
    z3 = omega3(u).coeffs + b3
    ugz = pad.back((up[0] * pad.phys((ik[0] * z3)[None])[0] + up[1] * pad.phys((ik[1] * z3)[None])[0])[None])[0]
    second = -ugz + bgu3 - symbol(g, 2.0 * alpha) * z3
    diff = np.sqrt(np.sum(np.abs(first - second) ** 2))
    ref = max(np.sqrt(np.sum(np.abs(first) ** 2)), np.sqrt(np.sum(np.abs(hall3) ** 2)))
    return 0.0 if ref == 0 else float(diff / ref)


def record_from_state(spec: ModelSpec, state: SimState, ledger: EnergyLedger | None = None,
                      hs: Sequence[float] = HS_DEFAULT) -> DiagnosticsRecord:
    g = state.grid
    b = state.b
    dh, dv, du = dissipation_rates(spec, state)
    divs = {"b": _rel_div(b)}
    if state.u is not None:
        divs["u"] = _rel_div(state.u)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        crit = criterion_surrogates(state)
    z3 = math.nan
    if spec.system == "hallmhd_mixed" and state.u is not None:
        z3 = z3_residual(state.u, b, spec)
    return DiagnosticsRecord(
        t=state.t,
        step=state.step_count,
        dt=state.last_dt,
        l2_b=b.l2(),
        l2_u=state.u.l2() if state.u is not None else 0.0,
        hs_norms={s: b.hs(s) for s in hs},
        dissipation_h=dh,
        dissipation_v=dv,
        dissipation_u=du,
        energy=energy(state),
        dissipated=ledger.dissipated if ledger else 0.0,
        energy_defect=ledger.defect(state) if ledger else 0.0,
        div_residuals=divs,
        criterion_integrands=crit,
        z3_residual=z3,
        linf_j=math.sqrt(crit[2]),
    )


def energy_budget(history: Iterable[DiagnosticsRecord]) -> float:
    """Largest relative defect of ``energy + dissipated`` against its first value."""
    history = list(history)
    if not history:
        return 0.0
    e0 = history[0].energy + history[0].dissipated
    worst = 0.0
    for r in history:
        gap = abs(r.energy + r.dissipated - e0)
        worst = max(worst, gap / e0 if e0 else gap)
    return worst


def rescale(b: VectorField, lam: int, beta: float) -> VectorField:
    """``lam^{2 beta - 2} b(lam x)`` on the same grid (mode ``m`` moves to ``lam m``)."""
    g = b.grid
    band = b.band()
    lim = g.band_limit
    if any(lam * k > L for k, L in zip(band, lim)):
        raise ValueError(f"band {band} too wide for rescaling by {lam} on grid {g.n}")
    out = np.zeros_like(b.coeffs)
    src = [np.arange(-k, k + 1) for k in band]
    mesh = np.meshgrid(*src, indexing="ij")
    s_idx = tuple(m % n for m, n in zip(mesh, g.n))
    d_idx = tuple((lam * m) % n for m, n in zip(mesh, g.n))
    out[(slice(None),) + d_idx] = b.coeffs[(slice(None),) + s_idx]
    return VectorField(g, out * lam ** (2.0 * beta - 2.0), b.kind, b.divfree)


def _sublattice_distance(y2: np.ndarray, y1: np.ndarray, lam: int, beta: float, grid: Grid) -> float:
    """``||y2 - lam^{2b-2} y1(lam x)|| / ||y2||`` with modes of ``y1`` beyond reach counted as error."""
    half = [n // 2 for n in grid.n]
    fit = [min(h - 1, (h - 1) // lam) for h in half]
    mesh = np.meshgrid(*[np.arange(-f, f + 1) for f in fit], indexing="ij")
    s_idx = tuple(m % n for m, n in zip(mesh, grid.n))
    d_idx = tuple((lam * m) % n for m, n in zip(mesh, grid.n))
    mapped = np.zeros_like(y2)
    pref = lam ** (2.0 * beta - 2.0)
    mapped[(slice(None),) + d_idx] = pref * y1[(slice(None),) + s_idx]
    lost = np.abs(y1) ** 2
    lost[(slice(None),) + s_idx] = 0.0
    err2 = np.sum(np.abs(y2 - mapped) ** 2) + pref ** 2 * np.sum(lost)
    ref2 = np.sum(np.abs(y2) ** 2)
    if ref2 == 0.0:
        return float(math.sqrt(err2))
    return float(math.sqrt(err2 / ref2))


def scaling_test(beta: float, lam: int, b0: VectorField, T: float, cfg: StepperConfig,
                 checkpoints: int = 10) -> ScalingReport:
    """Compare the rescaled evolution with the evolution of the rescaled data.

    Trajectory A evolves ``b0`` to ``T``; trajectory B evolves
    ``lam^{2 beta - 2} b0(lam x)`` to ``T / lam^{2 beta}``.  Both use the step
    ``cfg.dt``, shortening the last step before each comparison time.  The
    mismatch is the largest relative L2 gap over the comparison times.
    """
    if int(lam) != lam or lam < 2:
        raise ValueError("lambda must be an integer >= 2")
    lam = int(lam)
    if cfg.dt is None:
        raise ValueError("the scaling test needs a fixed dt")
    g = b0.grid
    K = max(b0.band())
    if K > min(g.n) // (4 * lam):
        raise ValueError(f"initial band {K} exceeds N/(4 lambda) = {min(g.n) // (4 * lam)}")
    spec = ModelSpec("electron_general", beta=beta)
    b0l = rescale(b0, lam, beta)
    # the rescaled field is (2 pi / lam)-periodic; its norm over the image cell
    # lam^-1 T^n is a lam^-n share of the norm over the whole torus
    prefactor = (b0l.l2() / b0.l2()) ** 2 / float(lam) ** g.dim if b0.l2() else 1.0
    expected = float(lam) ** (4.0 * beta - 4.0 - g.dim)
    clock = float(lam) ** (2.0 * beta)
    ia = Integrator(spec, g, cfg.scheme)
    ib = Integrator(spec, g, cfg.scheme)
    ya, yb = np.array(b0.coeffs), np.array(b0l.coeffs)
    ta = tb = 0.0
    times, gaps = [], []
    for i in range(1, checkpoints + 1):
        tb_next = T / clock * i / checkpoints
        ta_next = T * i / checkpoints
        yb = run_to(ib, yb, tb, tb_next, cfg.dt)
        ya = run_to(ia, ya, ta, ta_next, cfg.dt)
        ta, tb = ta_next, tb_next
        times.append(tb)
        gaps.append(_sublattice_distance(yb, ya, lam, beta, g))
    return ScalingReport(lam, beta, max(gaps) if gaps else 0.0, prefactor, expected, tuple(times), tuple(gaps))
