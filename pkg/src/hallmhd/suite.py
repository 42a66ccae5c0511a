"""Verification suite: every algebraic identity checked over seeded random fields.

Each check is a :class:`~hallmhd.ledger.Check` with a stable name, so a
failing run can be traced to one identity on one field.
"""
from __future__ import annotations

import math
import statistics
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .diagnostics import z3_residual
from .evolve import ModelSpec
from .fields import VectorField, curl, random_divfree, random_field
from .ledger import (
    TOL_FOURTH,
    TOL_TRILINEAR,
    TERMS,
    Check,
    CancellationReport,
    _Derivs,
    _direct_I,
    _direct_II,
    bound_functional_25d,
    bound_functional_3d,
    build_ledger,
    check_25d_single_terms,
    check_25d_vi_cancellations,
    check_cancellations,
    check_master_identity,
    evaluate_term,
    pairing_h1,
    pairing_h2,
)
from .nonlinear import hall_term, hall_term_alt, vorticity_cancellation_residuals
from .spectral import Grid

__all__ = ["SuiteReport", "RatioStudy", "run_suite", "negative_control_field", "RATIO_GRIDS"]

TOL_VORTICITY = 1e-13
TOL_Z3 = 1e-11
TOL_HALL_ALT = 1e-11
NEG_CONTROL_MIN = 1e-6
# grids for the ratio studies: (dim, n, band)
RATIO_GRIDS = {2: (2, 32, 5), 3: (3, 16, 3)}


@dataclass(frozen=True)
class RatioStudy:
    """``|pairing| / bound`` over random solenoidal fields."""

    name: str
    ratios: tuple[float, ...]

    @property
    def finite(self) -> bool:
        return bool(self.ratios) and all(math.isfinite(r) for r in self.ratios)

    def as_dict(self) -> dict:
        r = self.ratios
        return {"name": self.name, "samples": len(r), "finite": self.finite,
                "max": max(r) if r else math.nan, "median": statistics.median(r) if r else math.nan,
                "min": min(r) if r else math.nan}


@dataclass
class SuiteReport:
    checks: list[Check] = field(default_factory=list)
    ratio_studies: list[RatioStudy] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)

    def extend(self, prefix: str, checks) -> None:
        for c in checks:
            self.checks.append(Check(f"{prefix}: {c.name}", c.lhs, c.expected, c.abs_residual,
                                     c.scale, c.tol, c.passed))

    def as_dict(self) -> dict:
        fail = self.first_failure()
        return {
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failed": sum(not c.passed for c in self.checks),
            "first_failure": fail.name if fail else None,
            "elapsed_s": self.elapsed,
            "checks": [c.as_dict() for c in self.checks],
            "ratio_studies": [s.as_dict() for s in self.ratio_studies],
        }


def negative_control_field(grid: Grid, seed: int = 0, band: int = 4) -> VectorField:
    """Solenoidal random field plus ``(-cos x1, 0, 0)``, whose divergence is ``sin x1``."""
    b = random_divfree(grid, seed, band)
    x1 = np.broadcast_to(grid.coordinates()[0], grid.shape)
    zero = np.zeros(grid.shape)
    extra = VectorField.from_physical(grid, np.stack([-np.cos(x1), zero, zero]))
    return VectorField(grid, b.coeffs + extra.coeffs, "magnetic", False)


def label_checks(b: VectorField, ledger) -> list[Check]:
    """Each ledger entry against a fresh evaluation on a larger padded grid."""
    d = _Derivs(b, factor=4)
    out = []
    for label, value in ledger.entries.items():
        if label == "I":
            ref = _direct_I(d)
        elif label == "II":
            ref = _direct_II(d)
        else:
            ref = evaluate_term(d, TERMS[label])
        out.append(Check.make(f"{label} independent of padding", value, ref, [], TOL_FOURTH))
    return out


def _norm_l2(c: np.ndarray, grid: Grid) -> float:
    return math.sqrt(grid.volume * float(np.sum(np.abs(c) ** 2)))


def hall_checks(b: VectorField) -> list[Check]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        h = hall_term(b)
        alt = hall_term_alt(b)
    g = b.grid
    j = curl(b)
    grad_b = b.hs(1.0)
    scale = j.l2() * grad_b * b.l2()
    neutral = h.dot(b)
    gap = _norm_l2(h.coeffs - alt.coeffs, g)
    ref = max(h.l2(), alt.l2())
    return [
        Check("Hall term is energy neutral", neutral, 0.0, abs(neutral), scale, TOL_TRILINEAR,
              bool(abs(neutral) <= TOL_TRILINEAR * scale)),
        Check("curl(j x b) = curl((b . grad) b)", gap, 0.0, gap, ref, TOL_HALL_ALT,
              bool(gap <= TOL_HALL_ALT * ref)),
    ]


def vorticity_checks(u: VectorField, b: VectorField) -> list[Check]:
    (ru, su), (rb, sb) = vorticity_cancellation_residuals(u, b, with_scale=True)
    z3 = z3_residual(u, b, ModelSpec("hallmhd_mixed", 0.6))
    return [
        Check("(omega . grad) u3 = 0", ru, 0.0, ru, su, TOL_VORTICITY, bool(ru <= TOL_VORTICITY * su)),
        Check("(j . grad) b3 = 0", rb, 0.0, rb, sb, TOL_VORTICITY, bool(rb <= TOL_VORTICITY * sb)),
        Check("z3 equation assembles from w3 and b3 equations", z3, 0.0, z3, 1.0, TOL_Z3, bool(z3 <= TOL_Z3)),
    ]


def negative_control_checks(grid: Grid) -> list[Check]:
    """The V/VI rewrites must fail visibly on a non-solenoidal field."""
    b = negative_control_field(grid)
    rep = check_25d_vi_cancellations(b, require_divfree=False)
    worst = max(c.abs_residual / c.scale if c.scale else 0.0 for c in rep)
    return [Check("V/VI rewrites fail without div b = 0", worst, 0.0, worst, 1.0, NEG_CONTROL_MIN,
                  bool(worst > NEG_CONTROL_MIN))]


def field_checks(b: VectorField, fault: Mapping[str, float] | None, solenoidal: bool) -> list[Check]:
    led = build_ledger(b, fault)
    checks = label_checks(b, led)
    checks += list(led.consistency)
    checks += list(check_cancellations(led))
    checks += list(check_master_identity(b, led))
    if b.grid.dim == 2 and solenoidal:
        checks += list(check_25d_vi_cancellations(b, led))
    if b.grid.dim == 2:
        checks += list(check_25d_single_terms(b, led))
    return checks


def ratio_studies(samples: int, dims=(2, 3), seed0: int = 1000) -> list[RatioStudy]:
    studies: dict[str, list[float]] = {}

    def add(name: str, value: float, bound: float) -> None:
        studies.setdefault(name, []).append(abs(value) / bound if bound > 0 else math.inf)

    for dim in dims:
        g = Grid.square(*RATIO_GRIDS[dim][:2], None)
        band = RATIO_GRIDS[dim][2]
        for i in range(samples):
            b = random_divfree(g, seed0 + i, band)
            add(f"h1 pairing, {dim}-D", *pairing_h1(b))
            p2 = pairing_h2(b)
            if dim == 2:
                add("h2 pairing / 2.5-D bound", p2, bound_functional_25d(b))
            else:
                add("h2 pairing / 3-D bound eq58", p2, bound_functional_3d(b, "eq58"))
                add("h2 pairing / 3-D bound eq100", p2, bound_functional_3d(b, "eq100"))
    return [RatioStudy(k, tuple(v)) for k, v in studies.items()]


def run_suite(dims=(2, 3), seeds: int = 10, seeds_3d: int = 5, n: int = 64, band: int = 10,
              n_3d: int = 32, band_3d: int = 5, ratio_samples: int = 100,
              fault: Mapping[str, float] | None = None,
              progress: Callable[[str], None] | None = None) -> SuiteReport:
    """Run every check; ``fault`` scales named ledger entries (test hook)."""
    t0 = time.perf_counter()
    rep = SuiteReport()
    say = progress or (lambda msg: None)
    for dim in dims:
        grid = Grid.square(dim, n if dim == 2 else n_3d)
        K = band if dim == 2 else band_3d
        count = seeds if dim == 2 else seeds_3d
        for s in range(count):
            say(f"{dim}-D seed {s}")
            b = random_divfree(grid, s, K)
            rep.extend(f"{dim}d/seed{s}/solenoidal", field_checks(b, fault, True))
            rep.extend(f"{dim}d/seed{s}/solenoidal", hall_checks(b))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                q = random_field(grid, s + 500, K)
                rep.extend(f"{dim}d/seed{s}/generic", field_checks(q, fault, False))
                # both Hall identities hold without div b = 0
                rep.extend(f"{dim}d/seed{s}/generic", hall_checks(q))
            if dim == 2:
                u = random_divfree(grid, s + 1000, K, kind="velocity")
                rep.extend(f"{dim}d/seed{s}/vorticity", vorticity_checks(u, b))
        if dim == 2:
            rep.extend("2d/negative-control", negative_control_checks(grid))
    if ratio_samples > 0:
        say("ratio studies")
        rep.ratio_studies = ratio_studies(ratio_samples, dims)
        for st in rep.ratio_studies:
            top = max(st.ratios)
            rep.checks.append(Check(f"ratio study '{st.name}' is finite", top, 0.0, 0.0, 1.0, 0.0, st.finite))
    rep.elapsed = time.perf_counter() - t0
    return rep
