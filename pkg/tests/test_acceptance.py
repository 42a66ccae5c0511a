"""Acceptance criteria at full size; each test prints one PASS/FAIL line.

These runs take a few minutes in total (the N = 128 Hall-MHD run dominates).
"""
import math
import time

import numpy as np
import pytest

from hallmhd import Grid, random_divfree
from hallmhd.diagnostics import energy_budget, scaling_test
from hallmhd.evolve import Integrator, StepperConfig, run_to, simulate
from hallmhd.io import initial_state, parse_config
from hallmhd.suite import (
    NEG_CONTROL_MIN,
    TOL_HALL_ALT,
    TOL_VORTICITY,
    TOL_Z3,
    run_suite,
)


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail
    return report


# ---------------------------------------------------------------- shared runs

@pytest.fixture(scope="module")
def suite():
    return run_suite(dims=(2, 3), seeds=10, seeds_3d=5, n=64, band=10, n_3d=32, band_3d=5, ratio_samples=100)


def select(rep, predicate):
    checks = [c for c in rep.checks if predicate(c.name)]
    assert checks, "no checks selected"
    return checks


def worst(checks):
    return max((c.abs_residual / c.scale if c.scale else c.abs_residual) for c in checks)


RUN_TEXT = """
grid.n = 128
initial.band = 8
initial.h3 = 1.0
seed = 0
model.alpha = 0.6
"""


def full_run(system):
    cfg = parse_config(RUN_TEXT + f"model.system = {system}\n")
    state, _, _ = initial_state(cfg)
    t0 = time.perf_counter()
    res = simulate(cfg.model, state, StepperConfig(dt=1e-3, t_end=1.0, diagnostics_stride=10))
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def electron_run():
    return full_run("electron_aniso")


@pytest.fixture(scope="module")
def hallmhd_run():
    return full_run("hallmhd_mixed")


# ---------------------------------------------------------------- criteria

def test_01_master_identity(suite, verdict):
    checks = select(suite, lambda n: n.endswith("pairing = surviving-term sum"))
    ok = all(c.passed for c in checks) and len(checks) == 2 * (10 + 5) and suite.elapsed <= 120
    verdict(1, "master identity", ok,
            f"{len(checks)} fields (2-D N=64 K=10, 3-D N=32 K=5), worst residual/scale {worst(checks):.2e} "
            f"(tol 1e-11); suite time {suite.elapsed:.1f} s (limit 120 s)")


def test_02_pair_cancellations(suite, verdict):
    checks = select(suite, lambda n: n.endswith("= 0") and "_{" in n)
    generic = [c for c in checks if "/generic:" in c.name]
    ok = all(c.passed and c.tol == 1e-12 for c in checks) and len(checks) == 6 * 30 and generic
    verdict(2, "six pair cancellations", ok,
            f"{len(checks)} checks ({len(generic)} on non-solenoidal fields), "
            f"worst residual/scale {worst(checks):.2e} (tol 1e-12)")


def test_03_vi_equalities_and_negative_control(suite, verdict):
    checks = select(suite, lambda n: n.endswith("rewrite") and "+" in n)
    neg = select(suite, lambda n: n.startswith("2d/negative-control"))
    ok = all(c.passed and c.tol == 1e-12 for c in checks) and len(checks) == 4 * 10 and all(c.passed for c in neg)
    verdict(3, "V/VI equalities", ok,
            f"{len(checks)} checks, worst residual/scale {worst(checks):.2e} (tol 1e-12); negative control "
            f"worst residual/scale {neg[0].lhs:.2e} (must exceed {NEG_CONTROL_MIN:.0e})")


def test_04_hall_energy_neutrality(suite, verdict):
    checks = select(suite, lambda n: n.endswith("Hall term is energy neutral"))
    ok = all(c.passed and c.tol == 1e-12 for c in checks) and len(checks) == 2 * (10 + 5)
    verdict(4, "Hall energy neutrality", ok,
            f"{len(checks)} fields, worst |int curl(j x b) . b| / (|j| |grad b| |b|) {worst(checks):.2e} "
            f"(tol 1e-12)")


def test_05_vorticity_structure(suite, verdict):
    vort = select(suite, lambda n: n.endswith("grad) u3 = 0") or n.endswith("grad) b3 = 0"))
    z3 = select(suite, lambda n: "z3 equation" in n)
    ok = (all(c.passed and c.tol == TOL_VORTICITY == 1e-13 for c in vort)
          and all(c.passed and c.tol == TOL_Z3 == 1e-11 for c in z3) and len(vort) == 20 and len(z3) == 10)
    verdict(5, "vorticity-structure residuals", ok,
            f"worst (w . grad) u3 / (j . grad) b3 ratio {worst(vort):.2e} (tol 1e-13); "
            f"worst z3 assembly residual {max(c.lhs for c in z3):.2e} (tol 1e-11)")


def test_06_hall_equivalence(suite, verdict):
    checks = select(suite, lambda n: n.endswith("curl(j x b) = curl((b . grad) b)"))
    sol = [c for c in checks if "/solenoidal:" in c.name]
    ok = all(c.passed and c.tol == TOL_HALL_ALT == 1e-11 for c in checks) and len(sol) == 15
    verdict(6, "Hall-term equivalence", ok,
            f"{len(sol)} solenoidal fields (+{len(checks) - len(sol)} generic), worst relative gap "
            f"{worst(checks):.2e} (tol 1e-11)")


def test_07a_energy_budget_electron(electron_run, verdict):
    res, elapsed = electron_run
    defect = energy_budget(res.records)
    ok = res.blowup is None and defect <= 1e-6 and elapsed <= 300 and math.isclose(res.state.t, 1.0)
    verdict(7, "energy budget, electron MHD (alpha 0.6, N=128, dt=1e-3, T=1)", ok,
            f"max relative defect {defect:.2e} (tol 1e-6), run time {elapsed:.0f} s (limit 300 s)")


def test_07b_energy_budget_hallmhd(hallmhd_run, verdict):
    res, elapsed = hallmhd_run
    defect = energy_budget(res.records)
    ok = res.blowup is None and defect <= 1e-6 and elapsed <= 300 and math.isclose(res.state.t, 1.0)
    verdict(7, "energy budget, Hall-MHD (alpha 0.6, N=128, dt=1e-3, T=1, E=(|u|^2+|b|^2)/2)", ok,
            f"max relative defect {defect:.2e} (tol 1e-6), run time {elapsed:.0f} s (limit 300 s)")


def test_08_scaling_invariance(verdict):
    g = Grid.square(2, 64)
    b0 = random_divfree(g, 7, 4)
    b0 = b0 * (1.0 / b0.hs(3))
    rep = scaling_test(1.5, 2, b0, 0.1, StepperConfig(dt=1e-4), checkpoints=10)
    ok = rep.mismatch <= 1e-6 and rep.prefactor_error <= 1e-12 and rep.prefactor_expected == 1.0
    verdict(8, "scaling invariance (beta 3/2, lambda 2, T=0.1, dt=1e-4)", ok,
            f"mismatch {rep.mismatch:.2e} (tol 1e-6); L2 prefactor {rep.prefactor:.15f} vs 1 "
            f"(error {rep.prefactor_error:.1e}, tol 1e-12)")


def test_09_self_convergence(verdict):
    cfg = parse_config(RUN_TEXT + "model.system = electron_aniso\n")
    state, _, _ = initial_state(cfg)
    integ = Integrator(cfg.model, state.grid, "if_rk4")
    dt = 2e-3
    ys = [run_to(integ, state.stacked(), 0.0, 0.1, dt / 2 ** k) for k in range(3)]
    e1, e2 = np.linalg.norm(ys[0] - ys[1]), np.linalg.norm(ys[1] - ys[2])
    ratio = e1 / e2
    verdict(9, "if_rk4 self-convergence (T=0.1, dt=2e-3, 1e-3, 5e-4)", 12.8 <= ratio <= 19.2,
            f"error ratio {ratio:.2f} (window [12.8, 19.2])")


def test_10_h3_boundedness(electron_run, verdict):
    res, _ = electron_run
    h3 = [r.hs_norms[3] for r in res.records]
    ok = res.blowup is None and abs(h3[0] - 1.0) <= 1e-12 and max(h3) <= 10.0 * h3[0]
    verdict(10, "H3 boundedness witness (electron run of criterion 7)", ok,
            f"max |b|_H3 {max(h3):.4f}, final {h3[-1]:.4f}, initial {h3[0]:.4f} (limit 10 x initial)")


def test_11_ratio_studies(suite, verdict):
    studies = suite.ratio_studies
    ok = len(studies) == 5 and all(s.finite and len(s.ratios) == 100 for s in studies)
    detail = "; ".join(f"{s.name}: max {s.as_dict()['max']:.3g}" for s in studies)
    verdict(11, "bound-functional ratio studies (100 fields each)", ok, detail)
