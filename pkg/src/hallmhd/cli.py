"""Command-line entry point: ``hallmhd verify | simulate | scaling-test | config``."""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .diagnostics import scaling_test
from .evolve import SimState, StepperConfig, simulate
from .fields import random_divfree
from .io import (
    ConfigError,
    CsvSink,
    RunConfig,
    Snapshot,
    apply_overrides,
    format_config,
    initial_state,
    keys_help,
    load_config,
    write_json,
    write_snapshot,
)
from .spectral import Grid
from .suite import run_suite

EXIT_OK, EXIT_FAIL, EXIT_BLOWUP, EXIT_CONFIG = 0, 1, 2, 3

DESCRIPTION = """\
Spectral verification and simulation for Hall-MHD and electron MHD on periodic
domains.  Every command reads an optional config file (--config) of
`key = value` lines; --set KEY=VALUE overrides single keys.

exit codes:
  verify        0 all checks pass, 1 a check failed (named on stderr), 3 config error
  simulate      0 reached t_end, 2 blow-up (last good snapshot saved), 3 config error
  scaling-test  0 mismatch <= scaling.tol, 1 otherwise, 3 config error

environment:
  HMHD_THREADS  worker threads used by the FFTs (default 1)
"""


def _epilog() -> str:
    return "config keys:\n" + keys_help()


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    return apply_overrides(cfg, overrides) if overrides else cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- verify

def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _load(args)
    v = cfg.verify
    dims = (args.dim,) if args.dim else v.dims
    n, n3 = v.n, v.n_3d
    seeds, seeds3 = v.seeds, v.seeds_3d
    if args.n:
        n = n3 = args.n
    if args.seeds is not None:
        seeds = seeds3 = args.seeds
    band = min(v.band, n // 4)
    band3 = min(v.band_3d, n3 // 4)
    ratio = 0 if args.no_ratio else v.ratio_samples
    fault = {label: -1.0 for label in args.inject_fault or []}
    progress = (lambda msg: print(f"  {msg}", file=sys.stderr)) if args.verbose else None
    try:
        rep = run_suite(dims, seeds, seeds3, n, band, n3, band3, ratio, fault or None, progress)
    except KeyError as err:
        raise ConfigError(str(err)) from None
    report_path = Path(args.report or v.report)
    if not report_path.is_absolute() and args.report is None:
        report_path = _outdir(cfg) / report_path
    report_path.parent.mkdir(parents=True, exist_ok=True)
    data = rep.as_dict()
    data["settings"] = {"dims": list(dims), "n": n, "band": band, "n_3d": n3, "band_3d": band3,
                        "seeds": seeds, "seeds_3d": seeds3, "ratio_samples": ratio,
                        "injected_faults": sorted(fault)}
    write_json(report_path, data)
    for st in rep.ratio_studies:
        d = st.as_dict()
        print(f"ratio {st.name}: max {d['max']:.4g}  median {d['median']:.4g}  ({d['samples']} fields)")
    print(f"{len(rep.checks)} checks, {data['n_failed']} failed, {rep.elapsed:.1f} s; report: {report_path}")
    fail = rep.first_failure()
    if fail is not None:
        print(f"FAIL: {fail.name} (residual {fail.abs_residual:.3e}, scale {fail.scale:.3e}, "
              f"tol {fail.tol:.0e})", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------- simulate

def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    state, dissipated0, energy0 = initial_state(cfg)
    if state.grid.dim != 2:
        raise ConfigError("simulate needs grid.dim = 2")
    stepper = cfg.stepper
    if args.t_end is not None:
        stepper = replace(stepper, t_end=args.t_end)
    out = _outdir(cfg)
    formats = set(cfg.output.formats)
    resumed = cfg.initial.kind == "snapshot"
    sink = CsvSink(out / "trajectory.csv", append=resumed) if "csv" in formats else None
    rows = {"n": 0}

    def on_record(s: SimState, dissipated: float, e0: float) -> None:
        k = rows["n"]
        rows["n"] += 1
        if "snapshot" in formats and k % cfg.output.snapshot_stride == 0:
            write_snapshot(out / f"snap_{s.step_count:08d}.hmhd", Snapshot(s, cfg.model, dissipated, e0))

    def csv_sink(rec) -> None:
        # a resumed run's first row repeats the snapshot's row
        if sink is not None and not (resumed and rows["n"] == 0):
            sink(rec)

    try:
        result = simulate(cfg.model, state, stepper, csv_sink, dissipated0, energy0, on_record)
    finally:
        if sink is not None:
            sink.close()
    final = result.state
    write_snapshot(out / "last_good.hmhd" if result.blowup else out / "final.hmhd",
                   Snapshot(final, cfg.model, result.dissipated, result.energy0))
    last = result.records[-1]
    write_json(out / "run_info.json", {
        "system": cfg.model.system, "alpha": cfg.model.alpha, "in_theorem_range": cfg.model.in_theorem_range,
        "t": final.t, "steps": final.step_count, "blowup": None if result.blowup is None else str(result.blowup),
        "max_energy_defect": max(r.energy_defect for r in result.records)})
    if not cfg.model.in_theorem_range:
        print(f"note: alpha = {cfg.model.alpha} is outside (1/2, 1); run tagged in_theorem_range = false")
    print(f"t = {final.t:.6g} after {final.step_count} steps; last diagnostics at t = {last.t:.6g}: "
          f"energy defect {last.energy_defect:.3e}, H3(b) = {last.hs_norms.get(3, float('nan')):.6g}")
    if result.blowup is not None:
        print(f"BLOW-UP: {result.blowup}; last good state at t = {final.t:.6g} saved to "
              f"{out / 'last_good.hmhd'}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


# ---------------------------------------------------------------- scaling test

def cmd_scaling_test(args: argparse.Namespace) -> int:
    cfg = _load(args)
    sc = cfg.scaling
    updates = {k: getattr(args, k) for k in ("beta", "lam", "tol") if getattr(args, k) is not None}
    sc = replace(sc, **updates)
    grid = Grid.square(2, sc.n)
    try:
        b0 = random_divfree(grid, sc.seed, sc.band)
        b0 = b0 * (sc.h3 / b0.hs(3.0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = scaling_test(sc.beta, sc.lam, b0, sc.t_end, StepperConfig(dt=sc.dt, scheme=cfg.stepper.scheme),
                               sc.checkpoints)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    ok = rep.mismatch <= sc.tol
    write_json(_outdir(cfg) / "scaling_report.json", {
        "beta": sc.beta, "lambda": sc.lam, "t_end": sc.t_end, "dt": sc.dt, "n": sc.n, "band": sc.band,
        "mismatch": rep.mismatch, "tol": sc.tol, "pass": ok, "times": rep.times,
        "mismatches": rep.mismatches, "l2_prefactor": rep.prefactor,
        "l2_prefactor_expected": rep.prefactor_expected, "l2_prefactor_error": rep.prefactor_error,
    })
    print(f"beta = {sc.beta}, lambda = {sc.lam}: mismatch {rep.mismatch:.3e} (tol {sc.tol:.1e}); "
          f"L2 prefactor {rep.prefactor:.15g} vs lambda^(4 beta - 4 - n) = {rep.prefactor_expected:.15g}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_config(args: argparse.Namespace) -> int:
    sys.stdout.write(format_config(_load(args)))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(prog="hallmhd", description=DESCRIPTION, epilog=_epilog(), formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", help="config file of `key = value` lines")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")

    v = sub.add_parser("verify", help="run the identity and cancellation suite", epilog=_epilog(),
                       formatter_class=fmt)
    common(v)
    v.add_argument("--dim", type=int, choices=(2, 3), help="check one dimension only")
    v.add_argument("--n", type=int, help="points per axis for the checked dimension(s)")
    v.add_argument("--seeds", type=int, help="random fields per dimension")
    v.add_argument("--report", help="JSON report path")
    v.add_argument("--no-ratio", action="store_true", help="skip the bound-functional ratio studies")
    v.add_argument("--inject-fault", action="append", metavar="LABEL",
                   help="test hook: flip the sign of one ledger entry")
    v.add_argument("-v", "--verbose", action="store_true")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="evolve a trajectory with diagnostics and snapshots", epilog=_epilog(),
                       formatter_class=fmt)
    common(s)
    s.add_argument("--t-end", type=float, help="override stepper.t_end")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("scaling-test", help="compare rescaled trajectories", epilog=_epilog(),
                       formatter_class=fmt)
    common(t)
    t.add_argument("--beta", type=float, help="override scaling.beta")
    t.add_argument("--lam", type=int, help="override scaling.lam")
    t.add_argument("--tol", type=float, help="override scaling.tol")
    t.set_defaults(func=cmd_scaling_test)

    c = sub.add_parser("config", help="print the effective configuration", epilog=_epilog(),
                       formatter_class=fmt)
    common(c)
    c.set_defaults(func=cmd_config)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as err:
        if args.command == "simulate" or isinstance(err, OSError):
            print(f"config error: {err}", file=sys.stderr)
            return EXIT_CONFIG
        raise


if __name__ == "__main__":
    sys.exit(main())
