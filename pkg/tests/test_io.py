import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import divfree
from hallmhd.diagnostics import CSV_COLUMNS, record_from_state
from hallmhd.evolve import SYSTEMS, ModelSpec, SimState
from hallmhd.io import (
    ANALYTIC_FIELDS,
    KEYS,
    ConfigError,
    CsvSink,
    RunConfig,
    Snapshot,
    apply_overrides,
    format_config,
    initial_state,
    keys_help,
    parse_config,
    read_snapshot,
    write_json,
    write_snapshot,
)


# ---------------------------------------------------------------- config

def test_default_round_trip():
    cfg = RunConfig()
    assert parse_config(format_config(cfg)) == cfg
    assert [line.split(" = ")[0] for line in format_config(cfg).splitlines()] == list(KEYS)


finite = st.floats(0.05, 50.0, allow_nan=False)


@given(system=st.sampled_from(SYSTEMS), alpha=st.floats(0.51, 0.99), beta=finite, eps=finite,
       n=st.sampled_from([16, 32, 64]), seed=st.integers(0, 2 ** 31), dt=st.one_of(st.none(), finite),
       scheme=st.sampled_from(["if_rk4", "if_rk2"]), formats=st.sampled_from([("csv",), ("csv", "snapshot")]),
       dims=st.sampled_from([(2,), (3,), (2, 3)]))
@settings(max_examples=60, deadline=None)
def test_parse_format_round_trip(system, alpha, beta, eps, n, seed, dt, scheme, formats, dims):
    values = {"model.system": system, "model.alpha": repr(alpha), "model.beta": repr(beta),
              "model.eps": repr(eps), "grid.n": str(n), "seed": str(seed),
              "initial.band": "3", "stepper.dt": "none" if dt is None else repr(dt),
              "stepper.scheme": scheme, "output.formats": ", ".join(formats),
              "verify.dims": ", ".join(map(str, dims))}
    cfg = apply_overrides(RunConfig(), values)
    assert cfg.model.alpha == alpha and cfg.stepper.dt == dt and cfg.verify.dims == dims
    again = parse_config(format_config(cfg))
    assert again == cfg
    assert format_config(again) == format_config(cfg)


def test_comments_and_blank_lines():
    cfg = parse_config("# run\n\nmodel.alpha = 0.7   # vertical\ngrid.n=32\n")
    assert cfg.model.alpha == 0.7 and cfg.grid.n == 32


@pytest.mark.parametrize("text,needle", [
    ("model.alhpa = 0.7", "model.alhpa"),
    ("gird.n = 32", "gird.n"),
    ("model.alpha 0.7", "line 1"),
    ("grid.n = abc", "grid.n"),
    ("model.system = mhd", "model.system"),
    ("stepper.scheme = euler", "stepper.scheme"),
    ("grid.n = 31", "even"),
    ("stepper.dt = -1", "dt"),
    ("initial.kind = snapshot", "initial.path"),
    ("initial.kind = analytic\ninitial.name = vortex", "initial.name"),
    ("initial.band = 200", "initial.band"),
])
def test_config_errors_name_the_problem(text, needle):
    with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
        parse_config(text)


def test_keys_help_lists_every_key():
    text = keys_help()
    for k in KEYS:
        assert k in text


# ---------------------------------------------------------------- snapshots

@pytest.mark.parametrize("system", ["electron_aniso", "hallmhd_mixed"])
def test_snapshot_round_trip_bit_exact(tmp_path, system):
    b = divfree(2, 1)
    u = divfree(2, 2) if system.startswith("hallmhd") else None
    state = SimState(0.123456789, b, u, 17, 1e-3 / 3)
    model = ModelSpec(system, alpha=0.65, eps=0.9, nu=0.3, eta=0.7)
    path = tmp_path / "s.hmhd"
    write_snapshot(path, Snapshot(state, model, 1.25, 3.5))
    snap = read_snapshot(path)
    assert snap.model == model
    assert (snap.dissipated, snap.energy0) == (1.25, 3.5)
    s = snap.state
    assert (s.t, s.step_count, s.last_dt) == (state.t, 17, state.last_dt)
    assert s.grid == b.grid
    assert s.b.coeffs.tobytes() == b.coeffs.tobytes()
    if u is not None:
        assert s.u.coeffs.tobytes() == u.coeffs.tobytes()
    else:
        assert s.u is None


def test_snapshot_header_layout(tmp_path):
    b = divfree(2, 3)
    path = tmp_path / "s.hmhd"
    write_snapshot(path, Snapshot(SimState(0.5, b), ModelSpec(alpha=0.6), 0.0, 1.0))
    raw = path.read_bytes()
    assert raw[:4] == b"HMHD"
    assert struct.unpack_from("<II", raw, 4) == (1, 2)
    assert struct.unpack_from("<II", raw, 12) == (32, 32)
    (tlen,) = struct.unpack_from("<I", raw, 20)
    assert raw[24:24 + tlen] == b"electron_aniso"
    alpha, beta, eps, t = struct.unpack_from("<4d", raw, 24 + tlen)
    assert (alpha, eps, t) == (0.6, 1.0, 0.5)
    # coefficients close the file: 3 components of 32 x 32 complex doubles
    tail = np.frombuffer(raw[-3 * 32 * 32 * 16:], dtype="<c16").reshape(3, 32, 32)
    assert tail.tobytes() == b.coeffs.tobytes()


@pytest.mark.parametrize("mutate", [
    lambda raw: b"XXXX" + raw[4:],
    lambda raw: raw[:-8],
    lambda raw: raw + b"\0",
    lambda raw: raw[:4] + struct.pack("<I", 99) + raw[8:],
    lambda raw: raw[:10],
])
def test_snapshot_rejects_damage(tmp_path, mutate):
    path = tmp_path / "s.hmhd"
    write_snapshot(path, Snapshot(SimState(0.0, divfree(2, 4)), ModelSpec(), 0.0, 1.0))
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(ValueError):
        read_snapshot(path)


# ---------------------------------------------------------------- CSV and JSON

def test_csv_sink_header_and_append(tmp_path):
    spec = ModelSpec()
    rec = record_from_state(spec, SimState(0.0, divfree(2, 5)))
    path = tmp_path / "t.csv"
    with CsvSink(path) as sink:
        sink(rec)
    with CsvSink(path, append=True) as sink:
        sink(rec)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 3 and lines[1] == lines[2]
    assert float(lines[1].split(",")[list(CSV_COLUMNS).index("l2_b")]) == rec.l2_b


def test_write_json_non_finite(tmp_path):
    import json
    path = tmp_path / "r.json"
    write_json(path, {"a": float("inf"), "b": np.float64(1.5), "c": [np.int64(2), np.bool_(True)],
                      "d": float("nan")})
    assert json.loads(path.read_text()) == {"a": "inf", "b": 1.5, "c": [2, True], "d": "nan"}


# ---------------------------------------------------------------- initial data

@pytest.mark.parametrize("name", sorted(ANALYTIC_FIELDS))
def test_analytic_fields_are_solenoidal(name):
    cfg = parse_config(f"initial.kind = analytic\ninitial.name = {name}\nmodel.system = hallmhd_mixed\n"
                       "grid.n = 32\ninitial.h3 = none")
    state, d0, e0 = initial_state(cfg)
    assert (d0, e0) == (0.0, None)
    rec = record_from_state(cfg.model, state)
    assert rec.div_residuals["b"] <= 1e-13 and rec.div_residuals["u"] <= 1e-13


def test_random_initial_state_normalized():
    cfg = parse_config("grid.n = 32\ninitial.band = 6\ninitial.h3 = 2.0\nseed = 4")
    state, _, _ = initial_state(cfg)
    assert state.u is None
    assert state.b.hs(3) == pytest.approx(2.0, rel=1e-14)
    assert max(state.b.band()) <= 6


def test_snapshot_initial_state_restores_ledger(tmp_path):
    b = divfree(2, 6)
    path = tmp_path / "s.hmhd"
    write_snapshot(path, Snapshot(SimState(0.25, b, None, 9, 0.01), ModelSpec(), 0.5, 2.0))
    cfg = parse_config(f"initial.kind = snapshot\ninitial.path = {path}")
    state, d0, e0 = initial_state(cfg)
    assert (state.t, state.step_count, d0, e0) == (0.25, 9, 0.5, 2.0)
    bad = parse_config(f"initial.kind = snapshot\ninitial.path = {path}\nmodel.system = hallmhd_mixed")
    with pytest.raises(ConfigError):
        initial_state(bad)
