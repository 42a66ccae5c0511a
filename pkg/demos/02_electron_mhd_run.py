"""A short anisotropic electron-MHD run with its energy ledger.

Run with ``python3 demos/02_electron_mhd_run.py``.
"""
# %% Initial data: random band-limited field with unit H3 norm
from hallmhd.diagnostics import energy_budget
from hallmhd.evolve import StepperConfig, simulate
from hallmhd.io import initial_state, parse_config

cfg = parse_config("""
model.system = electron_aniso
model.alpha = 0.6
grid.n = 64
initial.band = 8
initial.h3 = 1.0
seed = 0
""")
state, _, _ = initial_state(cfg)

# %% Integrate to t = 0.2 and record every 20 steps
res = simulate(cfg.model, state, StepperConfig(dt=1e-3, t_end=0.2, diagnostics_stride=20))
print(f"{'t':>6} {'energy':>12} {'dissipated':>12} {'|b|_H3':>8} {'defect':>9}")
for r in res.records:
    print(f"{r.t:6.3f} {r.energy:12.6e} {r.dissipated:12.6e} {r.hs_norms[3]:8.4f} {r.energy_defect:9.1e}")

# %% energy + dissipated is conserved to the stepper accuracy
print(f"worst energy defect {energy_budget(res.records):.2e}")
