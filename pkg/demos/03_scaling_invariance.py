"""Rescaling b(x, t) -> lam^(2 beta - 3) b(lam x, lam^(2 beta) t) maps solutions to solutions.

Run with ``python3 demos/03_scaling_invariance.py``.
"""
# %% Band-limited data so the rescaled field still fits on the grid
from hallmhd import Grid, random_divfree
from hallmhd.diagnostics import scaling_test
from hallmhd.evolve import StepperConfig

b0 = random_divfree(Grid.square(2, 32), seed=7, band=4)
b0 = b0 * (1.0 / b0.hs(3))

# %% At beta = 3/2 the L2 norm per cell is invariant; elsewhere it picks up lam^(4 beta - 6)
for beta in (1.0, 1.5, 2.0):
    rep = scaling_test(beta, 2, b0, 0.02, StepperConfig(dt=1e-4), checkpoints=4)
    print(f"beta {beta}: trajectory mismatch {rep.mismatch:.1e}, "
          f"L2 prefactor {rep.prefactor:.6f} (expected {rep.prefactor_expected:.6f})")
