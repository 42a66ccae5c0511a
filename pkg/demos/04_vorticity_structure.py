"""Structure of the 2.5-D Hall-MHD system: vortex stretching vanishes and z3 closes.

Run with ``python3 demos/04_vorticity_structure.py``.
"""
# %% Planar fields with a vertical component on the 2-torus
from hallmhd import Grid, random_divfree
from hallmhd.suite import hall_checks, vorticity_checks

g = Grid.square(2, 64)
u, b = random_divfree(g, seed=3, band=8), random_divfree(g, seed=4, band=8)

# %% (omega . grad) u3 and (j . grad) b3 vanish for fields independent of x3,
# and the z3 = w3 - eps b3 equation assembles from the w3 and b3 equations
for c in vorticity_checks(u, b):
    print(f"{c.name:<48} residual {c.abs_residual:.1e}")

# %% The Hall term is energy neutral and has an equivalent advective form
for c in hall_checks(b):
    print(f"{c.name:<48} relative residual {c.abs_residual / c.scale:.1e}")
