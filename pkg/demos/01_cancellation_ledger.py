"""Walk through the term ledger of the H2 Hall pairing for one random field.

Run with ``python3 demos/01_cancellation_ledger.py``.
"""
# %% A random solenoidal field on the 3-torus
from hallmhd import Grid, random_divfree
from hallmhd.ledger import build_ledger, check_cancellations, check_master_identity, surviving_sum

b = random_divfree(Grid.square(3, 32), seed=1, band=5)
led = build_ledger(b)
print(f"{len(led.labels())} labelled integrals, pairing = {led.pairing:.6e}")

# %% The pair cancellations: each pair sums to zero up to roundoff
for c in check_cancellations(led):
    print(f"{c.name:<28} residual/scale = {c.abs_residual / c.scale:.1e}")

# %% Only the surviving terms are needed to reproduce the pairing
total, parts = surviving_sum(led)
print(f"surviving sum {total:.6e} from {len(parts)} terms")
rep = check_master_identity(b, led)
print("master identity", "holds" if rep.passed else "FAILS")

# %% Flipping the sign of one label breaks the ledger and the check names it
bad = build_ledger(b, fault={"I_{1,3,5}": -1.0})
print("with I_{1,3,5} negated:", bad.consistency.first_failure().name)
