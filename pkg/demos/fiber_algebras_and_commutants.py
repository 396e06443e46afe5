"""Fiber algebras and their stabilizer commutants.

Builds the Clifford modules and exterior fibers, then computes the commutant
of the stabilizer action of a unit covector: the integer dimensions encode
which invariant projections exist, i.e. how the invariant states decompose.
"""

import numpy as np

from framelab import clifford as cl
from framelab import exterior as ex
from framelab.commutant import commutant, match_labels

rng = np.random.default_rng(0)

print("=" * 70)
print("Spinor fiber: Spin(n-1) commutants  (2 = {P+, P-}; 4 adds the chirality)")
print("=" * 70)
for n in range(3, 9):
    rep = cl.build_clifford(n)
    xi = rng.standard_normal(n)
    xi /= np.linalg.norm(xi)
    gens = cl.spin_stabilizer_generators(rep, xi)
    res = commutant(gens)
    Pp, Pm = cl.projections_pm(rep, xi)
    cands = {"P+": Pp, "P-": Pm}
    if rep.chirality is not None:
        cands["Gamma"] = rep.chirality
    labels = match_labels(res, cands)
    rp = commutant(gens, restriction=Pp).dimension
    print(f"   n={n}: rank {rep.rank:2d}  full dim {res.dimension}  "
          f"ran P+ dim {rp}  span contains {labels}")

print()
print("=" * 70)
print("Exterior fiber: SO(n-1) commutants on Lambda^p")
print("=" * 70)
print("   (2 = {P, 1-P}; middle degree splits ran P; p = (n+1)/2 splits 1-P)")
for n in range(3, 8):
    row = []
    for p in range(1, n):
        fiber = ex.ExteriorFiber(n, p)
        xi = rng.standard_normal(n)
        xi /= np.linalg.norm(xi)
        gens = ex.so_stabilizer_generators(fiber, xi)
        full = commutant(gens).dimension
        restr = commutant(gens, restriction=ex.projection_P(fiber, xi)).dimension
        row.append(f"p={p}:{full}/{restr}")
    print(f"   n={n}:  " + "  ".join(row))
print("   (entries are full dim / P-restricted dim)")

print()
print("=" * 70)
print("Invariant states on the spinor fiber")
print("=" * 70)
rep = cl.build_clifford(4)
xi = rng.standard_normal(4)
xi /= np.linalg.norm(xi)
a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
v = cl.fiber_states(rep, xi, a)
print(f"   omega(a)                      = {v['omega']:.6f}")
print(f"   (omega_+ + omega_-)/2         = {0.5 * (v['omega_plus'] + v['omega_minus']):.6f}")
print(f"   (omega_1 + omega_2)/2         = {0.5 * (v['omega_1'] + v['omega_2']):.6f}")
print("   -> the tracial state decomposes two distinct ways (not a simplex)")
