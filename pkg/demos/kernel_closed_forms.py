"""Weighted Bergman kernels on the unit disk against their closed forms.

For V = 0 the kernel is 1/(pi (1 - |z|^2)^2). For V = log|z| and integer m the
first m monomials are not square integrable, and the kernel picks up a factor
|z|^(2m). Both engines (diagonal moments and a whitened Gram matrix) are shown.

    python demos/kernel_closed_forms.py
"""
import math

import numpy as np

from bergmanlab import catalog, engine_for

z = np.array([0.0, 0.25, 0.5, 0.75, 0.9])
print(f"{'|z|':>5} {'K toric':>22} {'K gram':>22} {'closed form':>22}")
zero = catalog("zero")
kt, _ = engine_for(zero, 1, engine="toric").kernel(z)
kg, _ = engine_for(zero, 1, engine="gram").kernel(z)
for zz, a, b in zip(z, kt, kg):
    print(f"{zz:5.2f} {a:22.15g} {b:22.15g} {1 / (math.pi * (1 - zz * zz) ** 2):22.15g}")

print("\nlog-pole weight V = log|z|: K_m(z) / (|z|^(2m) / (pi (1 - |z|^2)^2))")
pole = catalog("log_pole", gamma=1.0)
for m in (1, 2, 4, 8):
    k, tail = engine_for(pole, m).kernel(z[1:])
    ratio = k / (z[1:] ** (2 * m) / (math.pi * (1 - z[1:] ** 2) ** 2))
    print(f"m={m}: " + "  ".join(f"{r:.12f}" for r in ratio) + f"   max rel tail {tail.max():.1e}")
