"""Demailly approximants V_m = (1/2m) log K_{mV} converging to the envelope.

For the psh weight V = 0 the error at z = 0 is exactly log(pi)/(2m). For the
non-psh weight V = -|z|^2 the approximants converge to the envelope, which is
the constant -1, not to V itself.

    python demos/demailly_convergence.py
"""
import math

import numpy as np

from bergmanlab import Domain, GridSpec, catalog, converge_run, make_grid, psh_envelope_toric

zero = catalog("zero")
rep = converge_run(zero, points=np.array([0j]), envelope=zero)
print("V = 0 at z = 0")
for m in rep.m_schedule:
    print(f"  m={m:3d}  V_m = {rep.values_at(m)[0]: .12f}   -log(pi)/2m = {-math.log(math.pi) / (2 * m): .12f}")

w = catalog("neg_abs_square")
pts = make_grid(Domain.disk(), GridSpec("radial", 6, 0.2))
rep = converge_run(w, points=pts, envelope=psh_envelope_toric(w))
print("\nV = -|z|^2, envelope = -1")
print("  |z|    " + "  ".join(f"{x:7.3f}" for x in pts[:, 0].real))
for m in rep.m_schedule:
    print(f"  m={m:3d} " + "  ".join(f"{x:7.4f}" for x in rep.values_at(m)))
s = rep.summary
print(f"\nmax error at m=64: {s['max_error_at_mmax']:.4f}, fitted rate m^{s['rate_exponent']:.2f}")
