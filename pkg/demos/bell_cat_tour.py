"""Prepare a Bell-cat, look at its joint Wigner function and estimate its fidelity.

Run with ``python3 demos/bell_cat_tour.py``. Takes about half a minute.
"""
import math

from bellcat import hilbert as hs
from bellcat import logical as lg
from bellcat import protocol as pr
from bellcat import tomography as tm
from bellcat.noise import NoiseModel

beta = math.sqrt(3)

# Noiseless preparation: the dispersive wait maps |+>|beta> to the Bell-cat.
psi = pr.prepare_bell_cat(beta)
target = pr.bell_cat_target(beta)
print(f"noiseless preparation fidelity: {hs.fidelity(psi, target):.6f}")

# The same sequence with every noise channel of the default model switched on,
# then the idle time before the sequential detectors fire.
noise = NoiseModel()
rho = pr.idle_until_detection(pr.prepare_bell_cat(beta, noise=noise), noise)

# Infinite-shot grid as the noisy detectors would record it.
grid = tm.joint_wigner_expected(rho, tm.GridSpec(), noise)
f = tm.fidelity_from_wigner(grid.normalized(), target)
print(f"grid visibility V = {grid.visibility:.3f}")
print(f"normalized Wigner fidelity F = {f:.3f}")

# The four Bell-state correlations as raw detector averages.
corr = lg.measured_correlations(rho, beta, noise)
for k, v in corr.items():
    print(f"  <{k[0]} {k[1]}_c> = {v:+.3f}")
print(f"DFE = {lg.dfe(corr):.3f}  vs  V*F = {grid.visibility * f:.3f}")
print(f"witness = {lg.witness(corr):+.3f} (negative means entangled)")
