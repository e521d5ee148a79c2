"""Maximum-likelihood reconstruction from a shot-noise-limited Wigner grid.

Run with ``python3 demos/reconstruction.py``. Takes about a minute.
"""
import math

import numpy as np

from bellcat import protocol as pr
from bellcat import tomography as tm
from bellcat.noise import NoiseModel

beta = math.sqrt(3)
noise = NoiseModel()
rho = pr.idle_until_detection(pr.prepare_bell_cat(beta, noise=noise), noise)
target = pr.bell_cat_target(beta)

# 4000 shots per phase-space point, split evenly over the detector permutations.
grid = tm.joint_wigner_sampled(rho, tm.GridSpec(), 4000, noise, seed=0)
fit = tm.mle_reconstruct(grid, n_max=12, target=target)
print(f"converged after {fit.iterations} iterations")
print(f"fitted visibility {fit.scale:.3f}, fidelity to the Bell-cat {fit.fidelity:.3f}")
print(f"residuals: mean {fit.residual_mean:+.4f}, sigma {fit.residual_sigma:.4f}")

# Residuals look like shot noise: a histogram centred on zero.
counts, edges = np.histogram(fit.residuals.ravel(), bins=9, range=(-0.06, 0.06))
for c, lo in zip(counts, edges):
    print(f"  {lo:+.3f} {'#' * int(60 * c / counts.max())}")

# Resampling the residuals gives a confidence interval for the fidelity.
_, (lo, hi), _ = tm.bootstrap_ci(grid, target, n_resamples=10, seed=1, max_iter=500)
print(f"95% bootstrap interval: [{lo:.3f}, {hi:.3f}]")
