"""Path simulation and the convergent/divergent dichotomy of the stable scales.

Run:  python demos/path_dichotomy.py [n_paths]
"""
import sys

import numpy as np

from mehlerlab.noise import NoiseSpec
from mehlerlab.paths import dichotomy_experiment, regularity_stats, simulate_path
from mehlerlab.rng import SeedSpec
from mehlerlab.spectral import dirichlet_spectrum

n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 50

model = dirichlet_spectrum(1, 64)
for family in ("diagonal", "elliptical"):
    noise = NoiseSpec.power_law(64, 1.0, family, -1.0, -1.5)
    path = simulate_path(model, noise, np.zeros(64), np.linspace(0, 1, 201), SeedSpec(1))
    st = regularity_stats(path, window=20)
    print(f"{family:10s} path: largest jump {st.max_jump:.4f}, largest oscillation {st.oscillation:.4f}")

print(f"\nMedian largest jump, alpha = 0.5, {n_paths} paths (slope of log median against log N):")
res = dichotomy_experiment(0.5, [-3.0, -2.0, -1.0], [16, 32, 64, 128, 256, 512, 1024], 1.0, 200,
                           n_paths, SeedSpec(20240607))
for g2 in (-3.0, -2.0, -1.0):
    meds = [r.median_max_jump for r in res.rows if r.gamma2 == g2]
    print(f"  gamma2 = {g2}: {res.regimes[g2]:20s} slope {res.slopes[g2]:.3f}"
          f" (reference {res.reference_slopes[g2]:.3f});"
          f" medians {meds[0]:.3g} .. {meds[-1]:.3g}")
