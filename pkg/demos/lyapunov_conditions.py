"""Lyapunov function, excessivity check and the power-law hypotheses.

Run:  python demos/lyapunov_conditions.py
"""
import numpy as np

from mehlerlab.experiments import excessivity_suite, lyapunov_ray
from mehlerlab.lyapunov import (LyapunovParams, check_H_A_mu, check_H_Sigma, check_hs_embedding,
                                h0_membership, make_gamma_sequence)
from mehlerlab.noise import NoiseSpec
from mehlerlab.rng import SeedSpec
from mehlerlab.spectral import dirichlet_spectrum

model = dirichlet_spectrum(1, 64)
noise = NoiseSpec.power_law(64, 1.0, "diagonal", gamma1=-1.0, gamma2=-1.5)
gs = make_gamma_sequence(0.4, 1.0, noise, model, theta=1.0)
params = LyapunovParams(a=0.1, p=2.3, q=1.0, gamma=0.4, gamma_seq=gs.values)

rep = check_H_A_mu(model, noise, params)
print(f"Conditions for (a, p) = (0.1, 2.3): {rep.status}")
for name, ok in rep.condition_flags.items():
    print(f"  {name:26s} {ok}")
print(f"  c1 <= {rep.c1_truncated:.4g} (tail exponent {rep.c1_tail_exponent:.2f}),"
      f" c2 = {rep.c2_truncated:.4g}")

print("\nV along r e_1 with common random numbers:")
for r, v, V, se, _ in lyapunov_ray(model, noise, params, [1, 5, 25], 20_000, SeedSpec(1)):
    print(f"  r = {r:4.0f}: v = {v:8.3f}   V = {V:.3f} +- {se:.3f}")

rows = excessivity_suite(model, noise, params, 4, [0.01, 0.1], 20_000, SeedSpec(2))
print(f"\nexp(-qh) P_h V <= V + 3 SE at 4 random states: {sum(r[6] for r in rows)}/{len(rows)}")

print("\nPower-law search for (a, p):")
for g2 in (-1.5, -0.5):
    hs = check_H_Sigma(1, 1.0, -0.2, g2)
    w = "none" if hs.witness is None else f"({hs.witness[0]:.3f}, {hs.witness[1]:.3f})"
    print(f"  gamma1 = -0.2, gamma2 = {g2}: feasible {hs.feasible}, witness {w}")

print("\nHilbert-Schmidt sums for sigma_k = k^g (d = 1, threshold g < 1/2):")
for g in (0.3, 0.5, 0.7):
    r = check_hs_embedding(model, NoiseSpec.power_law(64, 1.0, "diagonal", g, None))
    print(f"  g = {g}: {r.statuses[0]}")

p = LyapunovParams(0.24, 2.93, 1.0, 0.5, np.full(64, 0.5))
for rho in (1.0, (2 * 0.24 + 1) / 2.93, 0.0):
    print(f"x_k ~ k^-{rho:.3f}: {h0_membership(rho, model, p).status}")
