"""Finite-chain potential theory: resolvents, balayage three ways, polar sets, nests.

Run:  python demos/potential_theory.py
"""
import numpy as np

from mehlerlab.potential import (birth_death_chain, hitting_balayage, is_excessive, mc_balayage,
                                 nest_check, polar_null_set, random_chain, reduced_lp, resolvent,
                                 two_state_chain)
from mehlerlab.rng import SeedSpec

chain = two_state_chain(1.0)
print("Two-state chain, rate 1, alpha = 1, hit state 1 with u = 1:")
for name, res in (("LP", reduced_lp(chain, 1.0, [1], np.ones(2))),
                  ("hitting", hitting_balayage(chain, 1.0, [1], np.ones(2))),
                  ("Monte Carlo", mc_balayage(chain, 1.0, [1], np.ones(2), 100_000, SeedSpec(1)))):
    print(f"  {name:12s} {np.round(res.values, 4)}")

v = resolvent(chain, 1.0) @ np.array([1.0, 0.0])
print(f"\nU_1 f for f = (1, 0): {np.round(v, 4)}, excessive: {is_excessive(chain, 1.0, v).excessive}")
print(f"(1, -1) excessive: {is_excessive(chain, 1.0, np.array([1.0, -1.0])).excessive}")

rng = np.random.default_rng(0)
worst = 0.0
for i in range(200):
    c = random_chain(int(rng.integers(2, 9)), SeedSpec(2, (i,)))
    u = resolvent(c, 1.0) @ rng.uniform(0, 1, c.n_states)
    A = np.flatnonzero(rng.uniform(size=c.n_states) < 0.5)
    worst = max(worst, np.abs(reduced_lp(c, 1.0, A, u).values - hitting_balayage(c, 1.0, A, u).values).max())
print(f"\nLP against hitting system on 200 random chains (excessive u): max gap {worst:.1e}")

Q = np.zeros((4, 4))
Q[0, 1] = Q[1, 0] = Q[2, 3] = Q[3, 2] = 1.0
np.fill_diagonal(Q, -Q.sum(1))
from mehlerlab.potential import FiniteChain
print(f"Two components, A = {{0}}: states never reaching A = {polar_null_set(FiniteChain(Q), [0])}")

bd = birth_death_chain(50, 0.2, 1.0)
levels = [10, 15, 20, 25, 30, 35, 40]
rep = nest_check(bd, 1.0, [list(range(n + 1)) for n in levels], 1000, SeedSpec(3))
print("\nBirth-death chain on {0..50}, F_n = {0..n}:")
for n, b, f in zip(levels, rep.balayage_max, rep.exit_fraction):
    print(f"  n = {n}: max balayage of F_n^c {b:.3e}, exits before t = {rep.horizon:g}: {f:.3f}")
print(f"verdicts: exact {rep.analytic_verdict}, Monte Carlo {rep.mc_verdict}")
