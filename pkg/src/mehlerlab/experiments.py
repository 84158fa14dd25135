"""Experiment runners shared by the command line, the demos and the tests."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lyapunov import LyapunovParams, check_excessivity, eval_V, eval_v
from .mehler import check_M2, log_mu_hat, sample_mu
from .noise import NoiseSpec
from .rng import SeedLike, as_generator, as_seedspec
from .spectral import SpectralModel


def default_frequencies(N: int) -> np.ndarray:
    """Five test frequencies probing low, mixed, spread-out and high modes."""
    k = np.arange(1, N + 1, dtype=float)
    xs = np.zeros((5, N))
    xs[0, 0] = 1.0
    xs[1, 0] = 4.0
    xs[2] = 2.0 / k
    xs[3, : min(N, 4)] = [2.0, -1.5, 1.0, -0.5][: min(N, 4)]
    xs[4, -1] = 10.0
    xs[4, 0] = 0.5
    return xs


@dataclass(frozen=True)
class CFRow:
    t: float
    xi_id: int
    analytic: float
    empirical: float
    stderr: float

    @property
    def z_score(self) -> float:
        return abs(self.empirical - self.analytic) / self.stderr if self.stderr > 0 else (
            0.0 if self.empirical == self.analytic else math.inf)


def cf_test(model: SpectralModel, noise: NoiseSpec, t: float, n: int, seed: SeedLike,
            frequencies: Optional[np.ndarray] = None) -> list[CFRow]:
    """Empirical CF ``mean cos<xi, Y>`` of ``n`` draws from ``mu_t`` against ``mu_hat``."""
    freqs = default_frequencies(model.truncation_N) if frequencies is None else np.atleast_2d(
        np.asarray(frequencies, dtype=float))
    Y = sample_mu(model, noise, t, seed, size=n)
    rows = []
    for i, xi in enumerate(freqs, start=1):
        c = np.cos(Y @ xi)
        rows.append(CFRow(float(t), i, math.exp(log_mu_hat(model, noise, xi, t)),
                          float(c.mean()), float(c.std(ddof=1) / math.sqrt(n))))
    return rows


def m2_test(model: SpectralModel, noise: NoiseSpec, cases: int, t_max: float,
            seed: SeedLike) -> list[tuple]:
    """Rows ``(t, s, xi_id, residual)`` for random times in (0, t_max] and Gaussian ``xi``."""
    rng = as_generator(seed)
    rows = []
    for i in range(1, cases + 1):
        t, s = rng.uniform(0.0, t_max, 2)
        t, s = float(t_max - t), float(t_max - s)  # [0, t_max) onto (0, t_max]
        xi = rng.standard_normal(model.truncation_N)
        rows.append((t, s, i, check_M2(model, noise, t, s, xi)))
    return rows


def ray_states(model: SpectralModel, radii: Sequence[float]) -> np.ndarray:
    X = np.zeros((len(radii), model.truncation_N))
    X[:, 0] = radii
    return X


def lyapunov_ray(model: SpectralModel, noise: NoiseSpec, params: LyapunovParams,
                 radii: Sequence[float], n: int, seed: SeedLike, ceiling: float = 1e12) -> list[tuple]:
    """Rows ``(r, v, V, stderr, diverging)`` along ``r e_1``, all with the same random numbers."""
    spec = as_seedspec(seed)
    rows = []
    for r, x in zip(radii, ray_states(model, radii)):
        est = eval_V(x, model, noise, params, n, spec.child("V"), ceiling)
        rows.append((float(r), eval_v(x, model, params).total, est.value, est.std_error,
                     est.diverging))
    return rows


def random_states(model: SpectralModel, count: int, seed: SeedLike) -> np.ndarray:
    """States with coefficients ``Z_k / k``, ``Z_k`` standard normal."""
    rng = as_generator(seed)
    k = np.arange(1, model.truncation_N + 1, dtype=float)
    return rng.standard_normal((count, model.truncation_N)) / k


def excessivity_suite(model: SpectralModel, noise: NoiseSpec, params: LyapunovParams,
                      n_states: int, hs: Sequence[float], n: int, seed: SeedLike,
                      ceiling: float = 1e12) -> list[tuple]:
    """Rows ``(state, h, discounted, discounted_se, reference, reference_se, passed)``."""
    spec = as_seedspec(seed)
    states = random_states(model, n_states, spec.child("states"))
    rows = []
    for i, x in enumerate(states):
        for j, h in enumerate(hs):
            c = check_excessivity(x, model, noise, params, float(h), n,
                                  spec.child("check", i, j), ceiling)
            rows.append((i, float(h), c.discounted.value, c.discounted.std_error,
                         c.reference.value, c.reference.std_error, c.passed))
    return rows
