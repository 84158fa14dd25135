"""Transition measures of the Levy-driven OU semigroup and Monte Carlo ``P_t``.

For drift eigenvalues ``lambda_k < 0`` and noise exponent ``lambda(.)``, the
stochastic convolution at time ``t`` has law ``mu_t`` with

    log mu_hat_t(xi) = - int_0^t lambda(T_s^* xi) ds,

and the transition semigroup is ``P_t f(x) = E f(T_t x + Y_t)``, ``Y_t ~ mu_t``.
All comparisons are carried out on logs of characteristic functions.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .noise import NoiseFamily, NoiseSpec, sample_elliptical_stable, sample_sas
from .rng import SeedLike, as_generator
from .spectral import SpectralModel

QUAD_RTOL = 1e-8
ELLIPTICAL_SUBSTEPS = 64


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    n_samples: int
    diverging: bool = False

    @classmethod
    def from_samples(cls, samples, diverging: bool = False) -> "MCEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n == 0:
            raise ValueError("no samples")
        if np.all(samples == samples.flat[0]):
            # degenerate sample: report it exactly
            return cls(float(samples.flat[0]), 0.0, n, diverging)
        se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(samples.mean()), se, n, diverging)


def t_infinity(model: SpectralModel) -> float:
    """Finite stand-in for ``t = inf``: ``exp(2 lambda_1 t) < 1e-16``."""
    return math.log(1e16) / (2.0 * abs(model.eigenvalues[0])) * (1 + 1e-9)


def decay_integral(beta: float, model: SpectralModel, t: float) -> np.ndarray:
    """``g_beta(t, k) = int_0^t exp(beta lambda_k s) ds`` for every mode."""
    lam_abs = model.abs_eigenvalues
    if math.isinf(t):
        return 1.0 / (beta * lam_abs)
    return -np.expm1(-beta * lam_abs * t) / (beta * lam_abs)


def _check_sizes(model: SpectralModel, noise: NoiseSpec):
    if model.truncation_N != noise.N:
        raise ValueError(f"model has {model.truncation_N} modes but noise has {noise.N}")


def _stable_integrand_weights(noise, xi):
    return (noise.sigma2 * xi) ** 2


def _elliptical_stable_integral(model: SpectralModel, noise: NoiseSpec, xi, t: float) -> float:
    """``int_0^t (sum_k c_k exp(2 lambda_k s))^{alpha/2} ds`` by panelled quadrature."""
    c = _stable_integrand_weights(noise, xi)
    keep = c > 0
    if not np.any(keep) or t == 0:
        return 0.0
    c, lam = c[keep], model.eigenvalues[keep]
    half_alpha = noise.alpha / 2.0

    def f(s):
        return np.sum(c * np.exp(2.0 * lam * s)) ** half_alpha

    # panels double in length from the fastest active time scale
    edges = [0.0]
    h = 1.0 / abs(lam[-1])
    while edges[-1] + h < t and edges[-1] + h < 1e4 / abs(lam[0]):
        edges.append(edges[-1] + h)
        h *= 2.0
    edges.append(t)
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            try:
                val, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(f"quadrature failed on [{lo}, {hi}]: {exc}", float("nan"))
            total += val
            err += e
    if err > QUAD_RTOL * abs(total) + 1e-300:
        raise QuadratureError("quadrature tolerance not met", err)
    return total


def log_mu_hat(model: SpectralModel, noise: NoiseSpec, xi, t: float) -> float:
    """``log mu_hat_t(xi) = -int_0^t lambda(T_s^* xi) ds`` (always <= 0)."""
    _check_sizes(model, noise)
    if t < 0:
        raise ValueError("t must be non-negative")
    xi = model.check_coefs(xi)
    if t == 0:
        return 0.0
    gauss = np.sum(noise.sigma1**2 * xi**2 * decay_integral(2.0, model, t), axis=-1)
    if noise.family is NoiseFamily.DIAGONAL:
        stable = np.sum(np.abs(noise.sigma2 * xi) ** noise.alpha
                        * decay_integral(noise.alpha, model, t), axis=-1)
    else:
        if xi.ndim > 1:
            stable = np.array([_elliptical_stable_integral(model, noise, row, t)
                               for row in xi.reshape(-1, xi.shape[-1])]).reshape(xi.shape[:-1])
        else:
            stable = _elliptical_stable_integral(model, noise, xi, t)
    out = -(gauss + stable)
    return float(out) if np.ndim(out) == 0 else out


def mu_hat(model: SpectralModel, noise: NoiseSpec, xi, t: float):
    """Characteristic function of ``mu_t`` at ``xi``; a real number in (0, 1]."""
    return np.exp(log_mu_hat(model, noise, xi, t))


def check_M2(model: SpectralModel, noise: NoiseSpec, t: float, s: float, xi) -> float:
    """Residual of ``mu_hat_{t+s}(xi) = mu_hat_t(T_s^* xi) mu_hat_s(xi)`` in log form."""
    if t < 0 or s < 0:
        raise ValueError("t and s must be non-negative")
    xi = model.check_coefs(xi)
    shifted = np.exp(model.eigenvalues * s) * xi
    lhs = log_mu_hat(model, noise, xi, t + s)
    rhs = log_mu_hat(model, noise, shifted, t) + log_mu_hat(model, noise, xi, s)
    return float(abs(lhs - rhs))


def check_M1(model: SpectralModel, noise: NoiseSpec, xi, t_sequence: Sequence[float]) -> np.ndarray:
    """``|mu_hat_t(xi) - 1|`` along a sequence of times decreasing to zero."""
    ts = np.asarray(t_sequence, dtype=float)
    if np.any(ts <= 0) or np.any(np.diff(ts) >= 0):
        raise ValueError("t_sequence must be positive and strictly decreasing")
    return np.array([-math.expm1(log_mu_hat(model, noise, xi, t)) for t in ts])


def _gaussian_part(model, noise, t, rng, shape):
    std = np.sqrt(2.0 * decay_integral(2.0, model, t)) * noise.sigma1
    return rng.standard_normal(shape + (model.truncation_N,)) * std


def _diagonal_stable_part(model, noise, t, rng, shape):
    scale = noise.sigma2 * decay_integral(noise.alpha, model, t) ** (1.0 / noise.alpha)
    return sample_sas(noise.alpha, 1.0, rng, shape + (model.truncation_N,)) * scale


def elliptical_substep_weights(model: SpectralModel, alpha: float, dt: float) -> np.ndarray:
    """Per-mode weights making each sub-step's marginal scale exact.

    A sub-step contribution ``int_0^dt exp(lambda_k (dt-u)) dZ_k(u)`` is
    replaced by ``w_k dt^{1/alpha} E_k`` with ``E`` a unit elliptical draw and
    ``w_k = (g_alpha(dt, k) / dt)^{1/alpha}``.  The joint law is approximate
    and converges as ``dt -> 0``.
    """
    return (decay_integral(alpha, model, dt) / dt) ** (1.0 / alpha)


def _elliptical_stable_part(model, noise, t, rng, shape, substeps):
    dt = t / substeps
    decay = np.exp(model.eigenvalues * dt)
    w = elliptical_substep_weights(model, noise.alpha, dt) * dt ** (1.0 / noise.alpha)
    y = np.zeros(shape + (model.truncation_N,))
    for _ in range(substeps):
        y = decay * y + w * sample_elliptical_stable(noise, rng, shape if shape else None)
    return y


def sample_mu(model: SpectralModel, noise: NoiseSpec, t: float, seed: SeedLike = None,
              size: Optional[int] = None, substeps: int = ELLIPTICAL_SUBSTEPS) -> np.ndarray:
    """Draws from ``mu_t``; shape ``(N,)`` or ``(size, N)``.

    Diagonal noise is sampled exactly: mode ``k`` is
    ``sqrt(2 g_2) sigma_{1,k} Y_1 + g_alpha^{1/alpha} sigma_{2,k} Y_2``.
    The elliptical stable part is built from ``substeps`` sub-Gaussian
    increments convolved with the semigroup (grid-converged, not exact).
    """
    _check_sizes(model, noise)
    if not t > 0:
        raise ValueError("t must be positive")
    if math.isinf(t) and noise.family is NoiseFamily.ELLIPTICAL:
        t = t_infinity(model)
    rng = as_generator(seed)
    shape = () if size is None else (int(size),)
    y = np.zeros(shape + (model.truncation_N,))
    if noise.has_gaussian:
        y += _gaussian_part(model, noise, t, rng, shape)
    if noise.has_stable:
        if noise.family is NoiseFamily.DIAGONAL:
            y += _diagonal_stable_part(model, noise, t, rng, shape)
        else:
            y += _elliptical_stable_part(model, noise, t, rng, shape, substeps)
    return y


def sample_mu_at_times(model: SpectralModel, noise: NoiseSpec, times, seed: SeedLike = None,
                       substeps: int = ELLIPTICAL_SUBSTEPS) -> np.ndarray:
    """One draw from ``mu_{t_i}`` for each entry of ``times`` (shape ``(n, N)``)."""
    _check_sizes(model, noise)
    times = np.asarray(times, dtype=float)
    rng = as_generator(seed)
    n, N = times.size, model.truncation_N
    lam_abs = model.abs_eigenvalues
    y = np.zeros((n, N))
    if noise.family is NoiseFamily.DIAGONAL:
        tt = times[:, None]
        if noise.has_gaussian:
            g2 = -np.expm1(-2.0 * lam_abs * tt) / (2.0 * lam_abs)
            y += rng.standard_normal((n, N)) * np.sqrt(2.0 * g2) * noise.sigma1
        if noise.has_stable:
            a = noise.alpha
            ga = -np.expm1(-a * lam_abs * tt) / (a * lam_abs)
            y += sample_sas(a, 1.0, rng, (n, N)) * ga ** (1.0 / a) * noise.sigma2
        return y
    for i, t in enumerate(times):
        y[i] = sample_mu(model, noise, float(t), rng, substeps=substeps) if t > 0 else 0.0
    return y


def mehler_apply(model: SpectralModel, noise: NoiseSpec, t: float, f: Callable, x, n: int,
                 seed: SeedLike = None, vectorized: bool = True) -> MCEstimate:
    """Monte Carlo estimate of ``P_t f(x) = E f(T_t x + Y_t)``.

    ``f`` receives a batch of states with shape ``(n, N)`` and must return
    ``n`` values; pass ``vectorized=False`` to have it called row by row.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x = model.check_coefs(x)
    base = np.exp(model.eigenvalues * t) * x
    if t == 0:
        states = np.broadcast_to(base, (n, model.truncation_N))
    else:
        states = base + sample_mu(model, noise, t, seed, size=n)
    vals = f(states) if vectorized else np.array([f(row) for row in states])
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (n,))
    return MCEstimate.from_samples(vals)
