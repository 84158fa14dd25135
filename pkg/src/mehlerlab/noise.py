"""Symmetric Levy noise given by its characteristic exponent.

The exponent is ``lambda(xi) = ||Sigma_1 xi||^2 + ||Sigma_2 xi||^alpha`` with
diagonal ``Sigma_i e_k = sigma_{i,k} e_k``.  Two ways of attaching the stable
part to the modes are supported:

* ``diagonal``: independent scalar stable processes per mode,
  exponent ``sum_k sigma_{2,k}^alpha |xi_k|^alpha``;
* ``elliptical``: one rotationally coupled (sub-Gaussian) stable vector,
  exponent ``(sum_k sigma_{2,k}^2 xi_k^2)^{alpha/2}``.

The Gaussian part always has exponent ``sum_k sigma_{1,k}^2 xi_k^2`` -- note
there is no factor 1/2, so a Gaussian mode with scale ``sigma`` has variance
``2 sigma^2`` per unit time.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import SeedLike, as_generator


class NoiseFamily(str, enum.Enum):
    DIAGONAL = "diagonal"
    ELLIPTICAL = "elliptical"


@dataclass(frozen=True)
class NoiseSpec:
    """Per-mode noise scales and stability index.

    ``gamma1``/``gamma2`` record the power laws ``sigma_{i,k} = k**gamma_i``
    when the scales were generated that way; they are used for analytic tail
    exponents and are ``None`` for explicit scales.
    """

    alpha: float
    family: NoiseFamily
    sigma1: np.ndarray
    sigma2: np.ndarray
    gamma1: Optional[float] = None
    gamma2: Optional[float] = None

    def __post_init__(self):
        alpha = float(self.alpha)
        if not 0.0 < alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
        s1 = np.array(self.sigma1, dtype=float).ravel()
        s2 = np.array(self.sigma2, dtype=float).ravel()
        if s1.shape != s2.shape:
            raise ValueError("sigma1 and sigma2 must have the same length")
        for name, s in (("sigma1", s1), ("sigma2", s2)):
            if not np.all(np.isfinite(s)) or np.any(s < 0):
                raise ValueError(f"{name} must be finite and non-negative")
            s.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "family", NoiseFamily(self.family))
        object.__setattr__(self, "sigma1", s1)
        object.__setattr__(self, "sigma2", s2)

    @classmethod
    def power_law(cls, N: int, alpha: float, family="diagonal",
                  gamma1: Optional[float] = None, gamma2: Optional[float] = None) -> "NoiseSpec":
        """Scales ``sigma_{i,k} = k**gamma_i``; a ``None`` exponent switches that part off."""
        k = np.arange(1, int(N) + 1, dtype=float)
        s1 = k**gamma1 if gamma1 is not None else np.zeros_like(k)
        s2 = k**gamma2 if gamma2 is not None else np.zeros_like(k)
        return cls(alpha, family, s1, s2, gamma1, gamma2)

    @classmethod
    def zero(cls, N: int, alpha: float = 1.0, family="diagonal") -> "NoiseSpec":
        z = np.zeros(int(N))
        return cls(alpha, family, z, z)

    @property
    def N(self) -> int:
        return int(self.sigma1.size)

    @property
    def has_gaussian(self) -> bool:
        return bool(np.any(self.sigma1 > 0))

    @property
    def has_stable(self) -> bool:
        return bool(np.any(self.sigma2 > 0))

    def truncate(self, n: int) -> "NoiseSpec":
        return NoiseSpec(self.alpha, self.family, self.sigma1[:n], self.sigma2[:n],
                         self.gamma1, self.gamma2)


def exponent_parts(noise: NoiseSpec, xi) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian and stable parts of the characteristic exponent at ``xi``."""
    xi = np.asarray(xi, dtype=float)
    gauss = np.sum((noise.sigma1 * xi) ** 2, axis=-1)
    if noise.family is NoiseFamily.DIAGONAL:
        stable = np.sum(np.abs(noise.sigma2 * xi) ** noise.alpha, axis=-1)
    else:
        stable = np.sum((noise.sigma2 * xi) ** 2, axis=-1) ** (noise.alpha / 2.0)
    return gauss, stable


def characteristic_exponent(noise: NoiseSpec, xi):
    """``lambda(xi)``; real and non-negative since the noise is symmetric."""
    gauss, stable = exponent_parts(noise, xi)
    return gauss + stable


def sample_sas(alpha: float, scale: float = 1.0, seed: SeedLike = None, size=None):
    """Symmetric alpha-stable draws with characteristic function ``exp(-|scale s|^alpha)``.

    Uses the Chambers-Mallows-Stuck transform, evaluated in log space so that
    small ``alpha`` does not overflow.  ``alpha == 1`` (Cauchy) and
    ``alpha == 2`` (Gaussian with variance ``2 scale^2``) take exact branches.
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    scale = np.asarray(scale, dtype=float)
    if np.any(scale < 0):
        raise ValueError("scale must be non-negative")
    rng = as_generator(seed)
    if alpha == 2.0:
        return scale * np.sqrt(2.0) * rng.standard_normal(size)
    V = rng.uniform(-np.pi / 2, np.pi / 2, size)
    if alpha == 1.0:
        return scale * np.tan(V)
    W = rng.standard_exponential(size)
    return scale * sas_transform(alpha, V, W)


def sas_transform(alpha: float, V, W):
    """Chambers-Mallows-Stuck map from ``V ~ U(-pi/2, pi/2)``, ``W ~ Exp(1)`` to a unit SaS draw."""
    if alpha == 1.0:
        return np.tan(V)
    sin_av = np.sin(alpha * V)
    # V = 0 maps to 0 through log(0) = -inf
    with np.errstate(divide="ignore"):
        log_abs = (np.log(np.abs(sin_av)) - np.log(np.cos(V)) / alpha
                   + (1.0 - alpha) / alpha * (np.log(np.cos((1.0 - alpha) * V)) - np.log(W)))
    return np.sign(sin_av) * np.exp(log_abs)


def sample_positive_stable(alpha_half: float, seed: SeedLike = None, size=None):
    """One-sided stable draws ``S > 0`` with ``E exp(-u S) = exp(-u**alpha_half)``.

    Kanter's representation: with ``U ~ Uniform(0, pi)`` and ``W ~ Exp(1)``,
    ``S = sin(aU) / sin(U)^{1/a} * (sin((1-a)U) / W)^{(1-a)/a}``.
    """
    a = float(alpha_half)
    if not 0.0 < a < 1.0:
        raise ValueError(f"alpha_half must lie in (0, 1), got {a}")
    rng = as_generator(seed)
    U = rng.uniform(0.0, np.pi, size)
    W = rng.standard_exponential(size)
    log_s = (np.log(np.sin(a * U)) - np.log(np.sin(U)) / a
             + (1.0 - a) / a * (np.log(np.sin((1.0 - a) * U)) - np.log(W)))
    return np.exp(log_s)


def sample_elliptical_stable(noise: NoiseSpec, seed: SeedLike = None, size=None):
    """Sub-Gaussian stable vectors with CF ``exp(-(sum_k sigma_{2,k}^2 xi_k^2)^{alpha/2})``.

    ``X = sqrt(2 S) G`` where ``G`` is centred Gaussian with per-mode standard
    deviation ``sigma_{2,k}`` and ``S`` is one-sided ``alpha/2``-stable.
    Returns shape ``size + (N,)``.
    """
    rng = as_generator(seed)
    shape = () if size is None else tuple(np.atleast_1d(size))
    S = sample_positive_stable(noise.alpha / 2.0, rng, shape if shape else None)
    G = rng.standard_normal(shape + (noise.N,)) * noise.sigma2
    return np.sqrt(2.0 * np.asarray(S))[..., None] * G
