"""Absolute moments of the scalar laws that appear as per-mode marginals."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special


def gaussian_abs_moment(r: float) -> float:
    """``E|Z|^r`` for a standard normal ``Z``."""
    return 2 ** (r / 2) * math.gamma((r + 1) / 2) / math.sqrt(math.pi)


def stable_abs_moment(r: float, alpha: float) -> float:
    """``E|Y|^r`` for symmetric stable ``Y`` with CF ``exp(-|s|^alpha)``; infinite if ``r >= alpha``."""
    if alpha >= 2.0:
        return 2**r * math.gamma((r + 1) / 2) / math.sqrt(math.pi)
    if r >= alpha:
        return math.inf
    return (2**r * math.gamma((1 + r) / 2) * math.gamma(1 - r / alpha)
            / (math.gamma(1 - r / 2) * math.sqrt(math.pi)))


def abs_moment_cf(r: float, variance: float, stable_scale: float, alpha: float) -> float:
    """``E|X|^r`` for ``X = N(0, variance) + stable_scale * Y`` via the CF integral.

    Uses ``E|X|^r = 2 Gamma(r+1) sin(pi r/2)/pi * int_0^inf (1 - phi(s)) s^{-r-1} ds``,
    valid for ``0 < r < 2``.
    """
    if not 0 < r < 2:
        raise ValueError("order must lie in (0, 2)")
    if stable_scale > 0 and r >= alpha:
        return math.inf
    if variance == 0 and stable_scale == 0:
        return 0.0

    def integrand(s):
        return -np.expm1(-0.5 * variance * s * s - (stable_scale * s) ** alpha) * s ** (-r - 1)

    # natural scale of the law
    width = max(math.sqrt(variance), stable_scale)
    total = 0.0
    for lo, hi in ((0.0, 1.0 / width), (1.0 / width, np.inf)):
        val, _ = integrate.quad(integrand, lo, hi, limit=400, epsabs=0.0, epsrel=1e-10)
        total += val
    return 2 * special.gamma(r + 1) * math.sin(math.pi * r / 2) / math.pi * total
