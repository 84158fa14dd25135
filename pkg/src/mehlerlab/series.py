"""Truncated series bookkeeping: partial sums paired with tail exponents.

A truncated sum ``sum_{k<=N} t_k`` says nothing about convergence on its own.
Whenever the terms behave like ``k**e`` we decide finiteness from the exponent
(``e < -1``), and keep the partial sum alongside for scale.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

# exponent comparisons closer than this to -1 count as the (divergent) boundary
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class SeriesVerdict:
    partial_sum: float
    tail_exponent: float
    finite: bool
    boundary: bool = False

    @property
    def status(self) -> str:
        if self.boundary:
            return "boundary: divergent"
        return "finite" if self.finite else "divergent"


def exponent_verdict(exponent: float) -> tuple[bool, bool]:
    """(finite, boundary) for a p-series with terms ~ k**exponent."""
    if exponent == -np.inf:
        return True, False
    if abs(exponent + 1.0) <= BOUNDARY_TOL:
        return False, True
    return bool(exponent < -1.0), False


def fitted_exponent(terms, start_fraction: float = 0.5) -> float:
    """Least-squares log-log slope of ``terms`` against k over the upper range.

    Returns ``-inf`` if the tail is identically zero and ``nan`` when fewer
    than two positive tail terms are available.
    """
    terms = np.asarray(terms, dtype=float)
    n = terms.size
    if n == 0:
        return -np.inf
    k = np.arange(1, n + 1, dtype=float)
    lo = min(int(n * start_fraction), max(n - 2, 0))
    tail_k, tail_t = k[lo:], terms[lo:]
    if np.all(tail_t == 0):
        return -np.inf
    mask = tail_t > 0
    if mask.sum() < 2:
        return np.nan
    slope, _ = np.polyfit(np.log(tail_k[mask]), np.log(tail_t[mask]), 1)
    return float(slope)


def verdict(terms, exponent: Optional[float] = None) -> SeriesVerdict:
    """Pair the partial sum of ``terms`` with a convergence verdict.

    ``exponent`` is the analytic tail exponent when known; otherwise it is
    fitted from the terms.  A ``nan`` exponent yields ``finite=False``.
    """
    terms = np.asarray(terms, dtype=float)
    if exponent is None:
        exponent = fitted_exponent(terms)
    if np.isnan(exponent):
        return SeriesVerdict(float(terms.sum()), float(exponent), False)
    finite, boundary = exponent_verdict(exponent)
    return SeriesVerdict(float(terms.sum()), float(exponent), finite, boundary)
