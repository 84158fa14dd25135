"""Diagonal drift operators described by their eigenvalues.

The drift ``A`` is self-adjoint with orthonormal eigenbasis ``(e_k)`` and
strictly negative eigenvalues ``lambda_1 >= lambda_2 >= ...``.  A state is
stored by its coefficients ``x_k = <x, e_k>`` for ``k <= N``; the semigroup
acts diagonally, ``(T_t x)_k = exp(lambda_k t) x_k``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Optional, Union

import numpy as np


@dataclass(frozen=True)
class SpectralModel:
    """Truncated eigen-description of the drift.

    Parameters
    ----------
    eigenvalues : array_like, shape (N,)
        Strictly negative, non-increasing eigenvalues.
    dim_d : int
        Spatial dimension of the underlying domain (enters Weyl exponents).
    multi_indices : ndarray, optional
        For box spectra, the integer multi-index behind each eigenvalue.
    """

    eigenvalues: np.ndarray
    dim_d: int = 1
    multi_indices: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).ravel()
        if lam.size == 0:
            raise ValueError("at least one eigenvalue is required")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        if np.any(lam >= 0):
            raise ValueError("eigenvalues must be strictly negative")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be non-increasing")
        if int(self.dim_d) < 1:
            raise ValueError("dim_d must be a positive integer")
        lam.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "dim_d", int(self.dim_d))
        if self.multi_indices is not None:
            mi = np.array(self.multi_indices, dtype=int)
            mi.flags.writeable = False
            object.__setattr__(self, "multi_indices", mi)

    @property
    def truncation_N(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def abs_eigenvalues(self) -> np.ndarray:
        return -self.eigenvalues

    # |T_t x| <= M exp(omega t) |x| with M = 1, omega = lambda_1 for this diagonal contraction
    @property
    def growth_M(self) -> float:
        return 1.0

    @property
    def growth_omega(self) -> float:
        return float(self.eigenvalues[0])

    def truncate(self, n: int) -> "SpectralModel":
        """The model restricted to its first ``n`` modes."""
        if not 1 <= n <= self.truncation_N:
            raise ValueError(f"cannot truncate {self.truncation_N} modes to {n}")
        mi = None if self.multi_indices is None else self.multi_indices[:n]
        return SpectralModel(self.eigenvalues[:n], self.dim_d, mi)

    def check_coefs(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.truncation_N:
            raise ValueError(
                f"coefficient vector has {x.shape[-1]} modes, model has {self.truncation_N}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("coefficient vector has non-finite entries")
        return x


def constant_spectrum(N: int, value: float = -1.0, dim_d: int = 1) -> SpectralModel:
    """Bounded drift ``A = value * I`` truncated to ``N`` modes."""
    return SpectralModel(np.full(int(N), float(value)), dim_d)


def dirichlet_spectrum(d: int, N: int) -> SpectralModel:
    """The ``N`` lowest Dirichlet-Laplacian eigenvalues on the unit box ``(0,1)^d``.

    Eigenvalues are ``-pi^2 |m|^2`` over multi-indices ``m`` with positive
    entries.  Ties are kept with multiplicity and ordered lexicographically by
    multi-index.
    """
    d, N = int(d), int(N)
    if d < 1 or N < 1:
        raise ValueError("d and N must be positive integers")
    # a side-M box has M**d >= N points with |m|^2 <= d M^2, so every index of the
    # N smallest sums lies within side ceil(sqrt(d) M)
    m_side = math.ceil(N ** (1.0 / d))
    while m_side**d < N:
        m_side += 1
    side = math.ceil(math.sqrt(d) * m_side)
    axes = [np.arange(1, side + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    sq = (grid**2).sum(axis=1)
    # lexsort: last key is primary
    order = np.lexsort(tuple(grid[:, j] for j in reversed(range(d))) + (sq,))
    order = order[:N]
    return SpectralModel(-np.pi**2 * sq[order].astype(float), d, grid[order])


@dataclass(frozen=True)
class WeylReport:
    """Outcome of the two-sided check ``-k^{2/d}/C <= lambda_k <= -C k^{2/d}``.

    ``feasible_C`` is the largest admissible constant in (0, 1) over the
    truncated spectrum, or ``None``.  ``trend_exponent`` is the fitted log-log
    slope of the per-mode admissible constants; a clearly non-zero trend means
    the constant would keep shrinking with ``N``.
    """

    feasible_C: Optional[float]
    raw_C: float
    trend_exponent: float
    worst_k: int


def verify_weyl(model: SpectralModel, min_C: float = 1e-6) -> WeylReport:
    """Largest ``C`` in (0,1) satisfying the Weyl bounds for all ``k <= N``.

    ``C`` is reported as ``None`` when the best constant falls below
    ``min_C``, which is how spectra with sub-power growth show up at large N.
    """
    from .series import fitted_exponent

    k = np.arange(1, model.truncation_N + 1, dtype=float)
    ratio = model.abs_eigenvalues / k ** (2.0 / model.dim_d)
    per_k = np.minimum(ratio, 1.0 / ratio)
    worst = int(np.argmin(per_k))
    raw = float(per_k[worst])
    C = min(raw, float(np.nextafter(1.0, 0.0)))
    trend = fitted_exponent(per_k) if per_k.size >= 4 else 0.0
    feasible = C if C >= min_C else None
    return WeylReport(feasible, raw, float(trend), worst + 1)


def semigroup_apply(model: SpectralModel, t: float, x) -> np.ndarray:
    """``T_t x`` on coefficient vectors (last axis indexes modes)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    x = model.check_coefs(x)
    if t == 0:
        return x.copy()
    return np.exp(model.eigenvalues * t) * x


def spectrum_to_csv(model: SpectralModel, path: Union[str, PathLike, None] = None) -> str:
    """Write ``k,lambda_k`` rows (``k`` starting at 1); returns the CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "lambda_k"])
    for k, lam in enumerate(model.eigenvalues, start=1):
        w.writerow([k, repr(float(lam))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def spectrum_from_csv(path: Union[str, PathLike], dim_d: int = 1) -> SpectralModel:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if [h.strip() for h in header] != ["k", "lambda_k"]:
            raise ValueError(f"expected header 'k,lambda_k', got {','.join(header)!r}")
        for row in reader:
            if row:
                rows.append((int(row[0]), float(row[1])))
    rows.sort()
    if [k for k, _ in rows] != list(range(1, len(rows) + 1)):
        raise ValueError("spectrum CSV must list k = 1..N exactly once")
    return SpectralModel(np.array([lam for _, lam in rows]), dim_d)
