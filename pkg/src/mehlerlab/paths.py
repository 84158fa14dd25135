"""Trajectories of the Levy-driven OU process on time grids.

``X(t + h) = T_h X(t) + xi``, ``xi ~ mu_h`` independent of the past.  For
diagonal noise the increment law is known per mode, so grid values are exact
in law; elliptical stable increments are built from sub-steps.

Random streams: every (path, mode) pair owns a stream and consumes a fixed
number of uniforms per step.  Hence truncating the model to fewer modes keeps
the surviving coordinates unchanged, and extending the grid keeps the
earlier steps unchanged.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .lyapunov import FrozenV, LyapunovParams
from .mehler import decay_integral, elliptical_substep_weights
from .noise import NoiseFamily, NoiseSpec, sample_elliptical_stable, sas_transform
from .rng import SeedLike, SeedSpec, as_seedspec
from .series import BOUNDARY_TOL
from .spectral import SpectralModel, constant_spectrum

DEFAULT_REFINE = 16


def array_id(*arrays) -> str:
    """Short content hash used to label models and noises in outputs."""
    h = hashlib.sha256()
    for arr in arrays:
        h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
    return h.hexdigest()[:12]


@dataclass(frozen=True)
class PathSample:
    times: np.ndarray
    coefs: np.ndarray  # shape (M+1, N)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        c = np.asarray(self.coefs, dtype=float)
        if c.shape[0] != t.size:
            raise ValueError("one coefficient vector per grid time is required")
        if not np.all(np.isfinite(c)):
            raise FloatingPointError("path has non-finite coefficients")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coefs", c)

    def to_csv(self) -> str:
        """Long format ``t,k,coef`` with ``k`` starting at 1."""
        lines = ["t,k,coef"]
        for t, row in zip(self.times.tolist(), self.coefs):
            lines.extend(f"{t!r},{k},{c!r}" for k, c in enumerate(row.tolist(), start=1))
        return "\n".join(lines) + "\n"


def check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size < 2 or g[0] != 0.0 or np.any(np.diff(g) <= 0) or not np.all(np.isfinite(g)):
        raise ValueError("grid must start at 0 and be strictly increasing with at least two points")
    return g


def _mode_uniforms(seed: SeedSpec, n_modes: int, steps: int, per_step: int) -> np.ndarray:
    """Uniforms in (0, 1) of shape ``(steps, n_modes, per_step)``, one stream per mode."""
    u = np.empty((steps, n_modes, per_step))
    for j in range(n_modes):
        u[:, j, :] = seed.child("mode", j).generator().random((steps, per_step))
    # random() can return exactly 0; keep the transforms finite
    return np.maximum(u, np.finfo(float).tiny)


def _diagonal_increments(model: SpectralModel, noise: NoiseSpec, dts: np.ndarray,
                         seed: SeedSpec) -> np.ndarray:
    """Exact per-mode increments for each step, shape ``(steps, N)``."""
    steps, N = dts.size, model.truncation_N
    u = _mode_uniforms(seed, N, steps, 3)
    lam = model.abs_eigenvalues
    dt = dts[:, None]
    incr = np.zeros((steps, N))
    if noise.has_gaussian:
        g2 = -np.expm1(-2.0 * lam * dt) / (2.0 * lam)
        incr += special.ndtri(u[..., 0]) * np.sqrt(2.0 * g2) * noise.sigma1
    if noise.has_stable:
        a = noise.alpha
        ga = -np.expm1(-a * lam * dt) / (a * lam)
        V = np.pi * (u[..., 1] - 0.5)
        W = -np.log(u[..., 2])
        incr += sas_transform(a, V, W) * ga ** (1.0 / a) * noise.sigma2
    return incr


def _elliptical_increments(model, noise, dts, seed: SeedSpec, refine: int):
    rng = seed.child("elliptical").generator()
    steps, N = dts.size, model.truncation_N
    incr = np.zeros((steps, N))
    for i, h in enumerate(dts):
        if noise.has_gaussian:
            incr[i] += rng.standard_normal(N) * np.sqrt(2.0 * decay_integral(2.0, model, h)) * noise.sigma1
        if noise.has_stable:
            sub = h / refine
            decay = np.exp(model.eigenvalues * sub)
            w = elliptical_substep_weights(model, noise.alpha, sub) * sub ** (1.0 / noise.alpha)
            y = np.zeros(N)
            for _ in range(refine):
                y = decay * y + w * sample_elliptical_stable(noise, rng)
            incr[i] += y
    return incr


def simulate_path(model: SpectralModel, noise: NoiseSpec, x0, grid, seed: SeedLike,
                  refine: int = DEFAULT_REFINE) -> PathSample:
    """One trajectory observed on ``grid``.

    ``seed`` should be an int or :class:`SeedSpec`; the path's streams are
    derived from it.  ``refine`` is the number of elliptical sub-steps per grid
    step and is ignored for diagonal noise.
    """
    if model.truncation_N != noise.N:
        raise ValueError("model and noise have different numbers of modes")
    grid = check_grid(grid)
    x0 = model.check_coefs(x0)
    spec = as_seedspec(seed)
    dts = np.diff(grid)
    if noise.family is NoiseFamily.DIAGONAL:
        incr = _diagonal_increments(model, noise, dts, spec)
        refinement = None
    else:
        if refine < 1:
            raise ValueError("refine must be at least 1")
        incr = _elliptical_increments(model, noise, dts, spec, refine)
        refinement = int(refine)
    coefs = np.empty((grid.size, model.truncation_N))
    coefs[0] = x0
    decay = np.exp(np.outer(dts, model.eigenvalues))
    for i in range(dts.size):
        coefs[i + 1] = decay[i] * coefs[i] + incr[i]
    meta = {"model_id": array_id(model.eigenvalues),
            "noise_id": array_id(noise.sigma1, noise.sigma2, [noise.alpha]),
            "seed": [spec.master_seed, *spec.labels], "refinement": refinement}
    return PathSample(grid, coefs, meta)


# ---------------------------------------------------------------------------
# regularity statistics

@dataclass(frozen=True)
class RegularityStats:
    max_jump: float
    oscillation: float
    per_N: dict  # N -> (max_jump, oscillation)


def _jump_and_osc(coefs: np.ndarray, window: int, n_list) -> dict:
    """Statistics for each prefix truncation in ``n_list`` from cumulative mode sums."""
    # rescale so that squaring cannot overflow
    scale = float(np.abs(coefs).max()) or 1.0
    c = coefs / scale
    jumps_sq = np.cumsum(np.diff(c, axis=0) ** 2, axis=1)
    norms_sq = np.cumsum(c**2, axis=1)
    out = {}
    with np.errstate(over="ignore"):
        for n in n_list:
            jump = float(np.sqrt(jumps_sq[:, n - 1].max()) * scale)
            norm = np.sqrt(norms_sq[:, n - 1]) * scale
            if not (math.isfinite(jump) and np.all(np.isfinite(norm))):
                raise FloatingPointError("path norms exceed the floating-point range")
            blocks = [norm[i:i + window + 1] for i in range(0, norm.size - 1, window)]
            osc = float(max(b.max() - b.min() for b in blocks))
            out[int(n)] = (jump, osc)
    return out


def regularity_stats(path: PathSample, window: int, n_list: Optional[Sequence[int]] = None
                     ) -> RegularityStats:
    """Largest grid increment and largest windowed oscillation of ``||X||_2``.

    Windows are consecutive blocks of ``window`` steps (sharing endpoints);
    ``window`` must divide the number of steps.  ``per_N`` repeats both
    statistics for the nested truncations in ``n_list`` (default: powers of two
    up to ``N`` and ``N`` itself).
    """
    steps = path.times.size - 1
    if window < 1 or steps % window:
        raise ValueError(f"window {window} does not divide {steps} steps")
    N = path.coefs.shape[1]
    if n_list is None:
        n_list = sorted({2**j for j in range(int(math.log2(N)) + 1)} | {N})
    if any(not 1 <= n <= N for n in n_list):
        raise ValueError("truncation levels must lie in 1..N")
    per_N = _jump_and_osc(path.coefs, window, list(n_list) + [N])
    jump, osc = per_N[N]
    return RegularityStats(jump, osc, {n: per_N[n] for n in n_list})


# ---------------------------------------------------------------------------
# dichotomy experiment

@dataclass(frozen=True)
class DichotomyRow:
    gamma2: float
    N: int
    median_max_jump: float
    reference_scale: float  # (sum_{k<=N} sigma_k^alpha)^{1/alpha}


@dataclass(frozen=True)
class DichotomyResult:
    alpha: float
    rows: list
    slopes: dict  # gamma2 -> fitted log-log slope of the median in N
    reference_slopes: dict  # gamma2 -> the same slope for the reference scale
    regimes: dict  # gamma2 -> "convergent" / "divergent" / "boundary: divergent"

    def to_csv(self) -> str:
        lines = ["gamma2,N,median_max_jump,reference_scale,slope,reference_slope,regime"]
        for r in self.rows:
            lines.append(f"{r.gamma2!r},{r.N},{r.median_max_jump!r},{r.reference_scale!r},"
                         f"{self.slopes[r.gamma2]!r},{self.reference_slopes[r.gamma2]!r},"
                         f"{self.regimes[r.gamma2]}")
        return "\n".join(lines) + "\n"


def stable_sum_regime(alpha: float, gamma2: float) -> str:
    """``sum n^{alpha gamma2}`` converges iff ``gamma2 < -1/alpha``; equality is divergent."""
    e = alpha * gamma2
    if abs(e + 1.0) <= BOUNDARY_TOL:
        return "boundary: divergent"
    return "convergent" if e < -1.0 else "divergent"


def _path_max_jumps(args):
    model, noise, grid, spec, n_list = args
    path = simulate_path(model, noise, np.zeros(model.truncation_N), grid, spec)
    jumps_sq = np.cumsum(np.diff(path.coefs, axis=0) ** 2, axis=1)
    return np.sqrt(jumps_sq[:, np.asarray(n_list) - 1].max(axis=0))


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def dichotomy_experiment(alpha: float, gamma2_list: Sequence[float], N_list: Sequence[int],
                         T: float, steps: int, n_paths: int, seed: SeedLike,
                         model: Optional[SpectralModel] = None, workers: int = 1
                         ) -> DichotomyResult:
    """Median over paths of the largest grid jump, for pure diagonal stable noise ``sigma_{2,k} = k^gamma2``.

    Each path is simulated once at ``max(N_list)`` modes and every smaller
    ``N`` reuses its leading coordinates, so the statistic is monotone in ``N``
    path by path.  The drift defaults to ``A = -I`` (every mode on the same
    time scale).  Results do not depend on ``workers``.
    """
    N_list = sorted(int(n) for n in N_list)
    N_max = N_list[-1]
    if model is None:
        model = constant_spectrum(N_max, -1.0)
    elif model.truncation_N < N_max:
        raise ValueError("model has fewer modes than the largest N")
    else:
        model = model.truncate(N_max)
    grid = np.linspace(0.0, T, steps + 1)
    root = as_seedspec(seed).child("dichotomy")
    k = np.arange(1, N_max + 1, dtype=float)
    rows, slopes, ref_slopes, regimes = [], {}, {}, {}
    logN = np.log(N_list)
    for gi, g2 in enumerate(gamma2_list):
        g2 = float(g2)
        noise = NoiseSpec.power_law(N_max, alpha, "diagonal", None, g2)
        tasks = [(model, noise, grid, root.child("gamma2", gi, "path", i), N_list)
                 for i in range(n_paths)]
        jumps = np.array(_map(_path_max_jumps, tasks, workers))
        med = np.median(jumps, axis=0)
        ref = np.cumsum(k ** (alpha * g2))[np.asarray(N_list) - 1] ** (1.0 / alpha)
        for n, m, r in zip(N_list, med, ref):
            rows.append(DichotomyRow(g2, n, float(m), float(r)))
        slopes[g2] = float(np.polyfit(logN, np.log(med), 1)[0])
        ref_slopes[g2] = float(np.polyfit(logN, np.log(ref), 1)[0])
        regimes[g2] = stable_sum_regime(alpha, g2)
    return DichotomyResult(float(alpha), rows, slopes, ref_slopes, regimes)


# ---------------------------------------------------------------------------
# nest exit probe

@dataclass(frozen=True)
class ExceedanceRow:
    level: float
    exceedance: float
    stderr: float


def nest_exit_probe(model: SpectralModel, noise: NoiseSpec, params: LyapunovParams,
                    levels: Sequence[float], T: float, n_paths: int, seed: SeedLike,
                    x0=None, dt: float = 0.05, n_V: int = 1000) -> list:
    """Fraction of paths whose grid supremum of ``V`` exceeds each level.

    ``V`` is a :class:`FrozenV` with ``n_V`` samples; the grid has fixed step
    ``dt`` so that a longer horizon only appends steps.  ``x0`` defaults to 0.
    """
    if noise.family is not NoiseFamily.DIAGONAL:
        raise ValueError("the exit probe requires diagonal noise")
    steps = int(round(T / dt))
    if steps < 1 or not math.isclose(steps * dt, T, rel_tol=1e-9):
        raise ValueError("T must be a positive multiple of dt")
    grid = dt * np.arange(steps + 1)
    x0 = np.zeros(model.truncation_N) if x0 is None else model.check_coefs(x0)
    root = as_seedspec(seed).child("nest")
    V = FrozenV(model, noise, params, n_V, root.child("V").generator())
    sups = np.empty(n_paths)
    for i in range(n_paths):
        path = simulate_path(model, noise, x0, grid, root.child("path", i))
        sups[i] = V(path.coefs).max()
    rows = []
    for lev in sorted(float(x) for x in levels):
        p = float(np.mean(sups > lev))
        rows.append(ExceedanceRow(lev, p, math.sqrt(p * (1 - p) / n_paths)))
    return rows
