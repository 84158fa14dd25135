"""Potential theory of finite continuous-time Markov chains.

For a conservative rate matrix ``Q`` the resolvent is ``U_alpha = (alpha I - Q)^{-1}``
and ``v`` is ``alpha``-excessive iff ``v >= 0`` and ``(alpha I - Q) v >= 0``.
Reduced functions (smallest excessive majorants of ``u`` on ``A``) are computed
by linear programming, and balayage ``E^x[exp(-alpha T_A) u(X(T_A))]`` by a
linear solve and by Monte Carlo.  States are indexed from 0.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import linalg, optimize

from .rng import SeedLike, as_generator

ROW_SUM_TOL = 1e-12
EXCESSIVE_TOL = 1e-10


@dataclass(frozen=True)
class FiniteChain:
    """Rate matrix with non-negative off-diagonal entries and zero row sums."""

    Q: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] == 0:
            raise ValueError("Q must be a non-empty square matrix")
        if not np.all(np.isfinite(Q)):
            raise ValueError("Q has non-finite entries")
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise ValueError("off-diagonal rates must be non-negative")
        if np.any(np.abs(Q.sum(axis=1)) > ROW_SUM_TOL * max(1.0, np.abs(Q).max())):
            raise ValueError("rows of Q must sum to zero")
        Q.flags.writeable = False
        object.__setattr__(self, "Q", Q)

    @property
    def n_states(self) -> int:
        return int(self.Q.shape[0])

    @classmethod
    def from_csv(cls, path: Union[str, PathLike]) -> "FiniteChain":
        return cls(np.loadtxt(path, delimiter=",", comments="#", ndmin=2))


def two_state_chain(rate: float = 1.0) -> FiniteChain:
    return FiniteChain([[-rate, rate], [rate, -rate]])


def birth_death_chain(n_max: int, birth: float, death: float) -> FiniteChain:
    """Chain on ``{0, ..., n_max}`` stepping up at rate ``birth`` and down at rate ``death``."""
    n = n_max + 1
    Q = np.zeros((n, n))
    idx = np.arange(n)
    Q[idx[:-1], idx[:-1] + 1] = birth
    Q[idx[1:], idx[1:] - 1] = death
    Q[idx, idx] = -Q.sum(axis=1)
    return FiniteChain(Q)


def random_chain(n: int, seed: SeedLike = None, sparsity: float = 0.0) -> FiniteChain:
    """Uniform off-diagonal rates in [0, 1], each row scaled to total rate 1.

    With ``sparsity > 0`` each off-diagonal rate is zeroed with that
    probability, which produces reducible chains and absorbing states.
    """
    rng = as_generator(seed)
    R = rng.uniform(0.0, 1.0, (n, n))
    if sparsity > 0:
        R *= rng.uniform(size=(n, n)) >= sparsity
    np.fill_diagonal(R, 0.0)
    tot = R.sum(axis=1, keepdims=True)
    R = np.divide(R, tot, out=np.zeros_like(R), where=tot > 0)
    np.fill_diagonal(R, -R.sum(axis=1))
    return FiniteChain(R)


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError("alpha must be positive")


def _as_set(A: Iterable[int], n: int) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for a in A:
        a = int(a)
        if not 0 <= a < n:
            raise ValueError(f"state {a} outside 0..{n - 1}")
        mask[a] = True
    return mask


def resolvent(chain: FiniteChain, alpha: float) -> np.ndarray:
    """``U_alpha = (alpha I - Q)^{-1}``."""
    _check_alpha(alpha)
    M = alpha * np.eye(chain.n_states) - chain.Q
    try:
        return linalg.solve(M, np.eye(chain.n_states), check_finite=True)
    except linalg.LinAlgError as exc:
        raise ArithmeticError(f"resolvent solve failed: {exc}") from exc


@dataclass(frozen=True)
class ExcessiveCheck:
    excessive: bool
    witness: Optional[int]  # first violating state
    resolvent_consistent: bool  # beta U_{alpha+beta} v <= v for the sampled betas

    def __bool__(self):
        return self.excessive


def is_excessive(chain: FiniteChain, alpha: float, v, tol: float = EXCESSIVE_TOL,
                 betas: Sequence[float] = (0.1, 1.0, 10.0)) -> ExcessiveCheck:
    """``v >= 0`` and ``(alpha I - Q) v >= 0`` up to ``tol``, cross-checked on the resolvent."""
    _check_alpha(alpha)
    v = np.asarray(v, dtype=float)
    if v.shape != (chain.n_states,) or not np.all(np.isfinite(v)):
        raise ValueError("v must be a finite vector with one entry per state")
    gen = alpha * v - chain.Q @ v
    bad = np.flatnonzero((v < -tol) | (gen < -tol))
    ok = bad.size == 0
    scale = max(1.0, float(np.abs(v).max()))
    consistent = all(np.all(b * resolvent(chain, alpha + b) @ v <= v + 1e-9 * scale) for b in betas)
    return ExcessiveCheck(ok, None if ok else int(bad[0]), bool(consistent))


class BalayageMethod(str, enum.Enum):
    LP = "LP"
    HITTING = "HittingSystem"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class BalayageResult:
    values: np.ndarray
    method: BalayageMethod
    certificate: dict = field(default_factory=dict)
    std_errors: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        out = {"values": self.values.tolist(), "method": self.method.value,
               "certificate": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                               for k, v in self.certificate.items()}}
        if self.std_errors is not None:
            out["std_errors"] = self.std_errors.tolist()
        return out


def _check_u(u, n):
    u = np.asarray(u, dtype=float)
    if u.shape != (n,) or not np.all(np.isfinite(u)) or np.any(u < 0):
        raise ValueError("u must be a finite non-negative vector with one entry per state")
    return u


def _lp_constraints(chain, alpha, mask, u):
    n = chain.n_states
    M = alpha * np.eye(n) - chain.Q
    bounds = [(u[i] if mask[i] else 0.0, None) for i in range(n)]
    return M, bounds


def _solve_lp(c, M, bounds):
    res = optimize.linprog(c, A_ub=-M, b_ub=np.zeros(M.shape[0]), bounds=bounds, method="highs",
                           options={"primal_feasibility_tolerance": 1e-10,
                                    "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise ArithmeticError(f"LP solver failed: {res.message}")
    return res.x


def _lp_certificate(M, v, mask, u) -> dict:
    gen = M @ v
    on_a = (v - u)[mask]
    return {"min_generator_residual": float(gen.min()),
            "min_value": float(v.min()),
            "min_majorant_gap": float(on_a.min()) if on_a.size else 0.0}


def _polish(M, v, mask, u, tol=1e-7):
    """Re-solve the LP's active constraints as a square linear system."""
    n = v.size
    gen = M @ v
    rows, rhs = [], []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        if mask[i] and abs(v[i] - u[i]) <= tol * max(1.0, u[i]):
            rows.append(e)
            rhs.append(u[i])
        elif abs(gen[i]) <= tol * max(1.0, abs(v).max()):
            rows.append(M[i])
            rhs.append(0.0)
        elif abs(v[i]) <= tol:
            rows.append(e)
            rhs.append(0.0)
        else:
            return v
    try:
        w = linalg.solve(np.array(rows), np.array(rhs))
    except linalg.LinAlgError:
        return v
    feas = (w >= -1e-12).all() and (M @ w >= -1e-12 * max(1.0, abs(w).max())).all() \
        and (w[mask] >= u[mask] - 1e-12).all()
    return np.maximum(w, 0.0) if feas and np.all(np.abs(w - v) <= 1e-6 * max(1.0, abs(v).max())) else v


def reduced_lp(chain: FiniteChain, alpha: float, A: Iterable[int], u) -> BalayageResult:
    """Smallest ``alpha``-excessive majorant of ``u`` on ``A``.

    Solves ``min sum v`` subject to ``v >= 0``, ``(alpha I - Q) v >= 0`` and
    ``v >= u`` on ``A`` with HiGHS, then polishes by solving the active
    constraints exactly.  Excessive functions form a lattice, so the sum
    objective gives the pointwise minimum; :func:`certify_minimality` checks it.
    """
    _check_alpha(alpha)
    n = chain.n_states
    u = _check_u(u, n)
    mask = _as_set(A, n)
    if not mask.any():
        return BalayageResult(np.zeros(n), BalayageMethod.LP,
                              {"min_generator_residual": 0.0, "min_value": 0.0,
                               "min_majorant_gap": 0.0})
    M, bounds = _lp_constraints(chain, alpha, mask, u)
    v = _polish(M, _solve_lp(np.ones(n), M, bounds), mask, u)
    return BalayageResult(v, BalayageMethod.LP, _lp_certificate(M, v, mask, u))


def certify_minimality(chain: FiniteChain, alpha: float, A: Iterable[int], u,
                       result: BalayageResult, tol: float = 1e-8) -> tuple[bool, float]:
    """Re-solve with each coordinate as the objective; return (agrees, largest gap)."""
    n = chain.n_states
    u = _check_u(u, n)
    mask = _as_set(A, n)
    if not mask.any():
        return bool(np.all(np.abs(result.values) <= tol)), float(np.abs(result.values).max())
    M, bounds = _lp_constraints(chain, alpha, mask, u)
    gap = 0.0
    for j in range(n):
        c = np.zeros(n)
        c[j] = 1.0
        w = _solve_lp(c, M, bounds)
        gap = max(gap, abs(w[j] - result.values[j]))
    return gap <= tol, float(gap)


def hitting_balayage(chain: FiniteChain, alpha: float, A: Iterable[int], u) -> BalayageResult:
    """``E^x[exp(-alpha T_A) u(X(T_A))]`` from ``h = u`` on ``A``, ``(alpha I - Q) h = 0`` off ``A``.

    ``T_A = 0`` for ``x`` in ``A``; states that cannot reach ``A`` get 0.
    """
    _check_alpha(alpha)
    n = chain.n_states
    u = _check_u(u, n)
    mask = _as_set(A, n)
    h = np.zeros(n)
    h[mask] = u[mask]
    off = ~mask
    if off.any():
        M = alpha * np.eye(n) - chain.Q
        rhs = -M[np.ix_(off, mask)] @ u[mask]
        try:
            h[off] = linalg.solve(M[np.ix_(off, off)], rhs)
        except linalg.LinAlgError as exc:
            raise ArithmeticError(f"hitting system solve failed: {exc}") from exc
        resid = float(np.abs((M @ h)[off]).max())
    else:
        resid = 0.0
    return BalayageResult(h, BalayageMethod.HITTING, {"max_residual": resid})


def mc_balayage(chain: FiniteChain, alpha: float, A: Iterable[int], u, n_paths: int,
                seed: SeedLike = None, horizon: Optional[float] = None) -> BalayageResult:
    """Monte Carlo balayage by simulating the jump chain with exponential holding times.

    Paths still outside ``A`` at time ``horizon`` (default ``50/alpha``) score 0;
    their true contribution lies in ``[0, exp(-alpha horizon) max u]``, and the
    resulting bracket is reported in the certificate.
    """
    _check_alpha(alpha)
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    n = chain.n_states
    u = _check_u(u, n)
    mask = _as_set(A, n)
    horizon = 50.0 / alpha if horizon is None else float(horizon)
    rng = as_generator(seed)
    rates = -np.diag(chain.Q)
    cum = _jump_cdf(chain)
    values, errs, censored = np.zeros(n), np.zeros(n), np.zeros(n, dtype=int)
    for x in range(n):
        if mask[x]:
            values[x] = u[x]
            continue
        state = np.full(n_paths, x)
        t = np.zeros(n_paths)
        score = np.zeros(n_paths)
        alive = np.ones(n_paths, dtype=bool)
        while alive.any():
            idx = np.flatnonzero(alive)
            s = state[idx]
            r = rates[s]
            stuck = r == 0  # absorbing outside A: never hits
            alive[idx[stuck]] = False
            idx, s, r = idx[~stuck], s[~stuck], r[~stuck]
            if idx.size == 0:
                break
            t[idx] += rng.standard_exponential(idx.size) / r
            over = t[idx] > horizon
            alive[idx[over]] = False
            censored[x] += int(over.sum())
            idx, s = idx[~over], s[~over]
            # inverse-CDF draw of the next state from each row
            c = cum[s]
            nxt = np.minimum((rng.uniform(size=idx.size)[:, None] >= c).sum(axis=1), n - 1)
            state[idx] = nxt
            hit = mask[nxt]
            score[idx[hit]] = np.exp(-alpha * t[idx[hit]]) * u[nxt[hit]]
            alive[idx[hit]] = False
        values[x] = score.mean()
        errs[x] = score.std(ddof=1) / math.sqrt(n_paths) if n_paths > 1 else 0.0
    upper = values + censored / n_paths * math.exp(-alpha * horizon) * (u.max() if n else 0.0)
    cert = {"horizon": horizon, "censored": censored, "bracket_low": values.copy(),
            "bracket_high": upper}
    return BalayageResult(values, BalayageMethod.MONTE_CARLO, cert, errs)


def _jump_cdf(chain: FiniteChain) -> np.ndarray:
    """Row-wise CDF of the embedded jump chain, with the last entry pinned to 1."""
    Q = chain.Q
    rates = -np.diag(Q)
    jump = np.divide(Q - np.diag(np.diag(Q)), rates[:, None], out=np.zeros_like(Q),
                     where=rates[:, None] > 0)
    cum = np.cumsum(jump, axis=1)
    cum[rates > 0, -1] = 1.0
    return cum


def polar_null_set(chain: FiniteChain, A: Iterable[int]) -> list[int]:
    """States from which ``A`` is unreachable along positive rates (where ``B^A 1 = 0``)."""
    n = chain.n_states
    reach = _as_set(A, n).copy()
    frontier = list(np.flatnonzero(reach))
    pred = chain.Q.T > 0  # pred[j, i]: rate i -> j is positive
    while frontier:
        j = frontier.pop()
        for i in np.flatnonzero(pred[j] & ~reach):
            reach[i] = True
            frontier.append(int(i))
    return [int(i) for i in np.flatnonzero(~reach)]


# ---------------------------------------------------------------------------
# nests

@dataclass(frozen=True)
class NestCheck:
    """Balayage of ``F_n^c`` on the probe states and Monte Carlo exit times per level.

    ``exit_quantiles`` rows hold the (25%, 50%, 75%) quantiles of ``T_{F_n^c}``
    from ``start``; censored paths count as ``inf``.  ``exit_fraction`` is the
    share of paths leaving ``F_n`` before the horizon.
    """

    balayage_max: list
    exit_quantiles: list
    exit_fraction: list
    analytic_verdict: str
    mc_verdict: str
    probe: list
    start: int
    horizon: float

    @property
    def agree(self) -> bool:
        return self.analytic_verdict == self.mc_verdict


def _nest_verdict_values(vals, ratio):
    vals = np.asarray(vals)
    if vals[-1] == 0.0:
        return "nest"
    decreasing = not np.any(vals[1:] > vals[:-1])
    return "nest" if decreasing and vals[-1] * ratio <= vals[0] else "not a nest"


def _nest_verdict_times(medians, fractions, ratio):
    m = np.asarray(medians)
    if np.any(m[1:] < m[:-1]):
        return "not a nest"
    if np.all(np.isinf(m)):
        # medians censored throughout: judge by the exit fraction within the horizon
        return _nest_verdict_values(fractions, ratio)
    if np.isinf(m[-1]):
        return "nest"
    return "nest" if m[-1] >= ratio * m[0] else "not a nest"


def nest_check(chain: FiniteChain, alpha: float, F: Sequence[Iterable[int]], n_paths: int = 1000,
               seed: SeedLike = None, probe: Optional[Iterable[int]] = None,
               start: Optional[int] = None, horizon: Optional[float] = None,
               ratio: float = 10.0) -> NestCheck:
    """Check an increasing family ``F_n`` for the nest property in two ways.

    Analytic: ``max_{x in probe} B_alpha^{F_n^c} 1(x)`` from exact solves
    (``probe`` defaults to ``F_0``).  Probabilistic: exit times ``T_{F_n^c}``
    from ``start`` (default: the largest state of ``F_0``), all levels read
    off one path per sample.  Each side calls the family a nest when its
    statistic moves by a factor ``ratio`` in the right direction (or reaches
    0, respectively infinity).  When every median is censored the exit
    fraction within the horizon takes the place of the medians.
    """
    _check_alpha(alpha)
    n = chain.n_states
    sets = [_as_set(f, n) for f in F]
    for a, b in zip(sets, sets[1:]):
        if np.any(a & ~b):
            raise ValueError("F_n must be increasing")
    probe_mask = sets[0] if probe is None else _as_set(probe, n)
    if not probe_mask.any():
        raise ValueError("probe set is empty")
    start = int(np.flatnonzero(sets[0])[-1]) if start is None else int(start)
    horizon = 50.0 / alpha if horizon is None else float(horizon)
    ones = np.ones(n)
    bal = []
    for s in sets:
        h = hitting_balayage(chain, alpha, np.flatnonzero(~s), ones).values
        bal.append(float(h[probe_mask].max()))
    times = _exit_times(chain, sets, start, n_paths, horizon, as_generator(seed))
    quant = [tuple(float(x) for x in np.quantile(times[:, j], [0.25, 0.5, 0.75],
                                                 method="inverted_cdf"))
             for j in range(len(sets))]
    frac = [float(np.mean(np.isfinite(times[:, j]))) for j in range(len(sets))]
    return NestCheck(bal, quant, frac, _nest_verdict_values(bal, ratio),
                     _nest_verdict_times([q[1] for q in quant], frac, ratio),
                     [int(i) for i in np.flatnonzero(probe_mask)], start, horizon)


def _exit_times(chain, sets, start, n_paths, horizon, rng):
    """First times each path leaves ``F_n``, shape ``(n_paths, levels)``; ``inf`` if censored."""
    n, L = chain.n_states, len(sets)
    member = np.array(sets)  # (L, n)
    rates = -np.diag(chain.Q)
    cum = _jump_cdf(chain)
    out = np.full((n_paths, L), np.inf)
    out[:, ~member[:, start]] = 0.0
    state = np.full(n_paths, start)
    t = np.zeros(n_paths)
    alive = np.isinf(out).any(axis=1)
    while alive.any():
        idx = np.flatnonzero(alive)
        s = state[idx]
        r = rates[s]
        stuck = r == 0
        alive[idx[stuck]] = False
        idx, s, r = idx[~stuck], s[~stuck], r[~stuck]
        if idx.size == 0:
            break
        t[idx] += rng.standard_exponential(idx.size) / r
        over = t[idx] > horizon
        alive[idx[over]] = False
        idx, s = idx[~over], s[~over]
        nxt = np.minimum((rng.uniform(size=idx.size)[:, None] >= cum[s]).sum(axis=1), n - 1)
        state[idx] = nxt
        left = ~member[:, nxt].T & np.isinf(out[idx])  # (paths, levels)
        rows, cols = np.nonzero(left)
        out[idx[rows], cols] = t[idx[rows]]
        alive[idx] = np.isinf(out[idx]).any(axis=1)
    return out
