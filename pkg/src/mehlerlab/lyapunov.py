"""Explicit Lyapunov function for the Mehler semigroup with unbounded drift.

With drift eigenvalues ``lambda_i -> -inf`` and parameters ``a > 0``,
``p >= 2``, ``0 < gamma <= 1`` and weights ``gamma_i``, let

    v(x) = sum_i |lambda_i|^{1+a} (|x_i|^p ^ 1) + sum_i gamma_i |x_i|^gamma,
    V(x) = U_q v(x) = int_0^inf e^{-qt} P_t v(x) dt.

This module evaluates ``v`` and ``V`` (Monte Carlo, ``V = E v(T_tau x + Y_tau)/q``
with ``tau ~ Exp(q)``), builds admissible weights, and decides the spectral
and moment conditions under which ``V`` is an excessive, norm-like function.
Convergence of every infinite series is decided from its tail exponent.
"""
from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .mehler import MCEstimate, sample_mu_at_times, sample_mu
from .moments import gaussian_abs_moment, stable_abs_moment
from .noise import NoiseSpec
from .rng import SeedLike, as_generator
from .series import SeriesVerdict, exponent_verdict, fitted_exponent, verdict
from .spectral import SpectralModel, verify_weyl

DEFAULT_CEILING = 1e12
BETA_FRACTION = 0.9
# fitted exponents this close to -1 cannot be trusted either way
FIT_MARGIN = 0.05


@dataclass(frozen=True)
class LyapunovParams:
    """Parameters of ``v``; ``gamma_seq`` holds one weight per mode."""

    a: float
    p: float
    q: float
    gamma: float
    gamma_seq: np.ndarray

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not self.p >= 2:
            raise ValueError("p must be at least 2")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        g = np.array(self.gamma_seq, dtype=float).ravel()
        if g.size == 0 or np.any(g <= 0) or np.any(g > 1):
            raise ValueError("gamma_seq entries must lie in (0, 1]")
        if np.any(np.diff(g) > 0):
            raise ValueError("gamma_seq must be non-increasing")
        g.flags.writeable = False
        for name in ("a", "p", "q", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "gamma_seq", g)

    def check_model(self, model: SpectralModel) -> None:
        if self.gamma_seq.size != model.truncation_N:
            raise ValueError(f"gamma_seq has {self.gamma_seq.size} entries, model has "
                             f"{model.truncation_N} modes")
        if not self.q > self.p * model.eigenvalues[0]:
            raise ValueError("q must exceed p * lambda_1")


@dataclass(frozen=True)
class GammaSequence:
    """Weights ``gamma_i = min(1, i^-theta)`` with the verdicts of both weight sums."""

    values: np.ndarray
    theta: float
    summability: SeriesVerdict
    c2: SeriesVerdict


@dataclass(frozen=True)
class HypothesisReport:
    """Verdict on a set of hypotheses, with the numbers behind it.

    ``status`` is ``"feasible"``, ``"infeasible"`` or ``"inconclusive"``;
    ``feasible`` is true only in the first case.  ``details`` holds extra
    diagnostics (secondary exponents, partial sums, notes).
    """

    feasible: bool
    witness: Optional[tuple]
    c1_truncated: float
    c1_tail_exponent: float
    c2_truncated: float
    condition_flags: dict
    status: str = "infeasible"
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable({
            "feasible": self.feasible, "status": self.status,
            "witness": None if self.witness is None else {"a": self.witness[0], "p": self.witness[1]},
            "c1_truncated": self.c1_truncated, "c1_tail_exponent": self.c1_tail_exponent,
            "c2_truncated": self.c2_truncated, "condition_flags": self.condition_flags,
            "details": self.details,
        })


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


# ---------------------------------------------------------------------------
# exponents of spectra and scales

@dataclass(frozen=True)
class _Rate:
    exponent: Optional[float]  # None: the sequence vanishes identically
    analytic: bool


def _eigen_growth(model: SpectralModel) -> _Rate:
    """Power ``e`` with ``|lambda_k| ~ k^e``: ``2/d`` under Weyl bounds, fitted otherwise."""
    rep = verify_weyl(model)
    if rep.feasible_C is not None and abs(rep.trend_exponent) < 0.1:
        return _Rate(2.0 / model.dim_d, True)
    return _Rate(fitted_exponent(model.abs_eigenvalues), False)


def _scale_rate(sigma: np.ndarray, known: Optional[float]) -> _Rate:
    if not np.any(sigma > 0):
        return _Rate(None, True)
    if known is not None:
        return _Rate(float(known), True)
    return _Rate(fitted_exponent(sigma), False)


def _decide(exponent: float, analytic: bool) -> str:
    """"finite" / "divergent" / "inconclusive" for a p-series with the given exponent."""
    if exponent is None or exponent == -np.inf:
        return "finite"
    if np.isnan(exponent):
        return "inconclusive"
    if not analytic and abs(exponent + 1.0) < FIT_MARGIN:
        return "inconclusive"
    finite, _ = exponent_verdict(exponent)
    return "finite" if finite else "divergent"


# ---------------------------------------------------------------------------
# per-mode time integrals

def laplace_decay_power(beta: float, rho: float, q: float, lam_abs) -> np.ndarray:
    """``int_0^inf e^{-qt} g_beta(t)^rho dt`` with ``g_beta(t) = (1 - e^{-beta|lambda| t})/(beta|lambda|)``.

    Substituting ``w = exp(-beta |lambda| t)`` gives
    ``(beta|lambda|)^{-1-rho} B(q/(beta|lambda|), rho+1)``.
    """
    lam_abs = np.asarray(lam_abs, dtype=float)
    b = beta * lam_abs
    return np.exp(special.betaln(q / b, rho + 1.0) - (1.0 + rho) * np.log(b))


def moment_integrals(model: SpectralModel, noise: NoiseSpec, r: float, q: float) -> np.ndarray:
    """Upper bounds on ``int_0^inf e^{-qt} E|y_k(t)|^r dt`` per mode, ``y ~ mu_t``, ``r <= 1``.

    The per-mode marginal of ``mu_t`` is ``N(0, 2 sigma_1^2 g_2) + sigma_2 g_alpha^{1/alpha} Y``
    for both noise families.  Subadditivity of ``|.|^r`` splits the two parts;
    the bound is exact when only one part is present.  Infinite when the
    stable part is present and ``r >= alpha``.
    """
    lam = model.abs_eigenvalues
    out = np.zeros(model.truncation_N)
    if noise.has_gaussian:
        out += ((2.0 * noise.sigma1**2) ** (r / 2) * gaussian_abs_moment(r)
                * laplace_decay_power(2.0, r / 2, q, lam))
    if noise.has_stable:
        m = stable_abs_moment(r, noise.alpha)
        if math.isinf(m):
            out = np.where(noise.sigma2 > 0, np.inf, out)
        else:
            out += noise.sigma2**r * m * laplace_decay_power(noise.alpha, r / noise.alpha, q, lam)
    return out


def _moment_exponent(growth: _Rate, r1: _Rate, r2: _Rate, r: float, alpha: float):
    """Tail exponent of ``k -> int e^{-qt} E|y_k(t)|^r dt`` and whether it is analytic."""
    parts, analytic = [], growth.analytic
    if r1.exponent is not None:
        parts.append(r * r1.exponent - growth.exponent * r / 2)
        analytic &= r1.analytic
    if r2.exponent is not None:
        if r >= alpha:
            return np.inf, analytic
        parts.append(r * r2.exponent - growth.exponent * r / alpha)
        analytic &= r2.analytic
    return (max(parts) if parts else -np.inf), analytic


# ---------------------------------------------------------------------------
# weights

def make_gamma_sequence(gamma: float, q: float, noise: NoiseSpec, model: SpectralModel,
                        theta: float) -> GammaSequence:
    """Weights ``gamma_i = min(1, i^-theta)`` with verdicts on both weight sums.

    ``theta > (2 - gamma)/2`` makes ``sum gamma_i^{2/(2-gamma)}`` converge;
    ``c2 = sum_i gamma_i int e^{-qt} E|y_i(t)|^gamma dt`` is evaluated per mode.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if not theta > (2.0 - gamma) / 2.0:
        raise ValueError(f"theta must exceed (2 - gamma)/2 = {(2.0 - gamma) / 2.0}, got {theta}")
    if model.truncation_N != noise.N:
        raise ValueError("model and noise have different numbers of modes")
    i = np.arange(1, model.truncation_N + 1, dtype=float)
    g = np.minimum(1.0, i**-theta)
    summ = verdict(g ** (2.0 / (2.0 - gamma)), -theta * 2.0 / (2.0 - gamma))
    c2 = _c2_verdict(model, noise, g, theta, gamma, q)
    return GammaSequence(g, float(theta), summ, c2)


def _c2_verdict(model, noise, gseq, theta, gamma, q) -> SeriesVerdict:
    terms = gseq * moment_integrals(model, noise, gamma, q)
    growth = _eigen_growth(model)
    r1 = _scale_rate(noise.sigma1, noise.gamma1)
    r2 = _scale_rate(noise.sigma2, noise.gamma2)
    e, analytic = _moment_exponent(growth, r1, r2, gamma, noise.alpha)
    if theta is None:
        e_w = fitted_exponent(gseq)
        analytic = False
    else:
        e_w = -theta
    if not analytic:
        e_terms = fitted_exponent(terms) if np.all(np.isfinite(terms)) else np.inf
        return verdict(terms, e_terms)
    return verdict(terms, e + e_w)


# ---------------------------------------------------------------------------
# v and V

VTerms = namedtuple("VTerms", ["total", "spectral", "moment"])


def _v_parts(X, model: SpectralModel, params: LyapunovParams):
    X = np.abs(model.check_coefs(X))
    lam = model.abs_eigenvalues
    spectral = np.sum(lam ** (1.0 + params.a) * np.minimum(X**params.p, 1.0), axis=-1)
    moment = np.sum(params.gamma_seq * X**params.gamma, axis=-1)
    return spectral, moment


def eval_v(x, model: SpectralModel, params: LyapunovParams) -> VTerms:
    """Truncated ``v(x)`` and its two sums."""
    params.check_model(model)
    spectral, moment = _v_parts(x, model, params)
    return VTerms(float(spectral + moment), float(spectral), float(moment))


def v_batch(X, model: SpectralModel, params: LyapunovParams) -> np.ndarray:
    """``v`` on each row of ``X``."""
    spectral, moment = _v_parts(X, model, params)
    return spectral + moment


def _guarded_estimate(vals: np.ndarray, scale: float, ceiling: float) -> MCEstimate:
    vals = vals * scale
    running = np.cumsum(vals) / np.arange(1, vals.size + 1)
    return MCEstimate.from_samples(vals, diverging=bool(np.any(running > ceiling)))


def eval_V(x, model: SpectralModel, noise: NoiseSpec, params: LyapunovParams, n: int,
           seed: SeedLike = None, ceiling: float = DEFAULT_CEILING) -> MCEstimate:
    """Monte Carlo ``V(x) = E[v(T_tau x + Y_tau)] / q`` with ``tau ~ Exp(q)``.

    The estimate is flagged ``diverging`` when the running average exceeds
    ``ceiling``.  Equal seeds give common random numbers across states.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    params.check_model(model)
    x = model.check_coefs(x)
    rng = as_generator(seed)
    tau = rng.exponential(1.0 / params.q, n)
    states = np.exp(model.eigenvalues * tau[:, None]) * x + sample_mu_at_times(model, noise, tau, rng)
    return _guarded_estimate(v_batch(states, model, params), 1.0 / params.q, ceiling)


class FrozenV:
    """``V`` estimated with one fixed sample of ``(tau, Y_tau)`` shared by all states.

    Freezing the sample makes the estimate a deterministic function of the
    state, so sup/inf comparisons along paths are not polluted by fresh noise.
    """

    def __init__(self, model: SpectralModel, noise: NoiseSpec, params: LyapunovParams,
                 n: int, seed: SeedLike = None):
        params.check_model(model)
        rng = as_generator(seed)
        self.model, self.params = model, params
        self.tau = rng.exponential(1.0 / params.q, int(n))
        self.decay = np.exp(model.eigenvalues * self.tau[:, None])
        self.Y = sample_mu_at_times(model, noise, self.tau, rng)

    def __call__(self, X) -> np.ndarray:
        """``V`` at each row of ``X`` (or at a single state)."""
        X = self.model.check_coefs(X)
        flat = X.reshape(-1, X.shape[-1])
        out = np.array([v_batch(self.decay * x + self.Y, self.model, self.params).mean()
                        for x in flat]) / self.params.q
        return out.reshape(X.shape[:-1]) if X.ndim > 1 else float(out[0])


@dataclass(frozen=True)
class ExcessivityCheck:
    """``e^{-qh} P_h V(x)`` against ``V(x)`` with a 3-standard-error allowance."""

    h: float
    discounted: MCEstimate
    reference: MCEstimate
    passed: bool

    @property
    def margin(self) -> float:
        return self.reference.value - self.discounted.value


def check_excessivity(x, model: SpectralModel, noise: NoiseSpec, params: LyapunovParams,
                      h: float, n: int, seed: SeedLike = None,
                      ceiling: float = DEFAULT_CEILING) -> ExcessivityCheck:
    """Supermartingale test ``e^{-qh} P_h V(x) <= V(x) + 3 SE``.

    ``P_h V(x)`` is sampled in two stages: ``z = T_h x + Y_h`` and then one
    inner draw of ``v(T_tau z + Y'_tau)/q``.  The two sides use independent streams.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    params.check_model(model)
    x = model.check_coefs(x)
    rng_ref, rng_lhs = as_generator(seed).spawn(2)
    ref = eval_V(x, model, noise, params, n, rng_ref, ceiling)
    z = np.exp(model.eigenvalues * h) * x + sample_mu(model, noise, h, rng_lhs, size=n)
    tau = rng_lhs.exponential(1.0 / params.q, n)
    states = np.exp(model.eigenvalues * tau[:, None]) * z + sample_mu_at_times(model, noise, tau, rng_lhs)
    lhs = _guarded_estimate(v_batch(states, model, params), math.exp(-params.q * h) / params.q, ceiling)
    se = math.hypot(lhs.std_error, ref.std_error)
    return ExcessivityCheck(h, lhs, ref, bool(lhs.value <= ref.value + 3.0 * se))


# ---------------------------------------------------------------------------
# spectral and moment conditions for a concrete model

def check_H_A_mu(model: SpectralModel, noise: NoiseSpec, params: LyapunovParams,
                 beta: Optional[float] = None, t_sum: float = 1.0) -> HypothesisReport:
    """Decide the eigenbasis, spectral-bound and moment conditions for ``(a, p, q, gamma)``.

    ``c1_truncated`` is an upper bound for the truncated
    ``c1 = sum |lambda_i|^{1+a} int e^{-qt} E[|y_i(t)|^p ^ 1] dt``: the Gaussian
    part uses its ``p``-th moment, the stable part its ``beta``-th moment
    (``beta < alpha``, default ``0.9 alpha``), each integrated exactly in time.
    Finiteness of ``c1`` is decided from the tail exponent of the exact terms,
    which is ``e(1+a-p/2) + p g1`` for the Gaussian part and ``e a + alpha g2``
    for the stable part (``|lambda_k| ~ k^e``, ``sigma_{i,k} ~ k^{g_i}``).
    """
    params.check_model(model)
    if model.truncation_N != noise.N:
        raise ValueError("model and noise have different numbers of modes")
    a, p, q, gam = params.a, params.p, params.q, params.gamma
    alpha = noise.alpha
    beta = BETA_FRACTION * alpha if beta is None else float(beta)
    if not 0 < beta < alpha:
        raise ValueError("beta must lie in (0, alpha)")
    lam = model.abs_eigenvalues
    growth = _eigen_growth(model)
    r1 = _scale_rate(noise.sigma1, noise.gamma1)
    r2 = _scale_rate(noise.sigma2, noise.gamma2)
    e = growth.exponent
    details: dict = {"beta": beta, "eigen_growth_exponent": e,
                     "eigen_growth_analytic": growth.analytic}

    # (i) eigenvalues decreasing to -inf
    grows = e > 1e-3 if growth.analytic else e > 0.1
    eig_status = "finite" if grows else ("divergent" if growth.analytic or e < 0.02
                                         else "inconclusive")
    flags = {"eigenvalues_unbounded": eig_status == "finite",
             "q_gt_p_lambda1": bool(q > p * model.eigenvalues[0])}
    statuses = {"eigenvalues_unbounded": eig_status}

    # c1
    both = noise.has_gaussian and noise.has_stable
    pref = 2.0 ** (p - 1) if both else 1.0
    c1_terms = np.zeros_like(lam)
    c1_parts, c1_analytic = [], growth.analytic
    if noise.has_gaussian:
        c1_terms += (lam ** (1 + a) * (2 * noise.sigma1**2) ** (p / 2) * gaussian_abs_moment(p)
                     * laplace_decay_power(2.0, p / 2, q, lam))
        c1_parts.append(e * (1 + a - p / 2) + p * r1.exponent)
        c1_analytic &= r1.analytic
    if noise.has_stable:
        c1_terms += (lam ** (1 + a) * noise.sigma2**beta * stable_abs_moment(beta, alpha)
                     * laplace_decay_power(alpha, beta / alpha, q, lam))
        c1_parts.append(e * a + alpha * r2.exponent)
        c1_analytic &= r2.analytic
        details["c1_bound_stable_exponent"] = e * (1 + a - beta / alpha) + beta * r2.exponent
        details["c1_estimate_stable_exponent"] = e * a + beta * r2.exponent
    c1_terms *= pref
    c1_exp = max(c1_parts) if c1_parts else -np.inf
    statuses["c1_finite"] = _decide(c1_exp, c1_analytic)

    # spectral sums
    exp_sum_terms = lam**a * np.exp(-p * lam * t_sum)
    details["exp_sum_truncated"] = float(exp_sum_terms.sum())
    details["exp_sum_t"] = t_sum
    statuses["exp_sum_finite"] = eig_status
    if p > 2:
        inv_exp = -e * 2 * a / (p - 2)
        inv_terms = lam ** (-2 * a / (p - 2))
    else:
        inv_exp = -np.inf if grows else 0.0
        inv_terms = np.where(lam > 1, 0.0, np.where(lam == 1, 1.0, np.inf))
    details["inverse_power_sum_truncated"] = float(inv_terms.sum())
    details["inverse_power_exponent"] = inv_exp
    statuses["inverse_power_sum_finite"] = (_decide(inv_exp, growth.analytic) if grows
                                            else eig_status if eig_status != "finite" else "divergent")

    # moment bound and weights
    mom = moment_integrals(model, noise, gam, q)
    statuses["moment_bound"] = "finite" if np.all(np.isfinite(mom)) else "divergent"
    g = params.gamma_seq
    summ = verdict(g ** (2 / (2 - gam)))
    statuses["gamma_summable"] = _decide(summ.tail_exponent, False) if np.any(np.diff(g) < 0) \
        else "divergent"
    c2 = _c2_verdict(model, noise, g, None, gam, q)
    statuses["c2_finite"] = ("finite" if c2.finite else
                             _decide(c2.tail_exponent, False) if np.isfinite(c2.partial_sum)
                             else "divergent")
    details.update(c1_analytic=c1_analytic, c2_tail_exponent=c2.tail_exponent,
                   gamma_summability_exponent=summ.tail_exponent, statuses=statuses)

    for name, st in statuses.items():
        flags[name] = st == "finite"
    if all(flags.values()):
        status = "feasible"
    elif any(st == "inconclusive" for st in statuses.values()) and flags["q_gt_p_lambda1"] \
            and not any(st == "divergent" for st in statuses.values()):
        status = "inconclusive"
    else:
        status = "infeasible"
    feasible = status == "feasible"
    return HypothesisReport(feasible, (a, p) if feasible else None, float(c1_terms.sum()),
                            float(c1_exp), float(c2.partial_sum), flags, status, details)


# ---------------------------------------------------------------------------
# power-law conditions

HSIGMA_NAMES = ("gaussian_c1", "stable_c1", "inverse_power")


def hsigma_inequalities(d: int, alpha: float, gamma1: Optional[float], gamma2: Optional[float],
                        a, p) -> dict:
    """Left-hand sides and truth values of the three power-law inequalities.

    ``(2(1+a)-p)/d + p g1 < -1``, ``2a/d + alpha g2 < -1`` and
    ``4a/(d(p-2)) > 1``.  A ``None`` exponent means that noise part is absent
    and its inequality holds vacuously.  Works elementwise on arrays.
    """
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    out = {}
    if gamma1 is None:
        out["gaussian_c1"] = (np.full(np.broadcast(a, p).shape, -np.inf), np.ones(np.broadcast(a, p).shape, bool))
    else:
        lhs = (2 * (1 + a) - p) / d + p * gamma1
        out["gaussian_c1"] = (lhs, lhs < -1)
    if gamma2 is None:
        out["stable_c1"] = (np.full(np.broadcast(a, p).shape, -np.inf), np.ones(np.broadcast(a, p).shape, bool))
    else:
        lhs = 2 * a / d + alpha * gamma2 + 0 * p
        out["stable_c1"] = (lhs, lhs < -1)
    with np.errstate(divide="ignore"):
        lhs = 4 * a / (d * (p - 2))
    out["inverse_power"] = (lhs, lhs > 1)
    return out


def _violation(ineq: dict) -> np.ndarray:
    v1 = np.maximum(ineq["gaussian_c1"][0] + 1, 0)
    v2 = np.maximum(ineq["stable_c1"][0] + 1, 0)
    v3 = np.maximum(1 - ineq["inverse_power"][0], 0)
    return np.maximum(np.maximum(v1, v2), v3)


def hsigma_feasible_analytic(d: int, alpha: float, gamma1: Optional[float],
                             gamma2: Optional[float]) -> bool:
    """Exact feasibility of the three inequalities over ``a > 0, p > 2``.

    Writing them as ``d(p-2)/4 < a < min(U1(p), U2)`` with
    ``U1 = (p - 2 - d - d p g1)/2`` and ``U2 = d(-1 - alpha g2)/2`` gives:
    ``g2 < -1/alpha`` and ``g1 < 1/d - 1/2 + 1/(d alpha g2)`` when both parts
    are present, ``g1 < 1/d - 1/2`` without the stable part.
    """
    if gamma2 is not None and not gamma2 < -1.0 / alpha:
        return False
    if gamma1 is None:
        return True
    if gamma2 is None:
        return gamma1 < 1.0 / d - 0.5
    return gamma1 < 1.0 / d - 0.5 + 1.0 / (d * alpha * gamma2)


def gaussian_threshold(d: int, p: float) -> float:
    """Supremum of admissible ``g1`` at fixed ``p`` without stable part: ``1/d - 1/2 - 2/(dp)``."""
    return 1.0 / d - 0.5 - 2.0 / (d * p)


def _analytic_witness(d, alpha, gamma1, gamma2):
    p_max = np.inf if gamma2 is None else -2.0 * alpha * gamma2
    if gamma1 is None:
        p_lo = 2.0
    else:
        gap = 1.0 / d - 0.5 - gamma1
        if gap <= 0:
            return None
        p_lo = max(2.0, 2.0 / (d * gap))
    if not p_lo < p_max:
        return None
    p = 2 * p_lo if math.isinf(p_max) else 0.5 * (p_lo + p_max)
    lo = d * (p - 2) / 4
    hi = np.inf
    if gamma1 is not None:
        hi = min(hi, (p - 2 - d - d * p * gamma1) / 2)
    if gamma2 is not None:
        hi = min(hi, d * (-1 - alpha * gamma2) / 2)
    if not lo < hi:
        return None
    a = 2 * lo if math.isinf(hi) else 0.5 * (lo + hi)
    return float(a), float(p)


def _grid_pick(A, P, ok):
    if not np.any(ok):
        return None
    # smallest a first, then smallest p
    idx = np.flatnonzero(ok.ravel())
    a_ok, p_ok = A.ravel()[idx], P.ravel()[idx]
    j = np.lexsort((p_ok, a_ok))[0]
    return float(a_ok[j]), float(p_ok[j])


def check_H_Sigma(d: int, alpha: float, gamma1: Optional[float], gamma2: Optional[float],
                  a_range: Sequence[float] = (1e-3, 10.0), p_range: Sequence[float] = (2 + 1e-3, 20.0),
                  grid: int = 50, refinements: int = 6) -> HypothesisReport:
    """Search ``(a, p)`` satisfying the power-law inequalities.

    A log-spaced ``grid x grid`` scan over the rectangle is followed by local
    re-gridding around the least-violating point; among feasible points the
    smallest ``a``, then smallest ``p``, is returned.  The verdict itself is the
    exact one of :func:`hsigma_feasible_analytic`; when the search misses a thin
    feasible region the analytic construction supplies the witness.
    ``gamma1``/``gamma2 = None`` switch the Gaussian/stable part off.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    la, lp = np.log(a_range), np.log(np.asarray(p_range) - 2.0)
    a_ax, p_ax = np.linspace(*la, grid), np.linspace(*lp, grid)
    source = None
    witness = None
    for level in range(refinements + 1):
        A, P = np.meshgrid(np.exp(a_ax), 2.0 + np.exp(p_ax), indexing="ij")
        ineq = hsigma_inequalities(d, alpha, gamma1, gamma2, A, P)
        ok = ineq["gaussian_c1"][1] & ineq["stable_c1"][1] & ineq["inverse_power"][1]
        witness = _grid_pick(A, P, ok)
        if witness is not None:
            source = "grid" if level == 0 else f"refinement {level}"
            break
        viol = _violation(ineq)
        i, j = np.unravel_index(np.argmin(viol), viol.shape)
        da, dp = a_ax[1] - a_ax[0], p_ax[1] - p_ax[0]
        a_ax = np.linspace(a_ax[i] - da, a_ax[i] + da, grid)
        p_ax = np.linspace(p_ax[j] - dp, p_ax[j] + dp, grid)
    analytic = hsigma_feasible_analytic(d, alpha, gamma1, gamma2)
    if witness is None and analytic:
        witness = _analytic_witness(d, alpha, gamma1, gamma2)
        source = "analytic"
    details = {"witness_source": source, "analytic_feasible": analytic,
               "gaussian_threshold_sup": None if gamma1 is None else 1.0 / d - 0.5 + (
                   0.0 if gamma2 is None else 1.0 / (d * alpha * gamma2))}
    if witness is None:
        flags = {name: False for name in HSIGMA_NAMES}
        return HypothesisReport(False, None, float("nan"), float("nan"), float("nan"), flags,
                                "infeasible", details)
    ineq = hsigma_inequalities(d, alpha, gamma1, gamma2, witness[0], witness[1])
    flags = {name: bool(ineq[name][1]) for name in HSIGMA_NAMES}
    details["lhs"] = {name: float(ineq[name][0]) for name in HSIGMA_NAMES}
    feasible = all(flags.values())
    if feasible != analytic:
        details["note"] = "search witness disagrees with the analytic region"
    c1_exp = max(float(ineq["gaussian_c1"][0]), float(ineq["stable_c1"][0]))
    return HypothesisReport(feasible, witness if feasible else None, float("nan"), c1_exp,
                            float("nan"), flags, "feasible" if feasible else "infeasible", details)


# ---------------------------------------------------------------------------
# Hilbert-Schmidt sums and the domain of V

@dataclass(frozen=True)
class HSReport:
    """Truncated sums ``sum_k k^{2 g_i - 2/d}`` and their verdicts."""

    N1_finite: bool
    N2_finite: bool
    hs_sums: tuple
    tail_exponents: tuple
    statuses: tuple
    stoch_conv_finite: Optional[bool] = None
    stoch_conv_sum: Optional[float] = None
    stoch_conv_a: Optional[float] = None

    def to_dict(self) -> dict:
        return _jsonable(self.__dict__)


def _power_exponent(sigma, known):
    if known is not None:
        return float(known)
    if not np.any(sigma > 0):
        return None
    return fitted_exponent(sigma)


def check_hs_embedding(model: SpectralModel, noise: NoiseSpec, t: float = 1.0) -> HSReport:
    """Hilbert-Schmidt sums for ``sigma_{i,k} ~ k^{g_i}``; finite iff ``g_i < 1/d - 1/2``.

    For the Gaussian part the factorization condition
    ``int_0^t s^{-a} ||T_s Sigma_1||_HS^2 ds < inf`` for some ``a`` in (0, 1) is
    evaluated as well: the per-mode integral is
    ``sigma^2 (2|lambda|)^{a-1} Gamma(1-a) P(1-a, 2|lambda| t)``.
    """
    d = model.dim_d
    k = np.arange(1, model.truncation_N + 1, dtype=float)
    sums, exps, stats, fins = [], [], [], []
    for sigma, known in ((noise.sigma1, noise.gamma1), (noise.sigma2, noise.gamma2)):
        g = _power_exponent(sigma, known)
        if g is None:
            sums.append(0.0)
            exps.append(-np.inf)
            stats.append("absent")
            fins.append(True)
            continue
        e = 2 * g - 2.0 / d
        v = verdict(k**e, e)
        sums.append(v.partial_sum)
        exps.append(e)
        stats.append(v.status)
        fins.append(v.finite)
    sc_fin = sc_sum = sc_a = None
    g1 = _power_exponent(noise.sigma1, noise.gamma1)
    if g1 is not None:
        growth = _eigen_growth(model)
        e0 = 2 * g1 - growth.exponent
        # any admissible a works when e0 < -1; take one inside (0, 1)
        sc_a = float(np.clip(-(1 + e0) / (2 * growth.exponent), 1e-6, 0.999)) if e0 < -1 else 1e-6
        lam = model.abs_eigenvalues
        terms = (k ** (2 * g1) * (2 * lam) ** (sc_a - 1) * special.gamma(1 - sc_a)
                 * special.gammainc(1 - sc_a, 2 * lam * t))
        v = verdict(terms, e0 + growth.exponent * sc_a)
        sc_fin, sc_sum = v.finite, v.partial_sum
    return HSReport(fins[0], fins[1], tuple(sums), tuple(exps), tuple(stats), sc_fin, sc_sum, sc_a)


@dataclass(frozen=True)
class H0Membership:
    member: bool
    tail_exponent: float
    boundary: bool

    @property
    def status(self) -> str:
        if self.boundary:
            return "boundary, not member"
        return "member" if self.member else "not member"


def h0_membership(rho: float, model: SpectralModel, params: LyapunovParams) -> H0Membership:
    """Whether ``x_k ~ k^-rho`` has ``sum |lambda_k|^a |x_k|^p < inf`` (exponent ``2a/d - p rho``)."""
    e = 2 * params.a / model.dim_d - params.p * rho
    finite, boundary = exponent_verdict(e)
    return H0Membership(finite, float(e), boundary)
