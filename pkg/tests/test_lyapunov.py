import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mehlerlab.experiments import excessivity_suite, lyapunov_ray
from mehlerlab.lyapunov import (FrozenV, LyapunovParams, check_excessivity, check_H_A_mu,
                                check_H_Sigma, check_hs_embedding, eval_v, eval_V,
                                gaussian_threshold, h0_membership, hsigma_feasible_analytic,
                                hsigma_inequalities, laplace_decay_power, make_gamma_sequence,
                                moment_integrals)
from mehlerlab.mehler import sample_mu_at_times
from mehlerlab.noise import NoiseSpec
from mehlerlab.rng import SeedSpec
from mehlerlab.spectral import constant_spectrum, dirichlet_spectrum

PI2 = math.pi**2


def params_for(model, noise, a=0.1, p=2.3, q=1.0, gamma=0.4, theta=1.0):
    gs = make_gamma_sequence(gamma, q, noise, model, theta)
    return LyapunovParams(a, p, q, gamma, gs.values)


@pytest.fixture(scope="module")
def demo(demo_model, demo_noise):
    return demo_model, demo_noise, params_for(demo_model, demo_noise)


# closed-form time integrals

@given(st.floats(0.2, 2.0), st.floats(0.1, 3.0), st.floats(0.05, 5.0), st.floats(0.5, 200.0))
@settings(max_examples=40, deadline=None)
def test_laplace_decay_power_matches_quadrature(beta, rho, q, lam):
    f = lambda t: math.exp(-q * t) * (-math.expm1(-beta * lam * t) / (beta * lam)) ** rho
    ref, _ = integrate.quad(f, 0, math.inf, limit=200, epsrel=1e-11)
    assert laplace_decay_power(beta, rho, q, lam) == pytest.approx(ref, rel=1e-7)


def test_moment_integrals_against_monte_carlo():
    model = dirichlet_spectrum(1, 3)
    noise = NoiseSpec.power_law(3, 1.2, "diagonal", None, -1.0)
    q, r, n = 1.0, 0.6, 200_000
    rng = np.random.default_rng(1)
    tau = rng.exponential(1 / q, n)
    Y = sample_mu_at_times(model, noise, tau, rng)
    mc = np.abs(Y) ** r
    exact = moment_integrals(model, noise, r, q)
    # only one noise part, so the bound is exact
    assert np.all(np.abs(mc.mean(0) / q - exact) < 4 * mc.std(0) / math.sqrt(n) / q)


# weights

def test_gamma_sequence_examples(demo_model, demo_noise):
    gs = make_gamma_sequence(1.0, 1.0, demo_noise, demo_model, 1.0)
    assert np.allclose(gs.values, 1.0 / np.arange(1, 65))
    assert gs.summability.finite and gs.summability.tail_exponent == -2.0
    with pytest.raises(ValueError):
        make_gamma_sequence(1.0, 1.0, demo_noise, demo_model, 0.4)


# v

def test_eval_v_hand_values():
    model = dirichlet_spectrum(1, 1)
    params = LyapunovParams(1.0, 2.0, 1.0, 1.0, np.array([1.0]))
    assert eval_v([0.0], model, params).total == 0.0
    v = eval_v([0.5], model, params)
    assert v.total == pytest.approx(PI2**2 * 0.25 + 0.5, rel=1e-14)
    assert round(v.total, 3) == 24.852
    capped = eval_v([10.0], model, params)
    assert capped.spectral == pytest.approx(PI2**2, rel=1e-14)
    assert capped.moment == pytest.approx(10.0)


@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8), st.floats(1.0, 4.0))
@settings(max_examples=50)
def test_v_nondecreasing_along_rays(x, s):
    model = dirichlet_spectrum(1, 8)
    params = LyapunovParams(0.2, 2.5, 1.0, 0.5, np.minimum(1.0, np.arange(1, 9.0) ** -1.0))
    x = np.array(x)
    assert eval_v(s * x, model, params).total >= eval_v(x, model, params).total - 1e-12


def test_eval_V_zero_noise_at_origin(demo_model):
    noise = NoiseSpec.zero(64)
    params = params_for(demo_model, noise)
    est = eval_V(np.zeros(64), demo_model, noise, params, 100, seed=0)
    assert est.value == 0.0 and est.std_error == 0.0


def test_eval_V_common_random_numbers(demo):
    model, noise, params = demo
    x = np.zeros(64)
    x[0] = 2.0
    a = eval_V(x, model, noise, params, 500, SeedSpec(1))
    b = eval_V(x, model, noise, params, 500, SeedSpec(1))
    assert a == b
    frozen = FrozenV(model, noise, params, 500, SeedSpec(1))
    assert frozen(x) == pytest.approx(a.value, rel=1e-12)


def test_eval_V_flags_divergence(demo):
    model, noise, params = demo
    x = np.zeros(64)
    x[0] = 1.0
    assert eval_V(x, model, noise, params, 200, 0, ceiling=1e-3).diverging


def test_ray_monotone(demo):
    model, noise, params = demo
    rows = lyapunov_ray(model, noise, params, [1.0, 5.0, 25.0], 5000, SeedSpec(2))
    vals = [r[2] for r in rows]
    assert vals[0] < vals[1] < vals[2]


def test_excessivity_small(demo):
    model, noise, params = demo
    rows = excessivity_suite(model, noise, params, 2, [0.1], 5000, SeedSpec(3))
    assert all(r[6] for r in rows)


def test_excessivity_gaussian_only():
    model = dirichlet_spectrum(1, 4)
    noise = NoiseSpec.power_law(4, 1.0, "diagonal", -1.0, None)
    params = LyapunovParams(0.5, 2.5, 1.0, 0.5, np.ones(4) * 0.5)
    x = np.zeros(4)
    x[0] = 0.3
    chk = check_excessivity(x, model, noise, params, 0.1, 20_000, SeedSpec(4))
    assert chk.passed and chk.margin > -3 * math.hypot(chk.discounted.std_error,
                                                       chk.reference.std_error)


# H_A_mu

def test_hamu_gaussian_example():
    model = dirichlet_spectrum(1, 64)
    noise = NoiseSpec.power_law(64, 1.0, "diagonal", -0.2, None)
    rep = check_H_A_mu(model, noise, params_for(model, noise, a=0.24, p=2.93))
    assert rep.feasible and rep.witness == (0.24, 2.93)
    assert rep.c1_tail_exponent == pytest.approx(2 * (1.24 - 2.93 / 2) + 2.93 * -0.2)


def test_hamu_nondecaying_stable_scales():
    model = dirichlet_spectrum(1, 64)
    noise = NoiseSpec(1.0, "diagonal", np.zeros(64), np.ones(64), None, 0.0)
    rep = check_H_A_mu(model, noise, params_for(model, noise, a=0.24, p=2.93))
    assert not rep.feasible
    assert rep.c1_tail_exponent == pytest.approx(2 * 0.24)
    assert not rep.condition_flags["c1_finite"]


def test_hamu_zero_noise(demo_model):
    noise = NoiseSpec.zero(64)
    rep = check_H_A_mu(demo_model, noise, params_for(demo_model, noise))
    assert rep.feasible and rep.c1_truncated == 0.0 and rep.c2_truncated == 0.0


def test_hamu_demo_feasible(demo):
    rep = check_H_A_mu(*demo)
    assert rep.feasible, rep.condition_flags
    assert rep.c1_tail_exponent < -1 and math.isfinite(rep.c1_truncated)


def test_hamu_bounded_drift_infeasible(demo_noise):
    model = constant_spectrum(64, -1.0)
    rep = check_H_A_mu(model, demo_noise, params_for(model, demo_noise))
    assert not rep.feasible and not rep.condition_flags["eigenvalues_unbounded"]


def test_hamu_report_serializes(demo):
    import json
    json.dumps(check_H_A_mu(*demo).to_dict(), allow_nan=False)


# H_Sigma

def test_hsigma_witness_hand_values():
    ineq = hsigma_inequalities(1, 1.0, -0.2, -1.5, 0.24, 2.93)
    assert ineq["gaussian_c1"][0] == pytest.approx(-1.036)
    assert ineq["stable_c1"][0] == pytest.approx(-1.02)
    assert ineq["inverse_power"][0] == pytest.approx(0.96 / 0.93)
    assert round(float(ineq["inverse_power"][0]), 3) == 1.032
    assert all(bool(v[1]) for v in ineq.values())


def test_hsigma_search_feasible():
    rep = check_H_Sigma(1, 1.0, -0.2, -1.5, (1e-3, 10), (2.001, 20))
    assert rep.feasible
    a, p = rep.witness
    assert all(bool(v[1]) for v in hsigma_inequalities(1, 1.0, -0.2, -1.5, a, p).values())


def test_hsigma_infeasible_slow_stable_decay():
    assert not hsigma_feasible_analytic(1, 1.0, -0.2, -0.5)
    rep = check_H_Sigma(1, 1.0, -0.2, -0.5)
    assert not rep.feasible and rep.witness is None


@given(st.integers(1, 3), st.floats(0.2, 1.9), st.floats(-2.0, 1.0), st.floats(-4.0, -0.1))
@settings(max_examples=60, deadline=None)
def test_hsigma_search_agrees_with_region(d, alpha, g1, g2):
    rep = check_H_Sigma(d, alpha, g1, g2, grid=20, refinements=3)
    assert rep.feasible == hsigma_feasible_analytic(d, alpha, g1, g2)
    if rep.feasible:
        a, p = rep.witness
        assert all(bool(v[1]) for v in hsigma_inequalities(d, alpha, g1, g2, a, p).values())


def test_gaussian_threshold_limit():
    assert gaussian_threshold(1, 1e12) == pytest.approx(0.5)
    assert gaussian_threshold(2, 4.0) == pytest.approx(-0.25)


# HS embedding and the domain of V

@pytest.mark.parametrize("d, g, finite", [(1, 0.4, True), (2, 0.0, False), (1, 0.5, False),
                                          (3, -0.2, True)])
def test_hs_examples(d, g, finite):
    model = dirichlet_spectrum(d, 50)
    noise = NoiseSpec.power_law(50, 1.0, "diagonal", g, None)
    rep = check_hs_embedding(model, noise)
    assert rep.N1_finite is finite
    assert rep.N2_finite


def test_hs_boundary_status():
    rep = check_hs_embedding(dirichlet_spectrum(2, 50),
                             NoiseSpec.power_law(50, 1.0, "diagonal", 0.0, None))
    assert rep.statuses[0] == "boundary: divergent"


def test_stochastic_convolution_crosscheck():
    model = dirichlet_spectrum(1, 64)
    rep = check_hs_embedding(model, NoiseSpec.power_law(64, 1.0, "diagonal", 0.4, None))
    assert rep.stoch_conv_finite and 0 < rep.stoch_conv_a < 1


def test_h0_membership_examples():
    model = dirichlet_spectrum(1, 8)
    params = LyapunovParams(0.24, 2.93, 1.0, 0.5, np.ones(8) * 0.5)
    m = h0_membership(1.0, model, params)
    assert m.member and m.tail_exponent == pytest.approx(-2.45)
    assert h0_membership(0.0, model, params).status == "not member"
    rho = (2 * 0.24 + 1) / 2.93
    assert h0_membership(rho, model, params).status == "boundary, not member"
