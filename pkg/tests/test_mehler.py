import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mehlerlab.mehler import (check_M1, check_M2, decay_integral, log_mu_hat, mehler_apply,
                              mu_hat, sample_mu, sample_mu_at_times, t_infinity)
from mehlerlab.noise import NoiseSpec
from mehlerlab.rng import SeedSpec
from mehlerlab.spectral import dirichlet_spectrum, semigroup_apply

PI2 = math.pi**2


@pytest.fixture
def one_mode():
    return dirichlet_spectrum(1, 1), NoiseSpec(1.0, "diagonal", [1.0], [0.0])


def test_mu_hat_origin_and_time_zero(demo_model, demo_noise, elliptical_noise):
    xi = np.linspace(-1, 1, 64)
    for noise in (demo_noise, elliptical_noise):
        assert mu_hat(demo_model, noise, np.zeros(64), 1.0) == 1.0
        assert mu_hat(demo_model, noise, xi, 0.0) == 1.0


def test_mu_hat_stationary_limit(one_mode):
    model, noise = one_mode
    # int_0^inf exp(2 lambda_1 s) ds = 1 / (2 pi^2)
    assert decay_integral(2.0, model, math.inf)[0] == pytest.approx(1 / (2 * PI2))
    assert mu_hat(model, noise, [1.0], math.inf) == pytest.approx(math.exp(-1 / (2 * PI2)), abs=1e-12)
    # the quoted six-digit value 0.950599 is off by 2e-6 from exp(-0.0506606)
    assert abs(mu_hat(model, noise, [1.0], math.inf) - 0.950599) < 5e-6


def test_check_M1_strictly_decreasing(one_mode):
    model, noise = one_mode
    vals = check_M1(model, noise, [1.0], [2.0**-j for j in range(11)])
    assert np.all(np.diff(vals) < 0)
    assert np.all(check_M1(model, noise, [0.0], [1.0, 0.5]) == 0)


@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0),
       st.lists(st.floats(-3, 3), min_size=16, max_size=16))
@settings(max_examples=60, deadline=None)
def test_M2_diagonal_closed_form(t, s, xi):
    model = dirichlet_spectrum(1, 16)
    noise = NoiseSpec.power_law(16, 0.7, "diagonal", -1.0, -1.5)
    assert check_M2(model, noise, t, s, np.array(xi)) <= 1e-12


def test_M2_s_zero_exact(demo_model, demo_noise):
    xi = np.linspace(-2, 2, 64)
    assert check_M2(demo_model, demo_noise, 0.7, 0.0, xi) == 0.0


def test_M2_elliptical_quadrature():
    model = dirichlet_spectrum(1, 16)
    noise = NoiseSpec.power_law(16, 1.3, "elliptical", None, -1.0)
    rng = np.random.default_rng(11)
    for _ in range(5):
        t, s = rng.uniform(0.01, 3, 2)
        assert check_M2(model, noise, t, s, rng.standard_normal(16)) <= 1e-7


def test_elliptical_single_mode_matches_diagonal():
    model = dirichlet_spectrum(1, 4)
    xi = np.array([0.0, 1.3, 0.0, 0.0])
    a = NoiseSpec.power_law(4, 1.4, "diagonal", -1.0, -1.0)
    b = NoiseSpec.power_law(4, 1.4, "elliptical", -1.0, -1.0)
    assert log_mu_hat(model, a, xi, 0.8) == pytest.approx(log_mu_hat(model, b, xi, 0.8), rel=1e-9)


def test_t_infinity_is_negligible(demo_model):
    assert math.exp(2 * demo_model.eigenvalues[0] * t_infinity(demo_model)) < 1e-16


def _cf_z(Y, xi, target):
    c = np.cos(Y @ xi)
    return abs(c.mean() - target) / (c.std(ddof=1) / math.sqrt(c.size))


def test_sample_mu_diagonal_cf(demo_model, demo_noise):
    Y = sample_mu(demo_model, demo_noise, 0.5, SeedSpec(1), size=50_000)
    xi = np.zeros(64)
    xi[:3] = [2.0, -1.0, 3.0]
    assert _cf_z(Y, xi, mu_hat(demo_model, demo_noise, xi, 0.5)) < 4


def test_elliptical_refinement_converges():
    model = dirichlet_spectrum(1, 8)
    noise = NoiseSpec.power_law(8, 1.0, "elliptical", None, -0.5)
    xi = np.array([1.5, 1.5, 1.0, 0, 0, 0, 0, 0.5])
    target = mu_hat(model, noise, xi, 0.5)
    errs = []
    for sub in (1, 64):
        Y = sample_mu(model, noise, 0.5, SeedSpec(2, (sub,)), size=100_000, substeps=sub)
        errs.append(abs(np.cos(Y @ xi).mean() - target))
    assert _cf_z(Y, xi, target) < 4
    assert errs[1] < errs[0]


def test_markov_consistency(demo_model, demo_noise):
    """T_s Y_t + Y'_s has the law of Y_{t+s}."""
    n, t, s = 60_000, 0.3, 0.2
    Yt = sample_mu(demo_model, demo_noise, t, SeedSpec(3, (0,)), size=n)
    Ys = sample_mu(demo_model, demo_noise, s, SeedSpec(3, (1,)), size=n)
    Z = semigroup_apply(demo_model, s, Yt) + Ys
    xi = np.zeros(64)
    xi[:2] = [3.0, 2.0]
    assert _cf_z(Z, xi, mu_hat(demo_model, demo_noise, xi, t + s)) < 4


def test_sample_at_times_matches_marginals(demo_model, demo_noise):
    times = np.full(40_000, 0.4)
    Y = sample_mu_at_times(demo_model, demo_noise, times, SeedSpec(4))
    xi = np.zeros(64)
    xi[0] = 2.5
    assert _cf_z(Y, xi, mu_hat(demo_model, demo_noise, xi, 0.4)) < 4


def test_mehler_apply_constant_and_zero_noise(demo_model, demo_noise):
    x = np.linspace(1, 0, 64)
    one = mehler_apply(demo_model, demo_noise, 0.3, lambda X: np.ones(len(X)), x, 500, seed=1)
    assert one.value == 1.0 and one.std_error == 0.0
    zero = NoiseSpec.zero(64)
    f = lambda X: X[:, 0]
    est = mehler_apply(demo_model, zero, 0.3, f, x, 200, seed=1)
    assert est.value == pytest.approx(semigroup_apply(demo_model, 0.3, x)[0]) and est.std_error == 0


def test_mehler_apply_fourier_identity(demo_model, demo_noise):
    xi = np.zeros(64)
    xi[:2] = [1.0, 2.0]
    est = mehler_apply(demo_model, demo_noise, 0.5, lambda X: np.cos(X @ xi), np.zeros(64),
                       50_000, seed=SeedSpec(5))
    assert abs(est.value - mu_hat(demo_model, demo_noise, xi, 0.5)) <= 3 * est.std_error


def test_sampling_is_reproducible(demo_model, elliptical_noise):
    a = sample_mu(demo_model, elliptical_noise, 0.5, SeedSpec(6), size=10, substeps=4)
    b = sample_mu(demo_model, elliptical_noise, 0.5, SeedSpec(6), size=10, substeps=4)
    assert np.array_equal(a, b)


def test_size_mismatch_rejected(demo_model):
    with pytest.raises(ValueError):
        log_mu_hat(demo_model, NoiseSpec.zero(3), np.zeros(64), 1.0)
