import numpy as np

from mehlerlab.series import BOUNDARY_TOL, exponent_verdict, fitted_exponent, verdict


def test_exponent_verdict_threshold():
    assert exponent_verdict(-1.2) == (True, False)
    assert exponent_verdict(-0.8) == (False, False)
    # the boundary itself diverges
    assert exponent_verdict(-1.0) == (False, True)
    assert exponent_verdict(-1.0 + BOUNDARY_TOL / 2) == (False, True)


def test_fitted_exponent_recovers_power():
    k = np.arange(1, 2001, dtype=float)
    assert abs(fitted_exponent(3.0 * k**-1.7) + 1.7) < 1e-9


def test_verdict_partial_sum():
    k = np.arange(1, 101, dtype=float)
    v = verdict(k**-2.0, exponent=-2.0)
    assert v.finite and not v.boundary
    assert abs(v.partial_sum - np.sum(k**-2.0)) < 1e-12
