import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelscatter.bessel import bessel_jy, hankel1, hankel_log_derivative, hankel_log_derivatives

mpmath.mp.dps = 30

# rho_n(z) = H_n'(z)/H_n(z), frozen from 30-digit mpmath evaluations
RHO_SPOT = {
    (0, np.pi): -0.1559465856193295 + 1.0112513475731402j,
    (1, np.pi): -0.16935645922870357 + 0.9659035055865867j,
    (3, 2 * np.pi): -0.09958549032519785 + 0.8882515255544283j,
}


def mp_rho(n, z):
    h = lambda m: mpmath.besselj(m, z) + 1j * mpmath.bessely(m, z)
    if n == 0:
        return complex(-h(1) / h(0))
    return complex((h(n - 1) - n / mpmath.mpf(z) * h(n)) / h(n))


@pytest.mark.parametrize("n,z", list(RHO_SPOT))
def test_rho_spot_values(n, z):
    got = hankel_log_derivative(n, z)
    assert abs(got - RHO_SPOT[(n, z)]) <= 1e-10 * abs(RHO_SPOT[(n, z)])
    assert abs(got - mp_rho(n, z)) <= 1e-10 * abs(got)


def test_rho_zero_order_identity():
    for z in [0.1, 0.7, 3.0, 9.5]:
        h = hankel1(1, z)
        assert hankel_log_derivative(0, z) == pytest.approx(-h[1] / h[0], rel=1e-14)


def test_rho_large_order_asymptotics():
    assert hankel_log_derivative(50, np.pi).real == pytest.approx(-50 / np.pi, rel=0.05)


def test_negative_order_shares_ratio():
    assert hankel_log_derivative(-4, 2.0) == hankel_log_derivative(4, 2.0)


def test_domain_error():
    with pytest.raises(ValueError):
        hankel_log_derivative(1, 0.0)
    with pytest.raises(ValueError):
        bessel_jy(3, -1.0)


@settings(max_examples=40, deadline=None)
@given(z=st.floats(0.1, 30.0), n=st.integers(0, 40))
def test_jy_against_mpmath(z, n):
    j, y = bessel_jy(n, z)
    jr, yr = float(mpmath.besselj(n, z)), float(mpmath.bessely(n, z))
    assert abs(j[n] - jr) <= 1e-12 * max(abs(jr), 1e-3) + 1e-300
    assert abs(y[n] - yr) <= 1e-11 * abs(yr)


@settings(max_examples=30, deadline=None)
@given(z=st.floats(0.1, 20.0))
def test_wronskian(z):
    j, y = bessel_jy(30, z)
    w = j[1:] * y[:-1] - j[:-1] * y[1:]
    np.testing.assert_allclose(w, 2 / (np.pi * z), rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(z=st.floats(0.1, 20.0))
def test_outgoing_sign(z):
    # Im rho_n = 2 / (pi z |H_n|^2) > 0
    rho = hankel_log_derivatives(40, z)
    assert np.all(rho.imag > 0)
    h = hankel1(40, z)
    np.testing.assert_allclose(rho.imag, 2 / (np.pi * z * np.abs(h) ** 2), rtol=1e-8)
