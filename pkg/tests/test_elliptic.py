import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special
from scipy.integrate import quad

from nlslab.elliptic import amplitude, complete_K, jacobi
from nlslab.errors import ModulusOutOfRange


def test_origin_and_circular_limit():
    e = jacobi(0.0, 0.3)
    assert (float(e.sn), float(e.cn), float(e.dn)) == (0.0, 1.0, 1.0)
    u = np.linspace(-7, 7, 31)
    e = jacobi(u, 0.0)
    assert np.allclose(e.sn, np.sin(u)) and np.allclose(e.cn, np.cos(u)) and np.all(e.dn == 1)


def test_quarter_period():
    K = complete_K(0.5)
    e = jacobi(K, 0.5)
    assert float(e.sn) == pytest.approx(1.0, abs=1e-14)
    assert float(e.cn) == pytest.approx(0.0, abs=1e-14)
    assert float(e.dn) == pytest.approx(np.sqrt(0.5), abs=1e-14)


def test_complete_K_values():
    assert complete_K(0.0) == np.pi / 2
    Kq = quad(lambda t: 1 / np.sqrt(1 - 0.5 * np.sin(t) ** 2), 0, np.pi / 2, epsabs=1e-14)[0]
    assert complete_K(0.5) == pytest.approx(Kq, abs=1e-13)
    assert complete_K(0.5) == pytest.approx(1.8540746773013719, abs=1e-14)
    assert complete_K(0.25) < complete_K(0.5) < complete_K(0.75)


@settings(max_examples=200, deadline=None)
@given(st.floats(-200, 200, allow_nan=False), st.floats(0, 0.999, allow_nan=False))
def test_against_scipy(u, m):
    e = jacobi(u, m)
    sn, cn, dn, ph = special.ellipj(u, m)
    # the reference loses accuracy proportional to |u| through argument reduction
    tol = 1e-12 * (1 + abs(u))
    assert abs(e.sn - sn) < tol and abs(e.cn - cn) < tol and abs(e.dn - dn) < tol
    assert amplitude(u, m) == pytest.approx(ph, abs=tol)
    assert complete_K(m) == pytest.approx(special.ellipk(m), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50, allow_nan=False), st.floats(0, 0.999, allow_nan=False))
def test_identities(u, m):
    e = jacobi(u, m)
    assert abs(e.sn**2 + e.cn**2 - 1) < 1e-13
    assert abs(e.dn**2 + m * e.sn**2 - 1) < 1e-13
    assert np.isclose(e.sd, e.sn / e.dn) and np.isclose(e.nd * e.dn, 1) and np.isclose(e.cd * e.dn, e.cn)


def test_period_and_parity():
    m = 0.37
    u = np.linspace(-3, 3, 41)
    P = 4 * complete_K(m)
    a, b = jacobi(u, m), jacobi(u + P, m)
    assert np.allclose(a.sn, b.sn, atol=1e-13) and np.allclose(a.cn, b.cn, atol=1e-13)
    c = jacobi(-u, m)
    assert np.allclose(c.sn, -a.sn, atol=1e-15) and np.allclose(c.cn, a.cn, atol=1e-15)


def test_amplitude_inverts_incomplete_integral():
    m = 0.6
    for u in (-2.5, 0.3, 1.9, 7.0):
        phi = amplitude(u, m)
        F = quad(lambda t: 1 / np.sqrt(1 - m * np.sin(t) ** 2), 0, phi, epsabs=1e-13)[0]
        assert F == pytest.approx(u, abs=1e-11)


def test_bad_modulus():
    for m in (-0.1, 1.0, np.nan):
        with pytest.raises(ModulusOutOfRange):
            jacobi(0.5, m)
