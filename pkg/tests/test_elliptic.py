import mpmath as mp
import numpy as np
import pytest

from isomassive.elliptic import (PoleError, complete_integrals, dA, dH, func_A, func_H, func_H_series,
                                 jacobi, jacobi_epsilon, jacobi_zeta, landen_ascend, sc_series, sncndn)

mp.mp.dps = 30
KS = [1e-3, 0.2, 0.5, 0.8, 0.99]


def mp_sncndn(u, k):
    m = k * k
    return [complex(mp.ellipfun(f, mp.mpc(u), m=m)) for f in ("sn", "cn", "dn")]


@pytest.mark.parametrize("k", KS)
def test_complete_integrals_match_mpmath(k):
    c = complete_integrals(k)
    m, m1 = mp.mpf(k) ** 2, 1 - mp.mpf(k) ** 2
    assert c.K == pytest.approx(float(mp.ellipk(m)), rel=1e-14)
    assert c.Kprime == pytest.approx(float(mp.ellipk(m1)), rel=1e-14)
    assert c.E == pytest.approx(float(mp.ellipe(m)), rel=1e-14)
    assert c.Eprime == pytest.approx(float(mp.ellipe(m1)), rel=1e-14)
    assert c.q == pytest.approx(float(mp.exp(-mp.pi * mp.ellipk(m1) / mp.ellipk(m))), rel=1e-12)
    assert abs(c.legendre_residual()) < 1e-13


@pytest.mark.parametrize("k", KS)
def test_sncndn_complex_matches_mpmath(k):
    c = complete_integrals(k)
    rng = np.random.default_rng(0)
    u = rng.uniform(-3, 3, 25) * c.K + 1j * rng.uniform(-0.9, 0.9, 25) * c.Kprime
    got = np.array(sncndn(u, c)).T
    want = np.array([mp_sncndn(x, k) for x in u])
    # the imaginary part goes through ellipj at parameter 1 - k^2, slightly less accurate as k -> 0
    assert np.max(np.abs(got - want) / np.maximum(1, np.abs(want))) < 1e-10


def test_twelve_functions_are_ratios():
    c = complete_integrals(0.6)
    u = 0.3 + 0.2j
    sn, cn, dn = sncndn(u, c)
    assert jacobi("sc", u, c) == pytest.approx(sn / cn)
    assert jacobi("nd", u, c) == pytest.approx(1 / dn)
    assert jacobi("dc", u, c) == pytest.approx(dn / cn)


def test_poles_raise():
    c = complete_integrals(0.5)
    with pytest.raises(PoleError):
        jacobi("sn", 1j * c.Kprime, c)
    with pytest.raises(PoleError):
        jacobi("sc", c.K + 2j * c.Kprime, c)
    with pytest.raises(PoleError):
        func_A(c.K, c)
    with pytest.raises(PoleError):
        func_H(2j * c.Kprime, c)
    with pytest.raises(ValueError):
        jacobi("xy", 0.1, c)


@pytest.mark.parametrize("bad", [-0.1, 1.0, 1.5])
def test_modulus_validation(bad):
    with pytest.raises(ValueError):
        complete_integrals(bad)
    with pytest.raises(ValueError):
        landen_ascend(bad)


def test_k_zero_degenerates_to_trigonometric():
    c = complete_integrals(0.0)
    u = np.array([0.1, 0.7 + 0.2j])
    sn, cn, dn = sncndn(u, c)
    assert np.allclose(sn, np.sin(u)) and np.allclose(cn, np.cos(u)) and np.allclose(dn, 1)
    assert np.allclose(func_A(u, c), np.tan(u))
    assert np.allclose(func_H(u, c), u / (2 * np.pi))


@pytest.mark.parametrize("k", [0.3, 0.7, 0.95])
def test_epsilon_matches_quadrature(k):
    c = complete_integrals(k)
    m = k * k
    for u in (0.4 + 0.3j, 2.5 - 0.6j * c.Kprime, -1.1 + 1.7j * c.Kprime, 3.3 * c.K + 0.2j):
        want = mp.quad(lambda t: mp.ellipfun("dn", t * u, m=m) ** 2 * u, [0, 0.5, 1])
        # quadrature along a segment that crosses no pole of dn^2
        assert abs(jacobi_epsilon(u, c) - complex(want)) < 1e-10


@pytest.mark.parametrize("k", [0.2, 0.6, 0.9])
def test_A_matches_its_integral_definition(k):
    c = complete_integrals(k)
    m = k * k
    for u in (0.3 * c.K, -0.8 * c.K, 0.95 * c.K):
        dc2 = mp.quad(lambda t: (mp.ellipfun("dn", t, m=m) / mp.ellipfun("cn", t, m=m)) ** 2, [0, u])
        want = (dc2 + (c.E - c.K) * u / c.K) / c.kprime
        assert func_A(u, c).real == pytest.approx(float(want), rel=1e-11)
        assert abs(func_A(u, c).imag) < 1e-12


@pytest.mark.parametrize("k", [0.3, 0.8])
def test_derivatives_by_finite_differences(k):
    c = complete_integrals(k)
    h = 1e-5
    for u in (0.2, 0.6 * c.K + 0.3j, 1.4 * c.K - 0.1j):
        assert abs((func_A(u + h, c) - func_A(u - h, c)) / (2 * h) - dA(u, c)) < 1e-8
        assert abs((func_H(u + h, c) - func_H(u - h, c)) / (2 * h) - dH(u, c)) < 1e-8


def test_H_normalisation_and_residue():
    c = complete_integrals(0.5)
    assert abs(func_H(0.0, c)) < 1e-15
    assert func_H(4 * c.K, c).real == pytest.approx(1.0, abs=1e-13)
    d = 1e-6
    assert abs(d * func_H(2j * c.Kprime + d, c) - 2 * c.Kprime / np.pi) < 1e-5


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9])
def test_nome_series(k):
    c = complete_integrals(k)
    x = np.linspace(-0.99, 0.99, 41) * c.K
    assert np.allclose(func_H_series(x, c), func_H(x, c).real, atol=1e-13)
    assert np.allclose(sc_series(x, c), jacobi("sc", x, c).real, rtol=1e-12)


def test_zeta_relative_accuracy_for_small_modulus():
    k = 1e-3
    c = complete_integrals(k)
    m = mp.mpf(k) ** 2
    for x in (0.2, 0.7, 1.3):
        want = mp.ellipe(mp.ellipfun("sn", x, m=m) and mp.asin(mp.ellipfun("sn", x, m=m)), m) \
            - mp.ellipe(m) / mp.ellipk(m) * x
        assert jacobi_zeta(x, c) == pytest.approx(float(want), rel=1e-9)


def test_landen_ascend():
    for k in (0.3, 0.9):
        ell, mu = landen_ascend(k)
        c, cl = complete_integrals(k), complete_integrals(ell)
        assert mu == pytest.approx(c.kprime)
        assert c.K == pytest.approx((1 + ell) * cl.K, rel=1e-14)


def test_critical_modulus_values():
    c = complete_integrals(0.0)
    assert c.K == pytest.approx(np.pi / 2) and c.E == pytest.approx(np.pi / 2) and c.q == 0.0


def test_quarter_period_values():
    rng = np.random.default_rng(3)
    for k in (0.2, 0.6, 0.9):
        c = complete_integrals(k)
        assert jacobi("sc", c.K / 2, c).real == pytest.approx(1 / np.sqrt(c.kprime), rel=1e-14)
        u = rng.uniform(-c.K, c.K, 50) + 1j * rng.uniform(-0.5, 0.5, 50) * c.Kprime
        assert np.allclose(jacobi("sc", u - c.K, c) * jacobi("sc", u, c), -1 / c.kprime, rtol=1e-11)
        assert jacobi_epsilon(2 * c.K, c).real == pytest.approx(2 * c.E, rel=1e-14)


def test_A_periodicity_and_subtraction():
    rng = np.random.default_rng(4)
    for k in (0.3, 0.7):
        c = complete_integrals(k)
        u = rng.uniform(-0.9, 0.9, 40) * c.K + 1j * rng.uniform(-0.4, 0.4, 40) * c.Kprime
        v = rng.uniform(-0.9, 0.9, 40) * c.K + 1j * rng.uniform(-0.4, 0.4, 40) * c.Kprime
        assert np.allclose(func_A(u + 2 * c.K, c), func_A(u, c), atol=1e-11)
        assert np.allclose(func_A(u + 2j * c.Kprime, c), func_A(u, c) + 1j * np.pi / (c.kprime * c.K), atol=1e-11)
        sc = lambda x: jacobi("sc", x, c)
        lhs = func_A(v - u, c)
        rhs = func_A(v, c) - func_A(u, c) - c.kprime * sc(u) * sc(v) * sc(v - u)
        assert np.max(np.abs(lhs - rhs) / np.maximum(1, np.abs(lhs))) < 1e-10


def test_H_small_modulus_limit():
    c = complete_integrals(1e-6)
    u = np.linspace(-6, 6, 25)
    assert np.max(np.abs(func_H(u, c) - u / (2 * np.pi))) < 1e-4


def test_landen_moduli_product():
    for k in (0.1, 0.5, 0.95):
        ell, mu = landen_ascend(k)
        assert (1 + mu) * (1 + ell) == pytest.approx(2.0, rel=1e-14)
