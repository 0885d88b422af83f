import mpmath as mp
import numpy as np
import pytest

from isomassive.elliptic import complete_integrals
from isomassive.laplacian import (a_term, conductance, diagonal, fourier_laplacian, laplacian_matrix, mass,
                                  mass_from_angles, mass_term)

mp.mp.dps = 40


def mp_mass_term(theta_bar, k):
    """``A(theta) - sc(theta)`` from the integral definition of A, at 40 digits."""
    m = mp.mpf(k) ** 2
    K, E = mp.ellipk(m), mp.ellipe(m)
    t = mp.mpf(theta_bar) * 2 * K / mp.pi
    dc2 = mp.quad(lambda s: (mp.ellipfun("dn", s, m=m) / mp.ellipfun("cn", s, m=m)) ** 2, [0, t])
    kp = mp.sqrt(1 - m)
    A = (dc2 + (E - K) * t / K) / kp
    return A - mp.ellipfun("sn", t, m=m) / mp.ellipfun("cn", t, m=m)


@pytest.mark.parametrize("k,rtol", [(1e-3, 1e-7), (0.05, 1e-10), (0.3, 1e-12), (0.9, 1e-12)])
def test_mass_term_relative_accuracy(k, rtol):
    c = complete_integrals(k)
    for th in (0.2, np.pi / 4, 1.3):
        assert mass_term(th, c) == pytest.approx(float(mp_mass_term(th, k)), rel=rtol)


def test_mass_term_is_difference_of_A_and_sc():
    c = complete_integrals(0.7)
    th = np.linspace(0.05, 1.5, 20)
    assert np.allclose(mass_term(th, c), a_term(th, c) - conductance(th, c), atol=1e-13)


def test_diagonal_is_sum_of_A(graphs):
    c = complete_integrals(0.7)
    for g in graphs.values():
        for x in range(g.n_vertices):
            assert diagonal(g, x, c) == pytest.approx(sum(a_term(t, c) for t in g.star[x]), rel=1e-13)


def test_critical_limit():
    c = complete_integrals(0.0)
    th = np.linspace(0.1, 1.4, 9)
    assert np.allclose(conductance(th, c), np.tan(th))
    assert np.allclose(mass_term(th, c), 0.0, atol=1e-15)


def test_mass_positive_and_increasing(graphs):
    g = graphs["paper-fig4"]
    for x in range(g.n_vertices):
        ms = [mass(g, x, complete_integrals(k)) for k in (0.05, 0.3, 0.6, 0.9)]
        assert ms[0] > 0 and np.all(np.diff(ms) > 0)
    assert mass_from_angles([], complete_integrals(0.5)) == 0.0


def test_half_angle_validation():
    c = complete_integrals(0.5)
    for bad in (0.0, np.pi / 2, -0.3):
        with pytest.raises(ValueError):
            conductance(bad, c)


def test_square_lattice_values():
    # on Z^2 all half-angles are pi/4 and theta = K/2, where sc = 1/sqrt(k')
    c = complete_integrals(0.6)
    assert conductance(np.pi / 4, c) == pytest.approx(1 / np.sqrt(c.kprime), rel=1e-14)


@pytest.mark.parametrize("name", ["square", "hexagonal", "paper-fig4"])
def test_torus_laplacian(graphs, name):
    c = complete_integrals(0.5)
    fg = graphs[name].torus(3, 2)
    lap = laplacian_matrix(fg, c)
    M = lap.dense()
    assert np.allclose(M, M.T)
    assert np.linalg.eigvalsh(M).min() > 0
    # on a torus every star is complete: row sums are the masses
    m2 = np.array([mass_from_angles(s, c) for s in fg.star])
    assert np.allclose(M.sum(axis=1), m2, atol=1e-13)
    assert np.allclose(lap.root_weight, m2, atol=1e-15)


def test_patch_boundary_is_killed(graphs):
    c = complete_integrals(0.5)
    fg = graphs["triangular"].patch(2)
    lap = laplacian_matrix(fg, c)
    m2 = mass(graphs["triangular"], 0, c)
    inner = [x for x in range(fg.n) if fg.degree(x) == 6]
    outer = [x for x in range(fg.n) if fg.degree(x) < 6]
    assert np.allclose(lap.root_weight[inner], m2, rtol=1e-12)
    assert np.all(lap.root_weight[outer] > m2 + 0.1)
    assert np.allclose(lap.dense().sum(axis=1), lap.root_weight)


@pytest.mark.parametrize("name", ["square", "hexagonal", "paper-fig4"])
def test_fourier_laplacian_matches_torus(graphs, name):
    g = graphs[name]
    c = complete_integrals(0.4)
    n1, n2 = 3, 4
    M = laplacian_matrix(g.torus(n1, n2), c).dense()
    ev = np.sort(np.linalg.eigvalsh(M))
    blocks = []
    for a in range(n1):
        for b in range(n2):
            z, w = np.exp(2j * np.pi * a / n1), np.exp(2j * np.pi * b / n2)
            D = fourier_laplacian(g, c, z, w)
            assert np.allclose(D, D.conj().T)
            blocks.extend(np.linalg.eigvalsh(D))
    assert np.allclose(np.sort(blocks), ev, atol=1e-12)
    # at z = w = 1 the constant function picks up only the masses
    assert np.allclose(fourier_laplacian(g, c, 1.0, 1.0).sum(axis=1).real,
                       [mass(g, x, c) for x in range(g.n_vertices)], atol=1e-13)
    with pytest.raises(ValueError):
        fourier_laplacian(g, c, 0.0, 1.0)


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9])
def test_square_lattice_mass(graphs, k):
    c = complete_integrals(k)
    assert mass(graphs["square"], 0, c) == pytest.approx(2 * (1 - 1 / np.sqrt(c.kprime)) ** 2, rel=1e-12)


def test_every_mass_summand_positive():
    th = np.linspace(0.01, np.pi / 2 - 0.01, 100)
    for k in (1e-3, 0.3, 0.9):
        assert np.all(mass_term(th, complete_integrals(k)) > 0)


def test_fourier_laplacian_transpose(graphs):
    c = complete_integrals(0.5)
    rng = np.random.default_rng(6)
    z, w = np.exp(rng.normal(size=2) + 1j * rng.uniform(0, 6, 2))
    for g in graphs.values():
        assert np.allclose(fourier_laplacian(g, c, z, w).T, fourier_laplacian(g, c, 1 / z, 1 / w))
