import numpy as np
import pytest

from isomassive.elliptic import PoleError, complete_integrals, sncndn
from isomassive.expfun import (chi, d2chi, dchi, exp_factor, harmonicity_residual, mass_exp, mass_exp_path,
                               path_data, path_data_from_steps)


@pytest.fixture(scope="module")
def setup(graphs):
    g = graphs["paper-fig4"]
    c = complete_integrals(0.6)
    rng = np.random.default_rng(2)
    u = rng.uniform(0, 4 * c.K, 20) + 1j * rng.uniform(-1.8, 1.8, 20) * c.Kprime
    return g, c, u


def test_trivial_path_is_one(setup):
    g, c, u = setup
    assert np.allclose(mass_exp(g, (1, 2, 3), (1, 2, 3), u, c), 1.0)


def test_reversal_and_path_independence(setup):
    g, c, u = setup
    x, y, z = (0, 1, -1), (2, -2, 1), (3, 0, 2)
    exy = mass_exp(g, x, y, u, c)
    assert np.allclose(exy * mass_exp(g, y, x, u, c), 1.0)
    assert np.allclose(mass_exp(g, x, z, u, c) * mass_exp(g, z, y, u, c), exy, rtol=1e-11)


def test_critical_limit_is_tangent_product():
    c = complete_integrals(0.0)
    pd = path_data_from_steps([(0.3, 2), (1.4, 1)], c)
    u = np.array([0.2 + 0.1j, 2.0 - 0.4j])
    want = (1j * np.tan((u - 2 * 0.3 / np.pi * c.K) / 2)) ** 2 * 1j * np.tan((u - 1.4 * 2 * c.K / np.pi) / 2)
    assert np.allclose(mass_exp_path(pd, u, c), want)


def test_pole_detected(setup):
    g, c, _ = setup
    pd = path_data(g, (0, 3, 1), (0, 0, 0), c)
    with pytest.raises(PoleError):
        mass_exp_path(pd, pd.alpha[0] + 2 * c.K, c)
    assert mass_exp_path(pd, pd.alpha[0], c) == 0


def test_factor_zero_and_pole_locations():
    c = complete_integrals(0.5)
    assert abs(exp_factor(0.7, 0.7, c)) == 0.0
    assert abs(exp_factor(0.7 + 2 * c.K - 1e-7, 0.7, c)) > 1e6


def test_chi_is_log_modulus_on_shifted_line(setup):
    g, c, _ = setup
    pd = path_data(g, (1, 4, -2), (0, 0, 0), c)
    u = np.linspace(0, 4 * c.K, 17)[:-1] + 0.01
    e = mass_exp_path(pd, u + 2j * c.Kprime, c)
    assert np.allclose(chi(pd, u, c).real, np.log(np.abs(e)) / pd.length, atol=1e-12)
    assert pd.weights.sum() == pytest.approx(1.0)


def test_chi_derivatives(setup):
    g, c, _ = setup
    pd = path_data(g, (1, 4, -2), (0, 0, 0), c)
    h = 1e-5
    for u in (0.3, 1.1 + 0.2j, 2.9):
        assert abs((chi(pd, u + h, c) - chi(pd, u - h, c)) / (2 * h) - dchi(pd, u, c)) < 1e-9
        assert abs((dchi(pd, u + h, c) - dchi(pd, u - h, c)) / (2 * h) - d2chi(pd, u, c)) < 1e-9
    with pytest.raises(ValueError):
        chi(pd, 3j * c.Kprime, c)


def test_sector_of_minimal_path(graphs):
    c = complete_integrals(0.5)
    for g in graphs.values():
        pd = path_data(g, (0, 5, 3), (0, 0, 0), c)
        mid, w = pd.sector(c)
        assert 0 <= w < c.K
        assert np.all(np.abs(np.angle(np.exp(1j * np.pi * (pd.alpha - mid) / (2 * c.K))))
                      <= np.pi * w / (2 * c.K) + 1e-12)


@pytest.mark.parametrize("name", ["square", "hexagonal", "paper-fig4"])
def test_harmonic_in_both_variables(graphs, name):
    g = graphs[name]
    c = complete_integrals(0.8)
    rng = np.random.default_rng(4)
    u = rng.uniform(0, 4 * c.K, 30) + 1j * rng.uniform(-2, 2, 30) * c.Kprime
    x, y = (0, 1, 2), (g.n_vertices - 1, -1, 0)
    assert harmonicity_residual(g, x, y, u, c).max() < 1e-11
    # reversing every step shifts the angles by 2K, so e_(x, y)(u) = e_(y, x)(u + 2K)
    # and harmonicity in y reduces to the first slot
    a, b = mass_exp(g, x, y, u, c), mass_exp(g, y, x, u + 2 * c.K, c)
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-10
    assert harmonicity_residual(g, y, x, u + 2 * c.K, c).max() < 1e-11


def test_detour_path_gives_same_value(setup):
    g, c, u = setup
    x, y = (0, 2, 1), (0, 0, 0)
    steps = g.minimal_path(x, y)
    # a non-minimal path: one extra step forth and back along every track direction
    detour = list(steps) + [(float(a), 1) for a in g.alpha] + [(float(np.mod(a + np.pi, 2 * np.pi)), 1)
                                                               for a in g.alpha]
    prod = np.ones_like(u)
    for a, n in detour:
        prod = prod * exp_factor(u, float(c.elliptic_angle(a)), c) ** n
    want = mass_exp(g, x, y, u, c)
    assert np.max(np.abs(prod - want) / np.abs(want)) < 1e-10


def test_shifted_line_and_decay_bound(graphs):
    g = graphs["square"]
    c = complete_integrals(0.5)
    pd = path_data(g, (0, 6, 4), (0, 0, 0), c)
    u = np.random.default_rng(7).uniform(0, 4 * c.K, 30)
    e = mass_exp_path(pd, u + 2j * c.Kprime, c)
    assert np.allclose(np.exp(pd.length * chi(pd, u, c)), e, rtol=1e-9)
    mid, w = pd.sector(c)
    # every step angle lies within w of the midpoint and nd increases on [0, K], with nd(K/2) = 1/sqrt(k')
    bound = np.log(np.sqrt(c.kprime) / np.real(sncndn(w / 2, c)[2]))
    assert chi(pd, mid, c).real <= bound + 1e-14 and bound < 0


def test_neighbour_value_at_shifted_origin(graphs):
    c = complete_integrals(0.6)
    g = graphs["paper-fig4"]
    for e in g.edges:
        al, be = c.elliptic_angle(e.alpha_bar), c.elliptic_angle(e.beta_bar)
        want = c.kprime / (sncndn(al / 2, c)[2] * sncndn(be / 2, c)[2])
        got = mass_exp(g, (e.x, 0, 0), (e.y, *e.shift), 2j * c.Kprime, c)
        assert got == pytest.approx(complex(want), rel=1e-11)
