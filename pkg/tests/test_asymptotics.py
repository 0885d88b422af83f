import numpy as np
import pytest

from isomassive.asymptotics import (SaddleData, green_asymptotic, green_asymptotic_saddle, rate_from_amoeba,
                                    saddle_point, saddle_point_path, saddle_rate, sign_changes)
from isomassive.elliptic import complete_integrals
from isomassive.expfun import dchi, path_data
from isomassive.green import green_local


@pytest.mark.parametrize("name", ["square", "hexagonal", "paper-fig4"])
def test_saddle_is_unique_critical_point(graphs, name):
    g = graphs[name]
    c = complete_integrals(0.5)
    for x in ((0, 7, 2), (0, -3, 5), (0, 1, -6)):
        pd = path_data(g, x, (0, 0, 0), c)
        sd = saddle_point_path(pd, c)
        assert abs(dchi(pd, sd.u0, c)) < 1e-12
        assert sd.chi < 0 < sd.chi2
        assert sign_changes(pd, c) == 1


def test_ratio_tends_to_one(graphs):
    g = graphs["hexagonal"]
    c = complete_integrals(0.6)
    ratios = [green_local(g, (0, n, n // 2), (0, 0, 0), c) / green_asymptotic(g, (0, n, n // 2), (0, 0, 0), c)
              for n in (4, 8, 16, 32, 64)]
    gaps = np.abs(np.array(ratios) - 1)
    assert np.all(np.diff(gaps) < 0) and gaps[-1] < 0.02


@pytest.mark.parametrize("name", ["triangular", "paper-fig4"])
def test_saddle_rate_is_amoeba_support(graphs, name):
    g = graphs[name]
    for k in (0.3, 0.8):
        c = complete_integrals(k)
        for d in ((1, 0), (0, 1), (2, -1), (3, 2), (-1, -4)):
            assert saddle_rate(g, d, c) == pytest.approx(rate_from_amoeba(g, d, c), rel=1e-7)


def test_errors(graphs):
    g = graphs["square"]
    c = complete_integrals(0.5)
    with pytest.raises(ValueError):
        saddle_point(g, (0, 0, 0), (0, 0, 0), c)
    with pytest.raises(ArithmeticError):
        green_asymptotic_saddle(SaddleData(0.0, -0.1, 1e-12, 0.0, 0.1, 10), c)


def test_square_diagonal_saddle_bound(graphs):
    from isomassive.elliptic import sncndn

    g = graphs["square"]
    c = complete_integrals(0.5)
    pd = path_data(g, (0, 10, 10), (0, 0, 0), c)
    sd = saddle_point_path(pd, c)
    assert abs(dchi(pd, sd.u0, c)) < 1e-11
    _, w = pd.sector(c)
    assert sd.chi <= np.log(np.sqrt(c.kprime) / sncndn(w / 2, c)[2].real) + 1e-14
