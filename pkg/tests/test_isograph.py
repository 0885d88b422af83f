import json

import numpy as np
import pytest

from isomassive.isograph import GraphError, PRESETS, PeriodicGraph, load_graph, preset, star_triangle

DEGREES = {"square": {4}, "triangular": {6}, "hexagonal": {3}}


@pytest.mark.parametrize("name", PRESETS)
def test_star_angles_close_up(graphs, name):
    g = graphs[name]
    for i in range(g.n_vertices):
        # rhombus angles 2 theta around a vertex fill the full turn
        assert sum(g.star[i]) == pytest.approx(np.pi, abs=1e-12)
        assert all(0 < t < np.pi / 2 for t in g.star[i])
    for e in g.edges:
        assert 0 < e.theta_bar < np.pi / 2


@pytest.mark.parametrize("name", sorted(DEGREES))
def test_regular_lattice_degrees(graphs, name):
    g = graphs[name]
    assert {sum(1 for _ in g.neighbors((i, 0, 0))) for i in range(g.n_vertices)} == DEGREES[name]


def test_vertex_counts(graphs):
    assert graphs["triangular"].n_vertices == 1
    assert graphs["hexagonal"].n_vertices == 2
    for g in graphs.values():
        # one rhombus per crossing of two tracks in the fundamental domain
        assert len(g.edges) == sum(abs(g.intersection(i, j)) for i in range(g.L) for j in range(i + 1, g.L))


@pytest.mark.parametrize("name", PRESETS)
def test_neighbours_are_unit_rhombus_diagonals(graphs, name):
    g = graphs[name]
    for i in range(g.n_vertices):
        x = (i, 1, -2)
        for y, th, a, b in g.neighbors(x):
            d = g.position(y) - g.position(x)
            assert abs(d - np.exp(1j * a) - np.exp(1j * b)) < 1e-9
            assert abs(d) == pytest.approx(2 * np.cos(th), abs=1e-9)
            assert g.distance(x, y) == 2


@pytest.mark.parametrize("name", PRESETS)
def test_minimal_path_reaches_target(graphs, name):
    g = graphs[name]
    rng = np.random.default_rng(1)
    for _ in range(10):
        x = (int(rng.integers(g.n_vertices)), *map(int, rng.integers(-5, 6, 2)))
        y = (int(rng.integers(g.n_vertices)), *map(int, rng.integers(-5, 6, 2)))
        steps = g.minimal_path(x, y)
        disp = sum(n * np.exp(1j * a) for a, n in steps)
        assert abs(disp - (g.position(y) - g.position(x))) < 1e-9
        assert sum(n for _, n in steps) == g.distance(x, y)
        # a minimal path never uses opposite directions
        angles = [a for a, _ in steps]
        for a in angles:
            assert not any(abs(np.mod(a - b, 2 * np.pi) - np.pi) < 1e-9 for b in angles)


def test_torus_and_patch_sizes(graphs):
    g = graphs["hexagonal"]
    t = g.torus(3, 2)
    assert t.n == 12 and all(t.degree(x) == 3 for x in range(t.n))
    p = g.patch(2)
    assert p.n == 2 * 25
    assert min(p.degree(x) for x in range(p.n)) < 3
    assert all(len(s) == 3 for s in p.star)


def test_invalid_tracks_rejected():
    with pytest.raises(GraphError):
        PeriodicGraph([(2, 0, 0.5), (0, 1, 2.0)])
    with pytest.raises(GraphError):
        PeriodicGraph([(1, 0, 0.5)])
    with pytest.raises(GraphError):
        PeriodicGraph([(1, 0, 0.5), (0, 1, 2.0)])
    with pytest.raises(GraphError):
        preset("nope")


def test_load_graph_roundtrip(graphs, tmp_path):
    g = graphs["paper-fig4"]
    spec = json.loads(g.to_json())
    h = load_graph(spec)
    assert h.n_vertices == g.n_vertices and len(h.edges) == len(g.edges)
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"preset": "square"}))
    assert load_graph(str(path)).n_vertices == graphs["square"].n_vertices
    with pytest.raises(GraphError):
        load_graph({"tracks": [{"h": 1}]})
    with pytest.raises(GraphError):
        load_graph({})


def test_star_triangle_roundtrip(graphs):
    fg = graphs["hexagonal"].patch(2)
    site = next(x for x in range(fg.n) if fg.degree(x) == 3 and len(fg.star[x]) == 3)
    nbrs = sorted(int(b if a == site else a) for a, b in fg.edges if site in (a, b))
    th = sorted(fg.theta[[k for k, e in enumerate(fg.edges) if site in e]])
    ft = star_triangle(fg, site)
    assert ft.n == fg.n - 1 and len(ft.edges) == len(fg.edges)
    tri = tuple(ft.index[fg.labels[x]] for x in nbrs)
    new = sorted(ft.theta[[k for k, (a, b) in enumerate(ft.edges) if a in tri and b in tri]])
    assert np.allclose(sorted(np.pi / 2 - np.array(new)), th)
    back = star_triangle(ft, tri)
    assert back.n == fg.n and len(back.edges) == len(fg.edges)
    assert np.allclose(sorted(back.theta), sorted(fg.theta))
    with pytest.raises(GraphError):
        star_triangle(fg, next(x for x in range(fg.n) if fg.degree(x) < 3))
