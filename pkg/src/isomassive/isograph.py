"""Isoradial graphs built from train-track arrangements on the torus.

Each unoriented track ``j`` with primitive homology ``(h, v)`` is drawn as the
straight closed geodesic ``v x - h y = c_j (mod 1)`` on the unit torus. Faces
of this line arrangement are the vertices of the diamond graph; in the
universal cover a face is labelled by the integer vector
``N_j = floor(v_j x - h_j y - c_j)``. Crossing line ``j`` upward is a diamond
step ``exp(i alpha_j)``, so the embedding is ``sum_j N_j exp(i alpha_j)`` and the
lattice translation ``(a, b)`` shifts the label by ``a*v - b*h``.
"""

import json
from dataclasses import dataclass, field
from math import gcd

import numpy as np

DEFAULT_EPS = 0.05
_GOLDEN = 0.6180339887498949


class GraphError(ValueError):
    """Raised when a track collection or graph violates an invariant."""


@dataclass(frozen=True)
class Track:
    h: int
    v: int
    alpha_bar: float


@dataclass(frozen=True)
class RhombusEdge:
    """Edge from ``V1[x]`` to ``V1[y] + shift`` with its rhombus angles.

    ``y - x = exp(i alpha_bar) + exp(i beta_bar)`` and
    ``beta_bar = alpha_bar + 2 theta_bar``.
    """

    x: int
    y: int
    shift: tuple
    theta_bar: float
    alpha_bar: float
    beta_bar: float


def _unit(a):
    return np.exp(1j * np.asarray(a, dtype=float))


def _half_angle(a, b):
    """Angle from direction a to direction b in (0, 2 pi)."""
    return float(np.mod(b - a, 2 * np.pi))


class PeriodicGraph:
    """Z^2-periodic isoradial graph given by its fundamental domain.

    Vertices of the infinite graph are triples ``(i, m, n)``: vertex ``i`` of
    the fundamental domain translated by ``(m, n)``.
    """

    def __init__(self, tracks, eps=DEFAULT_EPS, primal_parity=0, offsets=None, name=None):
        self.tracks = tuple(Track(int(h), int(v), float(a)) for h, v, a in tracks)
        self.eps = float(eps)
        self.name = name
        L = len(self.tracks)
        if L < 2:
            raise GraphError("need at least two train-tracks")
        self.L = L
        self._validate_tracks()
        self.h = np.array([t.h for t in self.tracks])
        self.v = np.array([t.v for t in self.tracks])
        self.alpha = np.array([t.alpha_bar for t in self.tracks])
        self.steps = _unit(self.alpha)
        self.rx = self.v.copy()
        self.ry = -self.h.copy()
        self.tau_x = complex(self.rx @ self.steps)
        self.tau_y = complex(self.ry @ self.steps)
        basis = np.array([[self.tau_x.real, self.tau_y.real], [self.tau_x.imag, self.tau_y.imag]])
        if abs(np.linalg.det(basis)) < 1e-9:
            raise GraphError("translations are degenerate")
        self._inv_basis = np.linalg.inv(basis)
        if offsets is None:
            offsets = [(0.1234 + _GOLDEN * (j + 1) + 0.01 * j * j) % 1.0 for j in range(L)]
        self.offsets = np.asarray(offsets, dtype=float)
        self.primal_parity = int(primal_parity) % 2
        self._build()

    # -- construction -------------------------------------------------

    def _validate_tracks(self):
        for j, t in enumerate(self.tracks):
            if (t.h, t.v) == (0, 0) or gcd(t.h, t.v) != 1:
                raise GraphError(f"track {j}: homology ({t.h},{t.v}) is not primitive")
        if sum(t.h for t in self.tracks) % 2 or sum(t.v for t in self.tracks) % 2:
            raise GraphError("bipartiteness failure: a basis cycle crosses an odd number of tracks")
        for i in range(self.L):
            for j in range(i + 1, self.L):
                a, b = self.tracks[i], self.tracks[j]
                det = a.h * b.v - b.h * a.v
                if det == 0:
                    continue
                s = np.sin(b.alpha_bar - a.alpha_bar)
                if s * det <= 0:
                    raise GraphError(
                        f"tracks {i},{j}: angle order does not match homology order (reversed rhombus)")
                gap = np.mod(b.alpha_bar - a.alpha_bar, np.pi)
                if not 2 * self.eps < gap < np.pi - 2 * self.eps:
                    raise GraphError(f"tracks {i},{j}: rhombus half-angle outside (eps, pi/2 - eps)")

    def _canon(self, N):
        """Return (canonical label, (a, b)) with ``N = canon + a rx + b ry``."""
        N = np.asarray(N)
        p = N @ self.steps
        s, t = self._inv_basis @ np.array([p.real, p.imag])
        a = int(np.floor(round(s, 8)))
        b = int(np.floor(round(t, 8)))
        return tuple(int(c) for c in N - a * self.rx - b * self.ry), (a, b)

    def _build(self):
        L = self.L
        h, v, c = self.h, self.v, self.offsets
        faces = {}
        rhombi = []
        for i in range(L):
            for j in range(i + 1, L):
                det = h[i] * v[j] - h[j] * v[i]
                if det == 0:
                    continue
                M = np.array([[v[i], -h[i]], [v[j], -h[j]]], dtype=float)
                Minv = np.linalg.inv(M)
                seen = set()
                r = abs(det) + 1
                for a in range(-r, r + 1):
                    for b in range(-r, r + 1):
                        p = Minv @ np.array([c[i] + a, c[j] + b])
                        key = tuple(np.round(np.mod(p, 1.0), 9) % 1.0)
                        if key in seen:
                            continue
                        seen.add(key)
                        rhombi.append((i, j, p, a, b))
                if len(seen) != abs(det):
                    raise GraphError(f"tracks {i},{j}: found {len(seen)} crossings, expected {abs(det)}")
        diamond_edges = []
        for i, j, p, a, b in rhombi:
            f = v * p[0] - h * p[1] - c
            N0 = np.floor(f).astype(int)
            others = np.ones(L, bool)
            others[[i, j]] = False
            frac = np.abs(f[others] - np.round(f[others]))
            if frac.size and frac.min() < 1e-9:
                raise GraphError("three tracks meet at a point; change offsets")
            N0[i], N0[j] = a - 1, b - 1
            ei = np.eye(L, dtype=int)[i]
            ej = np.eye(L, dtype=int)[j]
            corners = [N0, N0 + ei, N0 + ei + ej, N0 + ej]
            for N in corners:
                faces.setdefault(self._canon(N)[0], None)
            diamond_edges.append((i, j, N0))
        self._rhombi = diamond_edges
        primal = sorted(f for f in faces if sum(f) % 2 == self.primal_parity)
        dual = sorted(f for f in faces if sum(f) % 2 != self.primal_parity)
        if not primal or not dual:
            raise GraphError("degenerate arrangement")
        self.labels = np.array(primal, dtype=int)
        self.dual_labels = np.array(dual, dtype=int)
        self._index = {f: k for k, f in enumerate(primal)}
        self._dual_index = {f: k for k, f in enumerate(dual)}
        self.positions = self.labels @ self.steps
        edges = []
        for i, j, N0 in diamond_edges:
            ei = np.eye(L, dtype=int)[i]
            ej = np.eye(L, dtype=int)[j]
            if (N0.sum() % 2) == self.primal_parity:
                X, Y = N0, N0 + ei + ej
                va, vb = self.alpha[i], self.alpha[j]
            else:
                X, Y = N0 + ei, N0 + ej
                va, vb = self.alpha[i] + np.pi, self.alpha[j]
            cx, sx = self._canon(X)
            cy, sy = self._canon(Y)
            # order the two diamond vectors so that beta = alpha + 2 theta with theta in (0, pi/2)
            if _half_angle(va, vb) < np.pi:
                a_bar, b_bar = va, vb
            else:
                a_bar, b_bar = vb, va
            theta = _half_angle(a_bar, b_bar) / 2
            edges.append(RhombusEdge(self._index[cx], self._index[cy],
                                     (sy[0] - sx[0], sy[1] - sx[1]),
                                     theta, float(np.mod(a_bar, 2 * np.pi)), float(np.mod(b_bar, 2 * np.pi))))
        self.edges = tuple(edges)
        self.star = [[] for _ in primal]
        for e in edges:
            self.star[e.x].append(e.theta_bar)
            self.star[e.y].append(e.theta_bar)
        for k, s in enumerate(self.star):
            if abs(sum(s) - np.pi) > 1e-9:
                raise GraphError(f"vertex {k}: half-angles sum to {sum(s)}, not pi")
        for e in edges:
            if not self.eps < e.theta_bar < np.pi / 2 - self.eps:
                raise GraphError(f"edge {e}: half-angle outside (eps, pi/2 - eps)")
            d = self.position((e.y,) + e.shift) - self.positions[e.x]
            if abs(d - _unit(e.alpha_bar) - _unit(e.beta_bar)) > 1e-9:
                raise GraphError("rhombus geometry inconsistent")
        self.p_x = int(np.abs(self.v).sum()) // 2
        self.p_y = int(np.abs(self.h).sum()) // 2

    # -- accessors ----------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.labels)

    @property
    def directions(self):
        """Distinct diamond step directions (both orientations), sorted in [0, 2 pi)."""
        a = np.mod(np.concatenate([self.alpha, self.alpha + np.pi]), 2 * np.pi)
        return np.unique(np.round(a, 12))

    def label(self, x):
        """Track coordinates of vertex ``x = (i, m, n)``."""
        i, m, n = x
        return self.labels[i] + m * self.rx + n * self.ry

    def vertex_of_label(self, N):
        """Inverse of :meth:`label` for primal labels."""
        cN, (a, b) = self._canon(N)
        if cN not in self._index:
            raise GraphError(f"label {tuple(N)} is not a primal vertex")
        return (self._index[cN], a, b)

    def is_face(self, N):
        cN = self._canon(N)[0]
        return cN in self._index or cN in self._dual_index

    def position(self, x):
        i, m, n = x
        return complex(self.positions[i] + m * self.tau_x + n * self.tau_y)

    def crossings(self, x, y):
        """Signed number of times each track separates x from y (``N_y - N_x``)."""
        return self.label(y) - self.label(x)

    def minimal_path(self, x, y):
        """Step directions of a minimal diamond path from x to y.

        Returns
        -------
        list of (alpha_bar, multiplicity)
            Distinct reduced angles in [0, 2 pi) sorted increasingly.
        """
        return path_from_crossings(self.crossings(x, y), self.alpha)

    def distance(self, x, y):
        return int(np.abs(self.crossings(x, y)).sum())

    def neighbors(self, x):
        """Yield (neighbor, theta_bar, alpha_bar, beta_bar) with angles as seen from x."""
        i, m, n = x
        for e in self.edges:
            if e.x == i:
                yield (e.y, m + e.shift[0], n + e.shift[1]), e.theta_bar, e.alpha_bar, e.beta_bar
            if e.y == i:
                # reversed edge: vectors from y are the negatives, reflected order
                yield ((e.x, m - e.shift[0], n - e.shift[1]), e.theta_bar,
                       float(np.mod(e.beta_bar + np.pi, 2 * np.pi)), float(np.mod(e.alpha_bar + np.pi, 2 * np.pi)))

    def intersection(self, i, j):
        """Algebraic intersection number ``T_i ^ T_j = h_i v_j - h_j v_i``."""
        return int(self.h[i] * self.v[j] - self.h[j] * self.v[i])

    # -- finite graphs -------------------------------------------------

    def patch(self, R, center=(0, 0)):
        """Vertices ``(i, m, n)`` with ``|m - cm|, |n - cn| <= R``; outside is killed."""
        cm, cn = center
        verts = [(i, m, n) for m in range(cm - R, cm + R + 1)
                 for n in range(cn - R, cn + R + 1) for i in range(self.n_vertices)]
        return self._finite(verts, wrap=None)

    def torus(self, n1, n2):
        """The toroidal graph obtained by quotienting by ``n1 Z x n2 Z``."""
        verts = [(i, m, n) for m in range(n1) for n in range(n2) for i in range(self.n_vertices)]
        return self._finite(verts, wrap=(n1, n2))

    def _finite(self, verts, wrap):
        index = {x: k for k, x in enumerate(verts)}
        E, th, al, be = [], [], [], []
        for (i, m, n) in verts:
            for e in self.edges:
                if e.x != i:
                    continue
                y = (e.y, m + e.shift[0], n + e.shift[1])
                if wrap is not None:
                    y = (y[0], y[1] % wrap[0], y[2] % wrap[1])
                if y in index:
                    E.append((index[(i, m, n)], index[y]))
                    th.append(e.theta_bar)
                    al.append(e.alpha_bar)
                    be.append(e.beta_bar)
        star = [list(self.star[x[0]]) for x in verts]
        pos = np.array([self.position(x) for x in verts])
        return FiniteGraph(pos, np.array(E, dtype=int).reshape(-1, 2), np.array(th), np.array(al),
                           np.array(be), star, list(verts))

    def to_json(self):
        return json.dumps({"tracks": [{"h": t.h, "v": t.v, "alpha_bar": t.alpha_bar} for t in self.tracks]})


def path_from_crossings(counts, alpha):
    """Group signed track crossings into (angle, multiplicity) steps."""
    out = {}
    for N, a in zip(counts, alpha):
        if N == 0:
            continue
        ang = round(float(np.mod(a if N > 0 else a + np.pi, 2 * np.pi)), 12)
        out[ang] = out.get(ang, 0) + abs(int(N))
    return sorted(out.items())


@dataclass
class FiniteGraph:
    """Finite isoradial graph (patch or torus) with killed exterior.

    ``star[x]`` lists the half-angles of all rhombi around x in the infinite
    graph, so ``sum_j A(theta_j)`` is the diagonal of the Laplacian even at
    boundary vertices; edges leaving the patch act as extra killing.
    """

    positions: np.ndarray
    edges: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    star: list
    labels: list = field(default=None)

    def __post_init__(self):
        if self.labels is None:
            self.labels = list(range(len(self.star)))
        self.index = {x: k for k, x in enumerate(self.labels)}

    @property
    def n(self):
        return len(self.star)

    def copy(self):
        return FiniteGraph(self.positions.copy(), self.edges.copy(), self.theta.copy(), self.alpha.copy(),
                           self.beta.copy(), [list(s) for s in self.star], list(self.labels))

    def incident(self, x):
        return [k for k, (a, b) in enumerate(self.edges) if a == x or b == x]

    def degree(self, x):
        return sum((a == x) + (b == x) for a, b in self.edges)


def star_triangle(g, site):
    """Star-triangle move on a finite isoradial graph.

    Parameters
    ----------
    g : FiniteGraph
    site : int or tuple of 3 ints
        A vertex of degree 3 whose whole star lies in the graph (star to
        triangle), or three pairwise adjacent vertices (triangle to star).

    Returns
    -------
    FiniteGraph
        New graph; for star to triangle the centre is removed and the edge
        opposite ``x_l`` gets half-angle ``pi/2 - theta_l``.
    """
    if isinstance(site, (int, np.integer)):
        return _star_to_triangle(g, int(site))
    return _triangle_to_star(g, tuple(int(s) for s in site))


def _star_to_triangle(g, x0):
    inc = g.incident(x0)
    if len(inc) != 3 or len(g.star[x0]) != 3:
        raise GraphError(f"vertex {x0} is not an interior degree-3 vertex")
    nbrs = [int(g.edges[k][1] if g.edges[k][0] == x0 else g.edges[k][0]) for k in inc]
    th = [float(g.theta[k]) for k in inc]
    if len(set(nbrs)) != 3:
        raise GraphError(f"vertex {x0} has repeated neighbours")
    f0 = sum(g.positions[x] for x in nbrs) - 2 * g.positions[x0]
    keep = [k for k in range(len(g.edges)) if k not in inc]
    E = [tuple(g.edges[k]) for k in keep]
    T, A, B = [g.theta[k] for k in keep], [g.alpha[k] for k in keep], [g.beta[k] for k in keep]
    star = [list(s) for s in g.star]
    for l in range(3):
        i, j = nbrs[(l + 1) % 3], nbrs[(l + 2) % 3]
        t = np.pi / 2 - th[l]
        E.append((i, j))
        T.append(t)
        # rhombus vectors from x_i: towards the new dual centre, then from it to x_j
        u1 = np.angle(f0 - g.positions[i])
        u2 = np.angle(g.positions[j] - f0)
        lo, hi = (u1, u2) if _half_angle(u1, u2) < np.pi else (u2, u1)
        A.append(float(np.mod(lo, 2 * np.pi)))
        B.append(float(np.mod(hi, 2 * np.pi)))
    for l in range(3):
        s = star[nbrs[l]]
        s.remove(_closest(s, th[l]))
        s.extend([np.pi / 2 - th[(l + 1) % 3], np.pi / 2 - th[(l + 2) % 3]])
    mapping = [k for k in range(g.n) if k != x0]
    return _reindex(g, mapping, E, T, A, B, star, g.positions)


def _triangle_to_star(g, tri):
    x1, x2, x3 = tri
    xs = [x1, x2, x3]
    opp = []
    for l in range(3):
        i, j = xs[(l + 1) % 3], xs[(l + 2) % 3]
        ks = [k for k, (a, b) in enumerate(g.edges) if {int(a), int(b)} == {i, j}]
        if len(ks) != 1:
            raise GraphError(f"vertices {i},{j} are not joined by exactly one edge")
        opp.append(ks[0])
    th_opp = [float(g.theta[k]) for k in opp]
    if abs(sum(th_opp) - np.pi / 2) > 1e-9:
        raise GraphError("triangle half-angles do not sum to pi/2; flip not admissible")
    # the dual vertex inside the triangle is the common rhombus corner
    f0 = _triangle_face(g, xs)
    p0 = sum(g.positions[x] for x in xs) - 2 * f0
    keep = [k for k in range(len(g.edges)) if k not in opp]
    E = [tuple(g.edges[k]) for k in keep]
    T, A, B = [g.theta[k] for k in keep], [g.alpha[k] for k in keep], [g.beta[k] for k in keep]
    star = [list(s) for s in g.star] + [[]]
    new = g.n
    pos = np.append(g.positions, p0)
    for l in range(3):
        t = np.pi / 2 - th_opp[l]
        E.append((new, xs[l]))
        T.append(t)
        d = g.positions[xs[l]] - p0
        u1, u2 = np.angle(d * np.exp(-1j * t)), np.angle(d * np.exp(1j * t))
        A.append(float(np.mod(u1, 2 * np.pi)))
        B.append(float(np.mod(u2, 2 * np.pi)))
        star[new].append(t)
        s = star[xs[l]]
        s.remove(_closest(s, np.pi / 2 - th_opp[(l + 1) % 3]))
        s.remove(_closest(s, np.pi / 2 - th_opp[(l + 2) % 3]))
        s.append(t)
    out = FiniteGraph(pos, np.array(E, dtype=int), np.array(T), np.array(A), np.array(B), star,
                      list(g.labels) + [("flip", tuple(g.labels[x] for x in xs))])
    return out


def _triangle_face(g, xs):
    """Centre of the unit circle through the three triangle vertices."""
    a, b, c = (g.positions[x] for x in xs)
    d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    ux = (abs(a) ** 2 * (b.imag - c.imag) + abs(b) ** 2 * (c.imag - a.imag) + abs(c) ** 2 * (a.imag - b.imag)) / d
    uy = (abs(a) ** 2 * (c.real - b.real) + abs(b) ** 2 * (a.real - c.real) + abs(c) ** 2 * (b.real - a.real)) / d
    return complex(ux, uy)


def _closest(seq, value):
    k = int(np.argmin([abs(s - value) for s in seq]))
    if abs(seq[k] - value) > 1e-9:
        raise GraphError("angle bookkeeping mismatch")
    return seq[k]


def _reindex(g, mapping, E, T, A, B, star, pos):
    old_to_new = {old: new for new, old in enumerate(mapping)}
    E2 = np.array([(old_to_new[a], old_to_new[b]) for a, b in E], dtype=int).reshape(-1, 2)
    return FiniteGraph(np.array([pos[k] for k in mapping]), E2, np.array(T), np.array(A), np.array(B),
                       [star[k] for k in mapping], [g.labels[k] for k in mapping])


_PRESETS = {
    # Z^2: diagonal tracks; Newton polygon is the diamond with vertices (+-1, 0), (0, +-1)
    "square": dict(tracks=[(1, -1, np.pi / 4), (1, 1, 3 * np.pi / 4)]),
    # three tracks pairwise crossing once; the even class has one vertex of degree 6
    "triangular": dict(tracks=[(1, 0, np.pi / 2), (1, 1, 5 * np.pi / 6), (0, 1, 7 * np.pi / 6)]),
    "hexagonal": dict(tracks=[(1, 0, np.pi / 2), (1, 1, 5 * np.pi / 6), (0, 1, 7 * np.pi / 6)]),
    # four tracks with homologies (1,0), (2,1), (1,2), (0,1)
    "paper-fig4": dict(tracks=[(1, 0, 0.50 * np.pi), (2, 1, 0.65 * np.pi), (1, 2, 0.85 * np.pi),
                               (0, 1, 1.00 * np.pi)]),
}


def preset(name):
    """Periodic graph by name: square, triangular, hexagonal or paper-fig4."""
    if name not in _PRESETS:
        raise GraphError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}")
    spec = _PRESETS[name]
    for parity in (0, 1):
        g = PeriodicGraph(spec["tracks"], primal_parity=parity, name=name)
        if name == "triangular" and g.n_vertices != 1:
            continue
        if name == "hexagonal" and g.n_vertices != 2:
            continue
        return g
    raise GraphError(f"preset {name!r} could not be realised")


PRESETS = tuple(_PRESETS)


def build_periodic_graph(tracks, eps=DEFAULT_EPS, primal_parity=0):
    """Build a periodic isoradial graph from ``[(h, v, alpha_bar), ...]``."""
    return PeriodicGraph(tracks, eps=eps, primal_parity=primal_parity)


def load_graph(obj):
    """Load a graph spec: ``{"preset": name}`` or ``{"tracks": [{"h", "v", "alpha_bar"}, ...]}``."""
    if isinstance(obj, str):
        with open(obj) as fh:
            obj = json.load(fh)
    if "preset" in obj:
        return preset(obj["preset"])
    if "tracks" not in obj:
        raise GraphError("graph spec needs 'preset' or 'tracks'")
    tracks = []
    for j, t in enumerate(obj["tracks"]):
        try:
            tracks.append((int(t["h"]), int(t["v"]), float(t["alpha_bar"])))
        except (KeyError, TypeError, ValueError) as err:
            raise GraphError(f"track {j}: malformed entry {t!r}") from err
    return PeriodicGraph(tracks, eps=obj.get("eps", DEFAULT_EPS), primal_parity=obj.get("primal_parity", 0))
