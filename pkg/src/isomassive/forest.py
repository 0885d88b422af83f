"""Rooted spanning forests: determinantal marginals, Wilson sampling, partition function, free energy."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .elliptic import complete_integrals, dH, func_H, sncndn
from .green import green_diagonal, green_local
from .laplacian import conductance, fourier_laplacian, laplacian_matrix, mass

# ---------------------------------------------------------------- items and kernel


@dataclass(frozen=True)
class EdgeItem:
    """Oriented edge ``tail -> head`` with conductance ``rho``."""

    tail: object
    head: object
    rho: float


@dataclass(frozen=True)
class RootItem:
    """Vertex ``x`` being a root, with mass ``m2``."""

    x: object
    m2: float


@dataclass
class TransferImpedance:
    """Kernel of the determinantal forest measure on a list of items.

    Attributes
    ----------
    items : list
        :class:`EdgeItem` and :class:`RootItem` entries.
    H : ndarray
        ``H[a, b]`` per the block formulas (edge-edge, edge-root, root-edge, root-root).
    """

    items: list
    H: np.ndarray

    def marginal(self, idx=None, tol=1e-9):
        """Probability that all selected items are present (determinant of the sub-kernel)."""
        idx = range(len(self.items)) if idx is None else list(idx)
        idx = list(idx)
        if not idx:
            return 1.0
        p = float(np.linalg.det(self.H[np.ix_(idx, idx)]))
        if p < -tol or p > 1 + tol:
            raise ArithmeticError(f"marginal {p:.3e} outside [0, 1]")
        return p


def transfer_impedance(items, green):
    """Assemble the forest kernel from a Green function.

    Parameters
    ----------
    items : sequence of EdgeItem or RootItem
    green : callable
        ``green(x, y)`` returning ``G(x, y)``.
    """
    items = list(items)
    if len(set(items)) != len(items):
        raise ValueError("duplicate items")
    n = len(items)
    H = np.zeros((n, n))
    cache = {}

    def G(x, y):
        if (x, y) not in cache:
            cache[(x, y)] = cache[(y, x)] = green(x, y)
        return cache[(x, y)]

    for a, s in enumerate(items):
        for b, t in enumerate(items):
            if isinstance(s, EdgeItem) and isinstance(t, EdgeItem):
                H[a, b] = t.rho * (G(s.tail, t.tail) - G(s.head, t.tail)
                                   - G(s.tail, t.head) + G(s.head, t.head))
            elif isinstance(s, EdgeItem):
                H[a, b] = t.m2 * (G(s.tail, t.x) - G(s.head, t.x))
            elif isinstance(t, EdgeItem):
                H[a, b] = t.rho * (G(s.x, t.tail) - G(s.x, t.head))
            else:
                H[a, b] = t.m2 * G(s.x, t.x)
    return TransferImpedance(items, H)


def marginal(items, green):
    """Probability that all items are in the random rooted forest."""
    return transfer_impedance(items, green).marginal()


def periodic_edge_item(g, e, ctx, shift=(0, 0)):
    """Item for edge ``e`` (index into ``g.edges``) of a periodic graph, translated by ``shift``."""
    ed = g.edges[e]
    a, b = shift
    return EdgeItem((ed.x, a, b), (ed.y, a + ed.shift[0], b + ed.shift[1]),
                    conductance(ed.theta_bar, ctx))


def periodic_root_item(g, i, ctx, shift=(0, 0)):
    return RootItem((i, shift[0], shift[1]), mass(g, i, ctx))


def periodic_green(g, ctx):
    """Green function callable on periodic-graph labels, via the local formula."""
    return lambda x, y: green_local(g, x, y, ctx)


def finite_items(fg, ctx, edges=(), roots=()):
    """Items of a finite graph; killed patch boundaries are folded into the root weights."""
    lap = laplacian_matrix(fg, ctx)
    out = [EdgeItem(int(fg.edges[e, 0]), int(fg.edges[e, 1]), float(lap.rho[e])) for e in edges]
    out += [RootItem(int(x), float(lap.root_weight[x])) for x in roots]
    return out


def finite_green(fg, ctx):
    Ginv = np.linalg.inv(laplacian_matrix(fg, ctx).dense())
    return lambda x, y: float(Ginv[x, y])


def edge_probability(theta_bar, ctx):
    """``P(e) = 2 sc(theta) K'(k' - dn theta)/pi + 2 H(2 theta)`` for an edge of half-angle theta."""
    th = ctx.elliptic_angle(theta_bar)
    dn = float(np.real(sncndn(th, ctx)[2]))
    return (2 * conductance(theta_bar, ctx) * ctx.Kprime * (ctx.kprime - dn) / np.pi
            + 2 * float(np.real(func_H(2 * th, ctx))))


def root_probability(m2, ctx):
    """``P(x root) = m^2(x) k'K'/pi``."""
    return m2 * green_diagonal(ctx)


def edge_root_sum(g, ctx):
    """``sum_{e in E1} P(e) + sum_{x in V1} P(x)``; equals ``|V1|``."""
    pe = sum(edge_probability(e.theta_bar, ctx) for e in g.edges)
    px = sum(root_probability(mass(g, i, ctx), ctx) for i in range(g.n_vertices))
    return pe + px


# ---------------------------------------------------------------- Wilson sampling


@dataclass
class ForestSample:
    """A rooted spanning forest.

    Attributes
    ----------
    parent_edge : ndarray
        For each vertex, the index of the edge to its parent, or -1 for roots.
    parent : ndarray
        Parent vertex, or -1 for roots.
    """

    parent_edge: np.ndarray
    parent: np.ndarray

    @property
    def roots(self):
        return np.flatnonzero(self.parent < 0)

    @property
    def edges(self):
        return np.sort(self.parent_edge[self.parent_edge >= 0])

    def component_root(self):
        n = len(self.parent)
        root = np.arange(n)
        for x in range(n):
            y, steps = x, 0
            while self.parent[y] >= 0:
                y = self.parent[y]
                steps += 1
                if steps > n:
                    raise ValueError("cycle in forest")
            root[x] = y
        return root

    def validate(self):
        n = len(self.parent)
        comp = self.component_root()
        if not np.all(self.parent[comp] < 0):
            raise ValueError("component without root")
        if len(self.edges) + len(self.roots) != n:
            raise ValueError("edge and root counts do not add up")
        return True


def _walk_tables(fg, ctx):
    """Padded neighbour, edge and cumulative transition tables of the killed walk."""
    lap = laplacian_matrix(fg, ctx)
    n = fg.n
    inc = [[] for _ in range(n)]
    for e, (a, b) in enumerate(fg.edges):
        inc[a].append((b, e))
        if a != b:
            inc[b].append((a, e))
    D = max(len(r) for r in inc) + 1
    nbr = np.full((n, D), -1, dtype=np.int64)
    eid = np.full((n, D), -1, dtype=np.int64)
    prob = np.zeros((n, D))
    total = lap.d
    for x in range(n):
        for j, (y, e) in enumerate(inc[x]):
            nbr[x, j], eid[x, j] = y, e
            prob[x, j] = lap.rho[e] / total[x]
        prob[x, len(inc[x])] = lap.root_weight[x] / total[x]
    if np.any(lap.root_weight <= 0):
        raise ValueError("killed walk requires positive masses")
    cum = np.cumsum(prob, axis=1)
    cum[np.arange(n), [len(r) for r in inc]] = 1.0
    return nbr, eid, cum


def wilson_sample(fg, ctx, rng):
    """One rooted spanning forest by Wilson's algorithm with the killed walk."""
    nbr, eid, cum = _walk_tables(fg, ctx)
    n = fg.n
    in_tree = np.zeros(n, bool)
    nxt = np.full(n, -1, dtype=np.int64)
    nxt_e = np.full(n, -1, dtype=np.int64)
    for start in range(n):
        u = start
        while not in_tree[u]:
            j = int(np.searchsorted(cum[u], rng.random(), side="right"))
            nxt_e[u] = eid[u, j]
            nxt[u] = nbr[u, j]
            if nxt[u] < 0:
                break
            u = nxt[u]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            if nxt[u] < 0:
                break
            u = nxt[u]
    return ForestSample(nxt_e.copy(), nxt.copy())


def wilson_batch(fg, ctx, rng, size):
    """``size`` independent forests, run in lock-step across the batch.

    Returns
    -------
    ndarray, shape (size, n)
        Parent-edge indices (-1 for roots).
    """
    nbr, eid, cum = _walk_tables(fg, ctx)
    n = fg.n
    B = size
    rows = np.arange(B)
    in_tree = np.zeros((B, n), bool)
    nxt = np.full((B, n), -1, dtype=np.int64)
    nxt_e = np.full((B, n), -1, dtype=np.int64)
    start = np.zeros(B, dtype=np.int64)
    cur = np.zeros(B, dtype=np.int64)
    walking = np.ones(B, bool)
    done = np.zeros(B, bool)
    while not done.all():
        w = np.flatnonzero(walking & ~done)
        if w.size:
            u = cur[w]
            j = (rng.random(w.size)[:, None] >= cum[u]).sum(axis=1)
            v = nbr[u, j]
            nxt[w, u] = v
            nxt_e[w, u] = eid[u, j]
            stop = (v < 0) | in_tree[w, np.maximum(v, 0)]
            cur[w] = np.where(stop, start[w], np.maximum(v, 0))
            walking[w[stop]] = False
        r = np.flatnonzero(~walking & ~done)
        if r.size:
            u = cur[r]
            in_tree[r, u] = True
            v = nxt[r, u]
            fin = (v < 0) | in_tree[r, np.maximum(v, 0)]
            cur[r] = np.where(fin, u, v)
            f = r[fin]
            if f.size:
                rest = ~in_tree[f]
                has = rest.any(axis=1)
                nstart = np.argmax(rest, axis=1)
                done[f[~has]] = True
                g = f[has]
                start[g] = nstart[has]
                cur[g] = nstart[has]
                walking[g] = True
    del rows
    return nxt_e


def component_sizes(parent):
    """Sizes of the trees of a forest given its parent array."""
    fs = ForestSample(np.where(parent >= 0, 0, -1), parent)
    _, counts = np.unique(fs.component_root(), return_counts=True)
    return counts


# ---------------------------------------------------------------- partition function


def partition_function_det(fg, ctx):
    """``det`` of the massive Laplacian (log-det based, returned as a float)."""
    sign, logdet = np.linalg.slogdet(laplacian_matrix(fg, ctx).dense())
    if sign <= 0:
        raise ArithmeticError("Laplacian is not positive definite")
    return float(np.exp(logdet))


def _rooted_multigraph(fg, ctx):
    lap = laplacian_matrix(fg, ctx)
    n = fg.n
    W = {}
    for (a, b), r in zip(fg.edges, lap.rho):
        if a != b:
            key = (min(a, b), max(a, b))
            W[key] = W.get(key, 0.0) + r
    for x in range(n):
        if lap.root_weight[x] != 0:
            W[(x, n)] = lap.root_weight[x]
    return n + 1, W


def spanning_tree_sum(n, weights, max_vertices=13):
    """Weighted spanning-tree sum of a multigraph by contraction-deletion with memoisation.

    Parameters
    ----------
    n : int
        Number of vertices, labelled ``0..n-1``.
    weights : dict
        ``{(a, b): w}`` with parallel edges already merged.
    """
    if n > max_vertices:
        raise ValueError(f"enumeration capped at {max_vertices} vertices")

    def canon(edges):
        return frozenset((min(a, b), max(a, b), w) for (a, b), w in edges.items())

    @lru_cache(maxsize=None)
    def solve(key, nv):
        edges = {(a, b): w for a, b, w in key}
        if nv == 1:
            return 1.0
        deg = {}
        for (a, b) in edges:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        if len(deg) < nv:
            return 0.0
        # a pendant edge must be in every spanning tree
        leaf = next((v for v, d in deg.items() if d == 1), None)
        if leaf is not None:
            (a, b), w = next(((e, w) for e, w in edges.items() if leaf in e))
            return w * solve(*_contract(edges, a, b, nv))
        (a, b), w = max(edges.items(), key=lambda t: deg[t[0][0]] + deg[t[0][1]])
        rest = dict(edges)
        del rest[(a, b)]
        return solve(canon(rest), nv) + w * solve(*_contract(edges, a, b, nv))

    def _contract(edges, a, b, nv):
        # merge b into a, relabel the last vertex as b to keep labels compact
        last = nv - 1
        out = {}
        for (c, d), w in edges.items():
            c = a if c == b else c
            d = a if d == b else d
            if c == d:
                continue
            c = b if c == last and b != last else c
            d = b if d == last and b != last else d
            key = (min(c, d), max(c, d))
            out[key] = out.get(key, 0.0) + w
        return canon(out), nv - 1

    return solve(canon(weights), n)


def partition_function_enum(fg, ctx, max_vertices=12):
    """Rooted spanning forest sum as spanning trees of the graph with an added root vertex."""
    if fg.n > max_vertices:
        raise ValueError(f"enumeration capped at {max_vertices} vertices")
    n, W = _rooted_multigraph(fg, ctx)
    return spanning_tree_sum(n, W, max_vertices=max_vertices + 1)


def enumerate_forests(fg, ctx, max_edges=16):
    """All rooted spanning forests of a small graph with their weights.

    Returns a list of ``(frozenset(edges), frozenset(roots), weight)``.
    """
    lap = laplacian_matrix(fg, ctx)
    n, m = fg.n, len(fg.edges)
    if m > max_edges:
        raise ValueError("too many edges for exhaustive enumeration")
    out = []
    for mask in range(1 << m):
        sel = [e for e in range(m) if mask >> e & 1]
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        ok = True
        for e in sel:
            a, b = find(fg.edges[e, 0]), find(fg.edges[e, 1])
            if a == b:
                ok = False
                break
            parent[a] = b
        if not ok:
            continue
        comps = {}
        for x in range(n):
            comps.setdefault(find(x), []).append(x)
        w_edges = float(np.prod(lap.rho[sel])) if sel else 1.0
        groups = list(comps.values())
        for choice in np.ndindex(*[len(c) for c in groups]):
            roots = frozenset(c[i] for c, i in zip(groups, choice))
            w = w_edges * float(np.prod([lap.root_weight[x] for x in roots]))
            out.append((frozenset(sel), roots, w))
    return out


# ---------------------------------------------------------------- free energy


def _theta_integrand_f(t, ctx):
    sn, cn, dn = (float(np.real(v)) for v in sncndn(t, ctx))
    return -2 * float(np.real(func_H(2 * t, ctx))) * dn / (sn * cn)


def _theta_integrand_s(t, ctx):
    sn, cn, _ = (float(np.real(v)) for v in sncndn(t, ctx))
    return -4 * float(np.real(dH(2 * t, ctx))) * np.log(sn / cn)


def _quad(f, a, b):
    val, err = quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def vertex_entropy_term(ctx):
    """``int_0^K -4 H'(2 theta) log sc(theta) d theta``, split at K/2 for the log endpoints."""
    f = lambda t: _theta_integrand_s(t, ctx)
    return _quad(f, 0.0, ctx.K / 2) + _quad(f, ctx.K / 2, ctx.K)


def edge_energy_term(theta_bar, ctx):
    """``int_0^theta -2 H(2t) sc'(t)/sc(t) dt`` (finite at 0 since H(0) = 0)."""
    th = float(ctx.elliptic_angle(theta_bar))
    return _quad(lambda t: _theta_integrand_f(t, ctx), 0.0, th)


def edge_energy_term_parts(theta_bar, ctx):
    """Integrated-by-parts form: ``-2 H(2 theta) log sc(theta) + int_0^theta 4 H'(2t) log sc(t) dt``."""
    th = float(ctx.elliptic_angle(theta_bar))
    boundary = -2 * float(np.real(func_H(2 * th, ctx))) * np.log(conductance(theta_bar, ctx))
    return boundary - _quad(lambda t: _theta_integrand_s(t, ctx), 0.0, th)


def free_energy_closed(g, ctx, parts=False):
    """Free energy per fundamental domain from the angles of the edges."""
    edge = edge_energy_term_parts if parts else edge_energy_term
    return g.n_vertices * vertex_entropy_term(ctx) + sum(edge(e.theta_bar, ctx) for e in g.edges)


def twisted_entropy(g, ctx):
    """``-F - sum_e 2 H(2 theta_e) log rho(theta_e)``."""
    F = free_energy_closed(g, ctx)
    s = sum(2 * float(np.real(func_H(2 * ctx.elliptic_angle(e.theta_bar), ctx)))
            * np.log(conductance(e.theta_bar, ctx)) for e in g.edges)
    return -F - s


def free_energy_fourier(g, ctx, N=None, tol=1e-8, N0=16, N_max=1024, scale=1.0):
    """``-`` mean of ``log det Delta(z, w)`` over the unit torus, refined by grid doubling.

    ``scale`` multiplies all conductances and masses (used to check the additive shift).
    """

    def at(N):
        t = 2 * np.pi * np.arange(N) / N
        Z, W = np.meshgrid(np.exp(1j * t), np.exp(1j * t), indexing="ij")
        sign, ld = np.linalg.slogdet(scale * fourier_laplacian(g, ctx, Z, W))
        if np.any(np.abs(sign) == 0):
            raise ArithmeticError("singular Laplacian on the unit torus")
        return -float(np.mean(ld))

    if N is not None:
        return at(N)
    prev = at(N0)
    N = 2 * N0
    while N <= N_max:
        cur = at(N)
        if abs(cur - prev) < tol:
            return cur
        prev, N = cur, 2 * N
    raise ArithmeticError(f"Fourier free energy did not converge up to N = {N_max}")


def lobachevsky(x):
    """``L(x) = -int_0^x log(2 sin t) dt``."""
    if x == 0:
        return 0.0
    return -_quad(lambda t: np.log(2 * np.sin(t)), 0.0, x)


def critical_free_energy(g):
    """``k -> 0`` limit ``-sum_e [(2/pi)(L(theta) + L(pi/2 - theta)) + (2 theta/pi) log tan theta]``."""
    out = 0.0
    for e in g.edges:
        t = e.theta_bar
        out -= 2 / np.pi * (lobachevsky(t) + lobachevsky(np.pi / 2 - t)) + 2 * t / np.pi * np.log(np.tan(t))
    return out


@dataclass
class PhaseFit:
    """Least-squares fit ``F^k - F^0 = -c k^2 log(1/k) + b k^2``."""

    c: float
    b: float
    residual: float
    k: np.ndarray
    dF: np.ndarray


def phase_expansion_check(g, k_grid):
    """Fit the coefficient of ``-k^2 log(1/k)`` in ``F^k - F^0``."""
    k = np.asarray(k_grid, dtype=float)
    if k.size < 6 or np.any((k <= 0) | (k > 0.2)):
        raise ValueError("need at least 6 moduli in (0, 0.2]")
    F0 = critical_free_energy(g)
    dF = np.array([free_energy_closed(g, complete_integrals(kk)) - F0 for kk in k])
    A = np.column_stack([-k ** 2 * np.log(1 / k), k ** 2])
    (c, b), res, rank, sv = np.linalg.lstsq(A, dF, rcond=None)
    if sv[-1] / sv[0] < 1e-12:
        raise ArithmeticError("ill-conditioned phase fit")
    return PhaseFit(float(c), float(b), float(np.sqrt(np.mean((A @ [c, b] - dF) ** 2))), k, dF)


__all__ = [
    "EdgeItem", "RootItem", "TransferImpedance", "transfer_impedance", "marginal",
    "periodic_edge_item", "periodic_root_item", "periodic_green", "finite_items", "finite_green",
    "edge_probability", "root_probability", "edge_root_sum", "ForestSample", "wilson_sample",
    "wilson_batch", "component_sizes", "partition_function_det", "partition_function_enum",
    "spanning_tree_sum", "enumerate_forests", "vertex_entropy_term", "edge_energy_term",
    "edge_energy_term_parts", "free_energy_closed", "twisted_entropy", "free_energy_fourier",
    "lobachevsky", "critical_free_energy", "PhaseFit", "phase_expansion_check",
]
