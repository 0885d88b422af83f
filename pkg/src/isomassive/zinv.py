"""Star-triangle invariance: Yang-Baxter partition identities, weight identities, Green invariance."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .forest import spanning_tree_sum
from .green import green_finite
from .isograph import star_triangle
from .laplacian import a_term, conductance, mass_from_angles

CASES = ["123", "12", "13", "23", "1", "2", "3", ""]


@dataclass
class StarTriangleCase:
    """A star with half-angles ``theta_bar`` (summing to pi) and the neighbour stars.

    Attributes
    ----------
    theta_bar : ndarray, shape (3,)
        Star half-angles in reduced units.
    others : list of lists
        For each outer vertex ``x_l``, its half-angles outside the star; they sum
        to ``pi - theta_bar[l]``. They fix ``m^2(x_l)`` and ``m'^2(x_l)``.
    """

    theta_bar: np.ndarray
    others: list

    def __post_init__(self):
        self.theta_bar = np.asarray(self.theta_bar, dtype=float)
        if abs(self.theta_bar.sum() - np.pi) > 1e-12:
            raise ValueError("star half-angles must sum to pi")
        if np.any((self.theta_bar <= 0) | (self.theta_bar >= np.pi / 2)):
            raise ValueError("star half-angles must lie in (0, pi/2)")
        for l, o in enumerate(self.others):
            if abs(sum(o) + self.theta_bar[l] - np.pi) > 1e-12:
                raise ValueError(f"angles around x_{l + 1} do not sum to pi")

    def weights(self, ctx):
        """Conductances and masses of both sides.

        Returns
        -------
        dict
            ``rho`` (star edges), ``rho_t`` (triangle edge opposite x_l, angle
            ``pi/2 - theta_l``), ``m0``, ``m`` (star side), ``mt`` (triangle side).
        """
        t = self.theta_bar
        tt = np.pi / 2 - t
        m = np.array([mass_from_angles([t[l]] + list(self.others[l]), ctx) for l in range(3)])
        mt = np.array([mass_from_angles([tt[(l + 1) % 3], tt[(l + 2) % 3]] + list(self.others[l]), ctx)
                       for l in range(3)])
        return {"rho": np.atleast_1d(conductance(t, ctx)), "rho_t": np.atleast_1d(conductance(tt, ctx)),
                "m0": mass_from_angles(t, ctx), "m": m, "mt": mt}


def random_case(rng, margin=0.05, max_tries=10000):
    """Random admissible star with random neighbour stars.

    All half-angles stay ``margin`` away from 0 and pi/2, the same bound the
    periodic graphs satisfy; closer to pi/2 the masses ``A - sc`` lose digits
    to cancellation.
    """
    for _ in range(max_tries):
        t = rng.dirichlet([2.0, 2.0, 2.0]) * np.pi
        if np.all(t < np.pi / 2 - margin) and np.all(t > margin):
            break
    else:
        raise RuntimeError("could not draw an admissible triple")
    others = []
    for l in range(3):
        rest = np.pi - t[l]
        n = int(np.ceil(rest / (np.pi / 2))) + int(rng.integers(0, 2))
        while True:
            parts = rng.dirichlet(np.ones(n)) * rest
            if np.all(parts < np.pi / 2 - margin) and np.all(parts > margin):
                break
        others.append(list(parts))
    return StarTriangleCase(t, others)


def _excl(i):
    return [l for l in range(3) if l != i]


def yb_partition(case, side, ctx, R):
    """Local partition function for boundary condition R (string of outer vertex numbers in the root class).

    Parameters
    ----------
    case : StarTriangleCase
    side : {"star", "triangle"}
    R : str
        Subset of ``"123"``: the outer vertices connected to the root.
    """
    w = case.weights(ctx)
    rho, rt, m0, m, mt = w["rho"], w["rho_t"], w["m0"], w["m"], w["mt"]
    S = rho.sum()
    idx = sorted(int(c) - 1 for c in R)
    if side not in ("star", "triangle"):
        raise ValueError("side must be 'star' or 'triangle'")
    star = side == "star"
    if len(idx) == 3:
        return S + m0 if star else 1.0
    if len(idx) == 2:
        k = next(l for l in range(3) if l not in idx)
        if star:
            return rho[k] * sum(rho[l] for l in _excl(k)) + m0 * rho[k] + m[k] * (S + m0)
        return sum(rt[l] for l in _excl(k)) + mt[k]
    if len(idx) == 1:
        i = idx[0]
        j, k = _excl(i)
        if star:
            out = np.prod(rho) + m0 * np.prod([rho[l] for l in _excl(i)])
            for l in _excl(i):
                c = next(c for c in range(3) if c not in (i, l))
                out += m[l] * rho[c] * (rho[i] + rho[l])
            out += m0 * (m[k] * rho[j] + m[j] * rho[k])
            out += m[j] * m[k] * (S + m0)
            return out
        out = sum(np.prod([rt[lp] for lp in _excl(l)]) for l in range(3))
        out += sum(mt[l] * (rt[i] + rt[l]) for l in _excl(i))
        out += mt[j] * mt[k]
        return out
    if star:
        out = (m0 + m.sum()) * np.prod(rho)
        out += m0 * sum(m[i] * np.prod([rho[l] for l in _excl(i)]) for i in range(3))
        out += sum(np.prod([m[l] for l in _excl(i)]) * rho[i] * sum(rho[l] for l in _excl(i))
                   for i in range(3))
        out += m0 * sum(np.prod([m[l] for l in _excl(i)]) * rho[i] for i in range(3))
        out += np.prod(m) * (S + m0)
        return out
    out = mt.sum() * sum(np.prod([rt[l] for l in _excl(i)]) for i in range(3))
    out += sum(np.prod([mt[l] for l in _excl(i)]) * sum(rt[l] for l in _excl(i)) for i in range(3))
    out += np.prod(mt)
    return out


def yb_partition_brute(case, side, ctx, R):
    """Same quantity by enumerating spanning trees of the local rooted graph.

    Outer vertices in R are merged with the root; the others carry a root edge
    of weight equal to their mass on that side.
    """
    w = case.weights(ctx)
    idx = {int(c) - 1 for c in R}
    # vertex labels: root 0, then free outer vertices, then x0 on the star side
    free = [l for l in range(3) if l not in idx]
    label = {l: (0 if l in idx else 1 + free.index(l)) for l in range(3)}
    n = 1 + len(free)
    W = {}

    def add(a, b, val):
        if a == b:
            return
        key = (min(a, b), max(a, b))
        W[key] = W.get(key, 0.0) + val

    if side == "star":
        x0 = n
        n += 1
        add(x0, 0, w["m0"])
        for l in range(3):
            add(x0, label[l], w["rho"][l])
        masses = w["m"]
    else:
        for l in range(3):
            i, j = _excl(l)
            add(label[i], label[j], w["rho_t"][l])
        masses = w["mt"]
    for l in free:
        add(label[l], 0, masses[l])
    return spanning_tree_sum(n, W)


def zinv_constant(theta_bar, ctx):
    """``C(k) = k' sc(theta_1) sc(theta_2) sc(theta_3)``."""
    return ctx.kprime * float(np.prod(conductance(np.asarray(theta_bar, dtype=float), ctx)))


def weight_identity_residuals(case, ctx):
    """Residuals of the two star-triangle weight identities.

    Returns
    -------
    r0 : float
        ``k' prod rho(theta_l) - m^2(x_0) - sum rho(theta_l)``.
    r1 : ndarray, shape (3,)
        ``m'^2(x_k) - m^2(x_k) - [rho(theta_k) - sum_{l != k} rho(K - theta_l)
        - k' rho(K - theta_i) rho(K - theta_j) rho(theta_k)]``.
    """
    w = case.weights(ctx)
    rho, rt = w["rho"], w["rho_t"]
    r0 = zinv_constant(case.theta_bar, ctx) - w["m0"] - rho.sum()
    r1 = np.empty(3)
    for k in range(3):
        i, j = _excl(k)
        rhs = rho[k] - rt[i] - rt[j] - ctx.kprime * rt[i] * rt[j] * rho[k]
        r1[k] = w["mt"][k] - w["m"][k] - rhs
    return float(r0), r1


def yang_baxter_residuals(case, ctx, brute=True):
    """Relative residuals of ``Z_star = C Z_triangle`` for all eight boundary conditions.

    Returns a dict ``R -> (relative YB residual, transcription-vs-brute residual)``.
    """
    C = zinv_constant(case.theta_bar, ctx)
    out = {}
    for R in CASES:
        zs = yb_partition(case, "star", ctx, R)
        zt = yb_partition(case, "triangle", ctx, R)
        yb = abs(zs - C * zt) / abs(zs)
        if brute:
            bs = yb_partition_brute(case, "star", ctx, R)
            bt = yb_partition_brute(case, "triangle", ctx, R)
            tr = max(abs(zs - bs) / abs(bs), abs(zt - bt) / abs(bt))
        else:
            tr = np.nan
        out[R] = (float(yb), float(tr))
    return out


def three_d_consistency(case, ctx, f):
    """Laplacian mismatch at ``x_1, x_2, x_3`` after extending f massive-harmonically to ``x_0``.

    Only the star/triangle edges and diagonal shares differ between the two
    graphs, so outer values cancel and only ``f(x_l)`` enter.

    Returns
    -------
    ndarray, shape (3,)
        ``(Delta_star f)(x_i) - (Delta_triangle f)(x_i)``.
    """
    t = case.theta_bar
    tt = np.pi / 2 - t
    f = np.asarray(f, dtype=float)
    rho = np.atleast_1d(conductance(t, ctx))
    rt = np.atleast_1d(conductance(tt, ctx))
    A = np.atleast_1d(a_term(t, ctx))
    At = np.atleast_1d(a_term(tt, ctx))
    f0 = float(rho @ f) / A.sum()
    out = np.empty(3)
    for i in range(3):
        j, k = _excl(i)
        star = A[i] * f[i] - rho[i] * f0
        tri = (At[j] + At[k]) * f[i] - rt[k] * f[j] - rt[j] * f[k]
        out[i] = star - tri
    return out


@dataclass
class GreenInvariance:
    max_dev: float
    pairs: list
    harmonic_residual: float
    site: int


def green_invariance_check(fg, site, ctx, pairs=None, n_pairs=10, rng=None):
    """Compare Green functions of a finite graph before and after one star-triangle move.

    Parameters
    ----------
    fg : FiniteGraph
        Killed patch containing an interior degree-3 vertex ``site``.
    pairs : list of (label, label), optional
        Vertex labels avoiding the site; drawn at random when omitted.
    """
    ft = star_triangle(fg, site)
    Gs = green_finite(fg, ctx)
    Gt = green_finite(ft, ctx)
    x0 = fg.labels[site]
    common = [x for x in fg.labels if x != x0]
    if pairs is None:
        rng = np.random.default_rng(0) if rng is None else rng
        nb = [fg.labels[int(b if a == site else a)] for a, b in fg.edges if site in (a, b)]
        pairs = list(combinations(nb, 2))
        while len(pairs) < n_pairs + 3:
            a, b = rng.choice(len(common), 2, replace=False)
            pairs.append((common[a], common[b]))
    dev = max(abs(Gs[fg.index[x], fg.index[y]] - Gt[ft.index[x], ft.index[y]]) for x, y in pairs)
    # massive harmonic extension of G_triangle(., y) to x_0 recovers G_star(x_0, y)
    inc = [k for k, (a, b) in enumerate(fg.edges) if site in (a, b)]
    nbrs = [int(fg.edges[k][1] if fg.edges[k][0] == site else fg.edges[k][0]) for k in inc]
    rho = np.atleast_1d(conductance(fg.theta[inc], ctx))
    d0 = float(np.sum(a_term(np.asarray(fg.star[site]), ctx)))
    y = pairs[0][1]
    ext = sum(r * Gt[ft.index[fg.labels[x]], ft.index[y]] for r, x in zip(rho, nbrs)) / d0
    harm = abs(ext - Gs[site, fg.index[y]])
    return GreenInvariance(float(dev), pairs, float(harm), site)


def find_flip_site(fg):
    """An interior degree-3 vertex closest to the patch centre."""
    centre = fg.positions.mean()
    order = np.argsort(np.abs(fg.positions - centre))
    for x in order:
        x = int(x)
        if len(fg.star[x]) == 3 and fg.degree(x) == 3:
            return x
    raise ValueError("no interior degree-3 vertex")


__all__ = [
    "CASES", "StarTriangleCase", "random_case", "yb_partition", "yb_partition_brute",
    "zinv_constant", "weight_identity_residuals", "yang_baxter_residuals", "three_d_consistency",
    "GreenInvariance", "green_invariance_check", "find_flip_site",
]
