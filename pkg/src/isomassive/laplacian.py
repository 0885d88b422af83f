"""Conductances, masses and the massive Laplacian (sparse and Fourier forms)."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .elliptic import func_A, jacobi_zeta, sncndn


def _check_theta(theta_bar):
    t = np.asarray(theta_bar, dtype=float)
    if np.any((t <= 0) | (t >= np.pi / 2)):
        raise ValueError("half-angle must lie in (0, pi/2)")
    return t


def conductance(theta_bar, ctx):
    """Edge conductance ``rho = sc(theta | k)`` with ``theta = theta_bar 2K/pi``."""
    t = ctx.elliptic_angle(_check_theta(theta_bar))
    sn, cn, _ = sncndn(t, ctx)
    out = (sn / cn).real
    return out if np.ndim(out) else float(out)


def a_term(theta_bar, ctx):
    """``A(theta | k)`` for reduced half-angles, the per-edge share of the diagonal."""
    t = ctx.elliptic_angle(_check_theta(theta_bar))
    out = np.real(func_A(t, ctx))
    return out if np.ndim(out) else float(out)


def mass_term(theta_bar, ctx):
    """``A(theta) - sc(theta) = (k^2 sn cn/(dn + k') - Z(theta))/k'`` with Z the Jacobi zeta function.

    Both terms are ``O(k^2)``, so this keeps relative accuracy where the plain
    difference of A and sc cancels.
    """
    t = ctx.elliptic_angle(_check_theta(theta_bar))
    sn, cn, dn = (np.real(v) for v in sncndn(t, ctx))
    out = (ctx.m * sn * cn / (dn + ctx.kprime) - jacobi_zeta(t, ctx)) / ctx.kprime
    return out if np.ndim(out) else float(out)


def mass_from_angles(star, ctx):
    """``m^2 = sum_j [A(theta_j) - sc(theta_j)]`` over the rhombus half-angles around a vertex."""
    s = np.asarray(star, dtype=float)
    if s.size == 0:
        return 0.0
    return float(np.sum(mass_term(s, ctx)))


def mass(g, x, ctx):
    """Mass of vertex ``x`` (index into ``g.star``) of a periodic or finite graph."""
    return mass_from_angles(g.star[x], ctx)


def _diag_share(theta_bar, ctx):
    # sc + (A - sc): equal to A, but consistent with the masses to full precision
    return conductance(theta_bar, ctx) + mass_term(theta_bar, ctx)


def diagonal(g, x, ctx):
    return float(np.sum(_diag_share(np.asarray(g.star[x], dtype=float), ctx)))


@dataclass
class MassiveLaplacian:
    """Sparse massive Laplacian of a finite graph.

    Attributes
    ----------
    matrix : scipy.sparse.csr_matrix
    rho : ndarray
        Conductance of each edge of the graph, in edge order.
    d : ndarray
        Diagonal ``sum_j A(theta_j)`` per vertex.
    root_weight : ndarray
        ``d - sum of present conductances``: the vertex mass, plus the
        conductance of edges leaving a patch (killed exterior).
    """

    matrix: sp.csr_matrix
    rho: np.ndarray
    d: np.ndarray
    root_weight: np.ndarray

    def dense(self):
        return self.matrix.toarray()


def laplacian_matrix(g, ctx):
    """Assemble the massive Laplacian of a :class:`FiniteGraph`."""
    n = g.n
    rho = conductance(g.theta, ctx) if len(g.theta) else np.zeros(0)
    sc, m2 = _diagonals(g.star, ctx)
    d = sc + m2
    i, j = g.edges[:, 0], g.edges[:, 1]
    rows = np.concatenate([np.arange(n), i, j])
    cols = np.concatenate([np.arange(n), j, i])
    vals = np.concatenate([d, -rho, -rho])
    M = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    present = np.zeros(n)
    np.add.at(present, i, rho)
    np.add.at(present, j, rho)
    # conductance of edges leaving the graph; exact zero when the whole star is present
    killed = sc - present
    killed[np.abs(killed) < 1e-12 * np.maximum(sc, 1.0)] = 0.0
    return MassiveLaplacian(M, rho, d, m2 + killed)


def _diagonals(stars, ctx):
    """Diagonal entries for many vertices, with one vectorised evaluation per distinct angle."""
    counts = np.array([len(s) for s in stars], dtype=int)
    if counts.sum() == 0:
        return np.zeros(len(stars))
    flat = np.concatenate([np.asarray(s, dtype=float) for s in stars if len(s)])
    _, first, inv = np.unique(np.round(flat, 14), return_index=True, return_inverse=True)
    uniq = flat[first]
    owner = np.repeat(np.arange(len(stars)), counts)
    sc = np.bincount(owner, weights=np.atleast_1d(conductance(uniq, ctx))[inv], minlength=len(stars))
    m2 = np.bincount(owner, weights=np.atleast_1d(mass_term(uniq, ctx))[inv], minlength=len(stars))
    return sc, m2


def periodic_data(g, ctx):
    """Diagonal and conductances of a periodic graph's fundamental domain."""
    d = np.array([diagonal(g, x, ctx) for x in range(g.n_vertices)])
    rho = conductance(np.array([e.theta_bar for e in g.edges]), ctx)
    return d, np.atleast_1d(rho)


def fourier_laplacian(g, ctx, z, w):
    """Dense matrix ``Delta(z, w)`` on the fundamental domain.

    Acting on ``(z, w)``-quasiperiodic functions ``f(x + (a, b)) = z^-a w^-b f(x)``:
    the edge from ``x`` to ``y + (a, b)`` contributes ``-rho z^-a w^-b`` at ``(x, y)``
    and ``-rho z^a w^b`` at ``(y, x)``. Broadcasts over array-valued z, w,
    returning shape ``z.shape + (V1, V1)``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z == 0) or np.any(w == 0):
        raise ValueError("z and w must be non-zero")
    z, w = np.broadcast_arrays(z, w)
    d, rho = periodic_data(g, ctx)
    V = g.n_vertices
    out = np.zeros(z.shape + (V, V), dtype=complex)
    for x in range(V):
        out[..., x, x] = d[x]
    for e, r in zip(g.edges, rho):
        a, b = e.shift
        f = z ** (-a) * w ** (-b)
        out[..., e.x, e.y] -= r * f
        out[..., e.y, e.x] -= r / f
    return out
