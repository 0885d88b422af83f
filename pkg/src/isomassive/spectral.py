"""Characteristic polynomial, Newton polygon, spectral curve and amoeba."""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .elliptic import sncndn
from .expfun import exp_factor
from .laplacian import fourier_laplacian


@dataclass
class CharPoly:
    """Laurent polynomial ``P(z, w) = sum c[i, j] z^i w^j``.

    ``coeffs[i + p_y, j + p_x]`` holds the coefficient of ``z^i w^j``.
    """

    coeffs: np.ndarray
    p_y: int
    p_x: int

    def __call__(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        out = np.zeros(np.broadcast(z, w).shape, dtype=complex)
        for a in range(self.coeffs.shape[0]):
            for b in range(self.coeffs.shape[1]):
                c = self.coeffs[a, b]
                if c != 0:
                    out = out + c * z ** (a - self.p_y) * w ** (b - self.p_x)
        return out

    def support(self, rel_tol=1e-10):
        scale = np.abs(self.coeffs).max()
        ii, jj = np.nonzero(np.abs(self.coeffs) > rel_tol * scale)
        return [(int(i) - self.p_y, int(j) - self.p_x) for i, j in zip(ii, jj)]

    def dw(self, z, w):
        """Partial derivative in w."""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        out = np.zeros(np.broadcast(z, w).shape, dtype=complex)
        for a in range(self.coeffs.shape[0]):
            for b in range(self.coeffs.shape[1]):
                c = self.coeffs[a, b]
                j = b - self.p_x
                if c != 0 and j != 0:
                    out = out + c * j * z ** (a - self.p_y) * w ** (j - 1)
        return out


def char_poly(g, ctx, pad=1, rel_tol=1e-10):
    """Coefficients of ``det Delta(z, w)`` by sampling on roots of unity and inverse DFT.

    The sampling grid is oversized by ``pad`` in each direction; coefficients
    that land outside ``[-p_y, p_y] x [-p_x, p_x]`` signal an undersized grid.
    """
    M = 2 * g.p_y + 1 + 2 * pad
    N = 2 * g.p_x + 1 + 2 * pad
    z = np.exp(2j * np.pi * np.arange(M) / M)
    w = np.exp(2j * np.pi * np.arange(N) / N)
    Z, W = np.meshgrid(z, w, indexing="ij")
    P = np.linalg.det(fourier_laplacian(g, ctx, Z, W))
    c = np.fft.fft2(P) / (M * N)
    full = np.zeros((M, N), dtype=complex)
    for a in range(M):
        for b in range(N):
            i = a if a <= M // 2 else a - M
            j = b if b <= N // 2 else b - N
            full[i + M // 2, j + N // 2] = c[a, b]
    scale = np.abs(full).max()
    if np.abs(full.imag).max() > 1e-9 * max(scale, 1.0):
        raise ArithmeticError("characteristic polynomial has non-real coefficients")
    out = full.real
    out[np.abs(out) < rel_tol * scale] = 0.0
    inner = out[pad:M - pad, pad:N - pad]
    outside = np.ones(out.shape, bool)
    outside[pad:M - pad, pad:N - pad] = False
    if np.any(out[outside] != 0):
        raise ArithmeticError("support exceeds the expected rectangle; grid too small")
    return CharPoly(inner.copy(), g.p_y, g.p_x)


def _hull(points):
    """Convex hull (counterclockwise, no collinear points), Andrew's monotone chain."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def support_hull(cp):
    return _hull(cp.support())


def newton_polygon_from_tracks(g):
    """Centrally symmetric polygon whose edges are the oriented track homologies in cyclic order.

    Returns the vertex list (counterclockwise, starting from the lexicographically
    smallest vertex, collinear points removed).
    """
    vecs = [(t.h, t.v) for t in g.tracks] + [(-t.h, -t.v) for t in g.tracks]
    vecs.sort(key=lambda p: np.arctan2(p[1], p[0]))
    pts = np.cumsum(np.array(vecs), axis=0)
    pts = np.vstack([[0, 0], pts[:-1]])
    pts = pts - pts.mean(axis=0)
    if np.any(np.abs(pts - np.round(pts)) > 1e-9):
        raise ValueError("track homologies do not close into a lattice polygon")
    return _hull(np.round(pts).astype(int).tolist())


def curve_param(g, ctx, u):
    """``(z(u), w(u))``: products over tracks of the step factor to powers ``v_T`` and ``-h_T``."""
    u = np.asarray(u, dtype=complex)
    alpha = ctx.elliptic_angle(g.alpha)
    logz = np.zeros(u.shape, dtype=complex)
    logw = np.zeros(u.shape, dtype=complex)
    for a, h, v in zip(alpha, g.h, g.v):
        lf = np.log(exp_factor(u, a, ctx))
        logz = logz + v * lf
        logw = logw - h * lf
    z, w = np.exp(logz), np.exp(logw)
    if np.ndim(z) == 0:
        return complex(z), complex(w)
    return z, w


def hole_boundary(g, ctx, n=4096):
    """Points ``(log|z|, log|w|)`` of ``u + 2iK'`` for n equispaced real u in [0, 4K).

    On this line each step factor is ``-sqrt(k') nd((u - alpha)/2)``.
    """
    u = np.arange(n) * 4 * ctx.K / n
    alpha = ctx.elliptic_angle(g.alpha)
    lz = np.zeros(n)
    lw = np.zeros(n)
    for a, h, v in zip(alpha, g.h, g.v):
        dn = sncndn((u - a) / 2, ctx)[2].real
        lf = np.log(np.sqrt(ctx.kprime) / dn)
        lz += v * lf
        lw -= h * lf
    return np.column_stack([lz, lw])


def outer_boundary(g, ctx, n=4096, skip=1e-3):
    """Log-image of the real line, split at the track angles (tentacles)."""
    u = np.arange(n) * 4 * ctx.K / n + 0.5 * 4 * ctx.K / n
    z, w = curve_param(g, ctx, u)
    pts = np.column_stack([np.log(np.abs(z)), np.log(np.abs(w))])
    return u, pts


def hole_area(g, ctx, n=1 << 15):
    """Area of the bounded complement component, by the shoelace formula."""
    p = hole_boundary(g, ctx, n)
    x, y = p[:, 0], p[:, 1]
    return float(abs(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def hole_area_integral(g, ctx):
    """Hole area as ``|int_0^{4K} log|z| (w'/w) du|`` along ``u + 2iK'``.

    ``(w'/w) = -sum_T h_T (k^2/2) (sn cn/dn)((u - alpha_T)/2)``.
    """
    alpha = ctx.elliptic_angle(g.alpha)

    def integrand(u):
        lz = 0.0
        dw = 0.0
        for a, h, v in zip(alpha, g.h, g.v):
            sn, cn, dn = (float(np.real(t)) for t in sncndn((u - a) / 2, ctx))
            lz += v * np.log(np.sqrt(ctx.kprime) / dn)
            dw -= h * ctx.m / 2 * sn * cn / dn
        return lz * dw

    pts = sorted(np.mod(alpha, 4 * ctx.K))
    val, _ = quad(integrand, 0.0, 4 * ctx.K, points=pts, limit=400, epsabs=1e-14, epsrel=1e-12)
    return abs(val)


@dataclass
class AmoebaSample:
    points: np.ndarray
    outer: np.ndarray
    hole: np.ndarray
    area: float


def amoeba_sample(g, ctx, grid=200, n_boundary=2048):
    """Log-image of a ``grid x grid`` sample of the torus plus the two real-locus boundaries."""
    a = (np.arange(grid) + 0.5) / grid
    U = 4 * ctx.K * a[:, None] + 4j * ctx.Kprime * a[None, :]
    z, w = curve_param(g, ctx, U.ravel())
    pts = np.column_stack([np.log(np.abs(z)), np.log(np.abs(w))])
    _, outer = outer_boundary(g, ctx, n_boundary)
    hole = hole_boundary(g, ctx, n_boundary)
    return AmoebaSample(pts, outer, hole, hole_area(g, ctx))


def tentacle_directions(g, ctx, delta=1e-4):
    """Asymptotic direction of each tentacle of the amoeba.

    Each track gives two tentacles: near the zero ``u = alpha`` of its step
    factor the Log-image escapes along ``(-v_T, h_T)`` and near the pole
    ``u = alpha + 2K`` along ``(v_T, -h_T)``. Both sides of each point are probed.

    Returns
    -------
    list of (measured_unit_vector, expected_unit_vector)
    """
    out = []
    for a, h, v in zip(ctx.elliptic_angle(g.alpha), g.h, g.v):
        for centre, sgn in ((a, -1.0), (a + 2 * ctx.K, 1.0)):
            for side in (1, -1):
                u1 = centre + side * delta * ctx.K
                u2 = centre + side * delta * ctx.K / 10
                z1, w1 = curve_param(g, ctx, u1)
                z2, w2 = curve_param(g, ctx, u2)
                d = np.array([np.log(abs(z2)) - np.log(abs(z1)), np.log(abs(w2)) - np.log(abs(w1))])
                e = sgn * np.array([v, -h], dtype=float)
                out.append((d / np.linalg.norm(d), e / np.linalg.norm(e)))
    return out


def support_rate(g, ctx, direction, n=1 << 14):
    """``inf {-r . s : s in hole}`` for unit ``r``; negative, the exponential decay rate."""
    r = np.asarray(direction, dtype=float)
    r = r / np.linalg.norm(r)
    p = hole_boundary(g, ctx, n)
    return float(np.min(-(p @ r)))


def hole_inradius(g, ctx, n=4096):
    """Distance from the origin to the hole boundary (slowest decay rate over directions)."""
    return float(np.min(np.linalg.norm(hole_boundary(g, ctx, n), axis=1)))


def adjugate(M):
    """Adjugate of a small square matrix (batched over leading axes) by cofactors."""
    M = np.asarray(M)
    n = M.shape[-1]
    out = np.zeros_like(M, dtype=complex)
    if n == 1:
        out[..., 0, 0] = 1.0
        return out
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(M, j, axis=-2), i, axis=-1)
            out[..., i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return out


def adjugate_diag(g, ctx, u):
    """Diagonal of the adjugate of ``Delta(z(u), w(u))`` and the two smallest singular values.

    Returns
    -------
    g_u : complex
        Mean of ``Q_{x,x}``; the diagonal entries coincide on the curve.
    spread : float
        Maximal deviation among the ``Q_{x,x}``.
    sing : ndarray
        The two smallest singular values (only one if ``|V1| = 1``).
    """
    z, w = curve_param(g, ctx, u)
    D = fourier_laplacian(g, ctx, z, w)
    Q = adjugate(D)
    diag = np.diag(Q)
    s = np.linalg.svd(D, compute_uv=False)
    return complex(diag.mean()), float(np.abs(diag - diag.mean()).max()), np.sort(s)[:2]


def holomorphic_form_ratio(g, ctx, cp, u, h=1e-6):
    """``g(u) z'(u) / (z w dP/dw)`` at the curve point of u (constant in u)."""
    z, w = curve_param(g, ctx, u)
    zp = (curve_param(g, ctx, u + h)[0] - curve_param(g, ctx, u - h)[0]) / (2 * h)
    gu = adjugate_diag(g, ctx, u)[0]
    return gu * zp / (z * w * cp.dw(z, w))
