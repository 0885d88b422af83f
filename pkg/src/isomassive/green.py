"""The massive Green function: local contour formula, explicit values, direct solve and Fourier integral."""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .elliptic import func_H, sncndn
from .expfun import exp_factor, log_exp, path_data, path_data_from_steps
from .laplacian import conductance, fourier_laplacian, laplacian_matrix
from .spectral import hole_inradius


class ConvergenceError(ArithmeticError):
    """Raised when a quadrature or grid refinement fails to converge."""


def contour_abscissa(pd, ctx):
    """Real abscissa of the vertical contour: centre of the widest pole-free arc.

    The ray direction from x to y lies in the same arc, so both give the same
    integral; the centre maximises the analyticity strip of the integrand.
    """
    if pd.length == 0:
        return 2 * ctx.K, 2 * ctx.K
    period = 4 * ctx.K
    poles = np.sort(pd.poles(ctx))
    gaps = np.diff(np.concatenate([poles, [poles[0] + period]]))
    k = int(np.argmax(gaps))
    return float(np.mod(poles[k] + gaps[k] / 2, period)), float(gaps[k] / 2)


def green_local_path(pd, ctx, nodes=64, max_nodes=8192, tol=1e-10, full_output=False):
    """Green function from path data, by the trapezoid rule on the vertical period.

    ``G = (k'/(4 i pi)) int_{phi}^{phi + 4iK'} e(u) du = (k'/(4 pi)) int_0^{4K'} e(phi + it) dt``.
    """
    if ctx.k == 0.0:
        raise ValueError("the Green function requires k > 0")
    if pd.length == 0:
        val = ctx.kprime * ctx.Kprime / np.pi
        return (val, {"nodes": 0, "imag": 0.0, "phi": 2 * ctx.K}) if full_output else val
    if pd.length % 2:
        raise ValueError("x and y must both be primal vertices")
    phi, margin = contour_abscissa(pd, ctx)
    prev = None
    n = nodes
    while n <= max_nodes:
        t = np.arange(n) * 4 * ctx.Kprime / n
        vals = np.exp(log_exp(pd, phi + 1j * t, ctx))
        val = ctx.kprime / (4 * np.pi) * vals.sum() * 4 * ctx.Kprime / n
        if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
            if abs(val.imag) > 1e-6:
                warnings.warn(f"Green function has imaginary part {val.imag:.2e}")
            info = {"nodes": n, "imag": float(val.imag), "phi": phi, "margin": margin}
            return (float(val.real), info) if full_output else float(val.real)
        prev = val
        n *= 2
    raise ConvergenceError(f"trapezoid rule did not converge with {max_nodes} nodes")


def green_local(g, x, y, ctx, nodes=64, full_output=False):
    """Massive Green function ``G(x, y)`` on a periodic graph via the local formula."""
    return green_local_path(path_data(g, x, y, ctx), ctx, nodes=nodes, full_output=full_output)


def green_residue(pd, ctx):
    """Residue form for paths whose poles are all simple.

    ``G = (k'/2) [sum_p H(p) Res(e, p) + (2K'/pi) e(2iK')]`` where the poles
    ``p = alpha_j + 2K`` are taken in ``(phi, phi + 4K)`` for the contour abscissa phi.
    """
    if np.any(pd.mult > 1):
        raise ValueError("residue form implemented for simple poles only")
    e2 = np.prod([exp_factor(2j * ctx.Kprime, a, ctx) for a in pd.alpha]) if pd.length else 1.0
    total = 2 * ctx.Kprime / np.pi * e2
    if pd.length:
        phi = contour_abscissa(pd, ctx)[0]
        for j, a in enumerate(pd.alpha):
            p = a + 2 * ctx.K
            p = phi + np.mod(p - phi, 4 * ctx.K)
            res = -2j / np.sqrt(ctx.kprime)
            for l, b in enumerate(pd.alpha):
                if l != j:
                    res = res * exp_factor(p, b, ctx)
            total = total + func_H(p, ctx) * res
    return float(np.real(ctx.kprime / 2 * total))


def green_diagonal(ctx):
    """``G(x, x) = k'K'/pi``."""
    return ctx.kprime * ctx.Kprime / np.pi


def green_neighbor(theta_bar, ctx, alpha_bar=0.0):
    """Green function between neighbours with half-angle theta, in three equivalent forms.

    Returns
    -------
    dict
        ``a`` and ``b`` use the rhombus vectors ``alpha`` and ``beta = alpha + 2 theta``
        (elliptic units), ``c`` uses theta alone.
    """
    th = float(ctx.elliptic_angle(theta_bar))
    al = float(ctx.elliptic_angle(alpha_bar))
    be = al + 2 * th
    sc = conductance(theta_bar, ctx)
    Kp = ctx.Kprime
    dn = lambda v: float(np.real(sncndn(v, ctx)[2]))
    H = lambda v: float(np.real(func_H(v, ctx)))
    e2 = ctx.kprime / (dn(al / 2) * dn(be / 2))
    a = (H(al + 2 * ctx.K) - H(be + 2 * ctx.K)) / sc + ctx.kprime * Kp / np.pi * e2
    b = (H(al) - H(be)) / sc + Kp / np.pi * dn(al / 2) * dn(be / 2)
    c = -H(2 * th) / sc + Kp / np.pi * dn(th)
    return {"a": a, "b": b, "c": c}


def critical_difference(theta_bar):
    """``lim_{k -> 0} G(x, x) - G(x, y) = theta/(pi tan theta)``."""
    return theta_bar / (np.pi * np.tan(theta_bar))


@dataclass
class TruncatedGreen:
    """Green function of a killed patch of a periodic graph, with cached factorisation.

    ``R`` defaults to the smallest box radius for which the truncation error
    ``exp(-2 beta (R - r0))`` is below ``tol``, with beta the distance from the
    origin to the amoeba hole (slowest decay rate over lattice directions).
    """

    g: object
    ctx: object
    R: int = None
    r0: int = 10
    tol: float = 1e-10
    patch: object = field(init=False)
    lu: object = field(init=False)

    def __post_init__(self):
        if self.R is None:
            beta = hole_inradius(self.g, self.ctx)
            self.R = int(self.r0 + np.ceil((np.log(1 / self.tol) + np.log(1e3)) / (2 * beta)))
        self.patch = self.g.patch(self.R)
        self.lap = laplacian_matrix(self.patch, self.ctx)
        self.lu = splu(sp.csc_matrix(self.lap.matrix))
        self._cols = {}

    def column(self, y):
        if y not in self._cols:
            rhs = np.zeros(self.patch.n)
            rhs[self.patch.index[y]] = 1.0
            self._cols[y] = self.lu.solve(rhs)
        return self._cols[y]

    def __call__(self, x, y):
        for v in (x, y):
            if max(abs(v[1]), abs(v[2])) > self.r0:
                raise ValueError(f"vertex {v} outside the accurate core |m|,|n| <= {self.r0}")
        return float(self.column(y)[self.patch.index[x]])


def green_truncated_solve(g, x, y, ctx, R=None):
    """Solve ``Delta G(., y) = delta_y`` on a killed patch and read off ``G(x, y)``."""
    r0 = max(abs(x[1]), abs(x[2]), abs(y[1]), abs(y[2]))
    return TruncatedGreen(g, ctx, R=R, r0=r0)(x, y)


def green_finite(fg, ctx):
    """Dense Green function (inverse Laplacian) of a small finite graph."""
    return np.linalg.inv(laplacian_matrix(fg, ctx).dense())


def green_fourier(g, i, j, shift, ctx, N=None, tol=1e-9, N0=32, N_max=2048):
    """``G(x_i + (m, n), x_j)`` as the Fourier coefficient of ``Delta(z, w)^{-1}``.

    Double trapezoid over ``|z| = |w| = 1``; the grid doubles until successive
    values differ by less than ``tol``.
    """
    m, n = shift

    def at(N):
        t = 2 * np.pi * np.arange(N) / N
        Z, W = np.meshgrid(np.exp(1j * t), np.exp(1j * t), indexing="ij")
        D = fourier_laplacian(g, ctx, Z, W)
        rhs = np.zeros(D.shape[:-1], dtype=complex)
        rhs[..., j] = 1.0
        col = np.linalg.solve(D, rhs[..., None])[..., 0]
        val = np.mean(Z ** (-m) * W ** (-n) * col[..., i])
        return val

    if N is not None:
        return float(at(N).real)
    prev = at(N0)
    N = 2 * N0
    while N <= N_max:
        cur = at(N)
        if abs(cur - prev) < tol:
            return float(cur.real)
        prev = cur
        N *= 2
    raise ConvergenceError(f"Fourier grid did not converge up to {N_max}")


__all__ = [
    "ConvergenceError", "contour_abscissa", "green_local", "green_local_path", "green_residue",
    "green_diagonal", "green_neighbor", "critical_difference", "TruncatedGreen",
    "green_truncated_solve", "green_finite", "green_fourier", "path_data_from_steps",
]
