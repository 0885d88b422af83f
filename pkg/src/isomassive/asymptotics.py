"""Saddle-point asymptotics of the Green function and the link with the amoeba hole."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .expfun import chi, d2chi, dchi, path_data
from .spectral import support_rate


@dataclass(frozen=True)
class SaddleData:
    """Saddle point of the rate function on the real axis.

    Attributes
    ----------
    u0 : float
        Zero of ``chi'`` in ``alpha + (-K + eps, K - eps)``.
    chi : float
        ``chi(u0) < 0``, the exponential decay rate per diamond step.
    chi2 : float
        ``chi''(u0) > 0``.
    alpha : float
        Midpoint of the sector holding the step angles.
    eps : float
        Margin used for the bracket.
    length : int
        Number of diamond steps ``|x - y|``.
    """

    u0: float
    chi: float
    chi2: float
    alpha: float
    eps: float
    length: int


def _real(v):
    return float(np.real(v))


def saddle_point_path(pd, ctx, newton_steps=3):
    """Locate the saddle point for given path data.

    The bracket margin is half the gap between the step sector and the
    ``K``-neighbourhood it must avoid: ``eps = (K - w)/2`` for half-width w.
    """
    if pd.length == 0:
        raise ValueError("saddle point requires x != y")
    alpha, w = pd.sector(ctx)
    if w >= ctx.K:
        raise ValueError("step angles do not fit in a sector of width < 2K")
    eps = (ctx.K - w) / 2
    f = lambda u: _real(dchi(pd, u, ctx))
    a, b = alpha - ctx.K + eps, alpha + ctx.K - eps
    fa, fb = f(a), f(b)
    if not (fa < 0 < fb):
        raise ArithmeticError(f"chi' has no sign change on the bracket ({fa:.3e}, {fb:.3e})")
    u0 = brentq(f, a, b, xtol=1e-6)
    for _ in range(newton_steps):
        u0 -= f(u0) / _real(d2chi(pd, u0, ctx))
    return SaddleData(u0, _real(chi(pd, u0, ctx)), _real(d2chi(pd, u0, ctx)), alpha, eps, pd.length)


def saddle_point(g, x, y, ctx):
    """Saddle data for the pair (x, y) of a periodic graph."""
    return saddle_point_path(path_data(g, x, y, ctx), ctx)


def green_asymptotic_saddle(sd, ctx, min_chi2=1e-8):
    """``k'/(2 sqrt(2 pi n chi''(u0))) exp(n chi(u0))`` with n the number of steps."""
    if sd.chi2 < min_chi2:
        raise ArithmeticError(f"chi''(u0) = {sd.chi2:.2e} too small for the Gaussian prefactor")
    n = sd.length
    return ctx.kprime / (2 * np.sqrt(2 * np.pi * n * sd.chi2)) * np.exp(n * sd.chi)


def green_asymptotic(g, x, y, ctx):
    return green_asymptotic_saddle(saddle_point(g, x, y, ctx), ctx)


def saddle_rate(g, shift, ctx, i=0):
    """Decay rate per unit lattice length of ``G(x_i + shift, x_i)``: ``chi(u0) |x - y| / |shift|``."""
    sd = saddle_point(g, (i, shift[0], shift[1]), (i, 0, 0), ctx)
    return sd.chi * sd.length / float(np.hypot(*shift))


def rate_from_amoeba(g, direction, ctx, n=1 << 16):
    """Support-function rate ``inf{-r . s : s in hole}`` in the lattice direction r."""
    return support_rate(g, ctx, direction, n=n)


def sign_changes(pd, ctx, n=10000):
    """Number of sign changes of ``chi'`` on a dense scan of the saddle bracket."""
    alpha, w = pd.sector(ctx)
    eps = (ctx.K - w) / 2
    u = np.linspace(alpha - ctx.K + eps, alpha + ctx.K - eps, n)
    s = np.sign(np.real(dchi(pd, u, ctx)))
    return int(np.count_nonzero(np.diff(s)))


__all__ = [
    "SaddleData", "saddle_point", "saddle_point_path", "green_asymptotic", "green_asymptotic_saddle",
    "saddle_rate", "rate_from_amoeba", "sign_changes",
]
