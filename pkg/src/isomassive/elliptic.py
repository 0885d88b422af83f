"""Jacobi elliptic functions on the complex torus and the derived functions A and H.

Real-argument values come from the descending Landen/AGM recursion of
``scipy.special.ellipj``; complex arguments are assembled with the
real/imaginary addition formulas, after reducing the argument into the
fundamental rectangle with exact quarter periods.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ellipe, ellipeinc, ellipj, ellipk, ellipkm1

POLE_TOL = 1e-10

# corner offsets, in units of (K, iK'), for the letters of the 12 functions
_CORNERS = {"s": (0, 0), "c": (1, 0), "d": (1, 1), "n": (0, 1)}
NAMES = tuple(p + q for p in "scdn" for q in "scdn" if p != q)


class PoleError(ValueError):
    """Raised when a function is evaluated too close to one of its poles."""

    def __init__(self, message, pole):
        super().__init__(f"{message} (nearest pole {complex(pole)})")
        self.pole = complex(pole)


@dataclass(frozen=True)
class EllipticContext:
    """Elliptic modulus with its complete integrals.

    Attributes
    ----------
    k, kprime : float
        Modulus and complementary modulus, ``k**2 + kprime**2 == 1``.
    K, Kprime : float
        Quarter periods ``K(k)`` and ``K(k')``; ``Kprime`` is infinite at k = 0.
    E, Eprime : float
        Complete integrals of the second kind ``E(k)`` and ``E(k')``.
    q : float
        Nome ``exp(-pi K'/K)``.
    """

    k: float
    kprime: float
    K: float
    Kprime: float
    E: float
    Eprime: float
    q: float

    @property
    def m(self):
        return self.k * self.k

    @property
    def m1(self):
        return self.kprime * self.kprime

    @cached_property
    def dual(self):
        """Context for the complementary modulus k'."""
        if self.k == 0.0:
            raise ValueError("complementary modulus 1 is not supported")
        return _make_context(self.kprime, self.k)

    def elliptic_angle(self, theta_bar):
        """Convert a reduced angle (radians) to elliptic units, ``theta_bar * 2K / pi``."""
        return np.asarray(theta_bar) * 2.0 * self.K / np.pi

    def reduce(self, u):
        """Canonical torus representative, Re in [-2K, 2K) and Im in [-2K', 2K')."""
        u = np.asarray(u, dtype=complex)
        x = _wrap(u.real, 4.0 * self.K)
        if self.k == 0.0:
            return x + 1j * u.imag
        return x + 1j * _wrap(u.imag, 4.0 * self.Kprime)

    def legendre_residual(self):
        """E K' + E' K - K K' - pi/2."""
        return self.E * self.Kprime + self.Eprime * self.K - self.K * self.Kprime - np.pi / 2


def _wrap(x, period):
    return x - period * np.floor(x / period + 0.5)


def _make_context(k, kp):
    m = k * k
    K = float(ellipk(m))
    E = float(ellipe(m))
    if k == 0.0:
        return EllipticContext(0.0, 1.0, K, np.inf, E, 1.0, 0.0)
    Kp = float(ellipkm1(m))
    Ep = float(ellipe(kp * kp)) if kp < 0.5 else float(ellipe(1.0 - m))
    return EllipticContext(float(k), float(kp), K, Kp, E, Ep, float(np.exp(-np.pi * Kp / K)))


def complete_integrals(k):
    """Build an :class:`EllipticContext` for modulus ``k`` in [0, 1)."""
    k = float(k)
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must lie in [0, 1), got {k}")
    if k > 1.0 - 1e-12:
        raise ValueError(f"modulus {k} too close to 1: K overflows")
    return _make_context(k, float(np.sqrt((1.0 - k) * (1.0 + k))))


def _check_poles(u, ctx, corner, what):
    """Raise PoleError if u is within POLE_TOL of ``corner + 2K Z + 2iK' Z``."""
    a, b = _CORNERS[corner]
    if ctx.k == 0.0 and b:
        return
    u = np.asarray(u, dtype=complex)
    w = u - a * ctx.K - 1j * b * (ctx.Kprime if b else 0.0)
    r = _wrap(w.real, 2 * ctx.K) + 1j * (_wrap(w.imag, 2 * ctx.Kprime) if ctx.k else w.imag)
    d = np.abs(r)
    if np.any(d < POLE_TOL):
        i = np.argmin(d.ravel())
        raise PoleError(f"{what} evaluated at a pole", (u - r).ravel()[i])


def sncndn(u, ctx):
    """Return (sn, cn, dn) at complex ``u`` without pole checks.

    Uses the addition formulas for ``x + iy`` in terms of real-argument
    values at modulus k (for x) and k' (for y).
    """
    u = np.asarray(u, dtype=complex)
    if ctx.k == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    u = ctx.reduce(u)
    x, y = u.real, u.imag
    s, c, d, _ = ellipj(x, ctx.m)
    s1, c1, d1, _ = ellipj(y, ctx.m1)
    with np.errstate(divide="ignore", invalid="ignore"):
        den = c1 * c1 + ctx.m * s * s * s1 * s1
        sn = (s * d1 + 1j * c * d * s1 * c1) / den
        cn = (c * c1 - 1j * s * d * s1 * d1) / den
        dn = (d * c1 * d1 - 1j * ctx.m * s * c * s1) / den
    return sn, cn, dn


def _letters(sn, cn, dn):
    return {"s": sn, "c": cn, "d": dn, "n": np.ones_like(sn)}


def jacobi(name, u, ctx):
    """Evaluate one of the 12 Jacobi functions ``pq`` at complex ``u``.

    Parameters
    ----------
    name : str
        Two-letter code such as ``"sn"``, ``"sc"`` or ``"dc"``.
    u : complex or array_like
    ctx : EllipticContext

    Raises
    ------
    PoleError
        If ``u`` lies within 1e-10 of a pole of ``pq``, i.e. of the q corner.
    """
    if name not in NAMES:
        raise ValueError(f"unknown Jacobi function {name!r}")
    _check_poles(u, ctx, name[1], name)
    f = _letters(*sncndn(u, ctx))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = f[name[0]] / f[name[1]]
    return out if np.ndim(out) else complex(out)


def _eps_real(x, ctx):
    """Epsilon function for real x via quasi-periodicity and ellipeinc."""
    n = np.round(x / (2 * ctx.K))
    x0 = x - 2 * ctx.K * n
    ph = ellipj(x0, ctx.m)[3]
    return ellipeinc(ph, ctx.m) + 2 * ctx.E * n


def _eps_near_axis(u, ctx):
    """Epsilon function for |Im u| <= K'/2 (well conditioned)."""
    x, y = u.real, u.imag
    dual = ctx.dual
    s1, c1, d1, _ = ellipj(y, ctx.m1)
    eps_iy = 1j * (y + d1 * s1 / c1 - _eps_real(y, dual))
    sn_x = ellipj(x, ctx.m)[0]
    sn_iy = 1j * s1 / c1
    sn_u = sncndn(u, ctx)[0]
    return _eps_real(x, ctx) + eps_iy - ctx.m * sn_x * sn_iy * sn_u


def jacobi_epsilon(u, ctx):
    """Jacobi epsilon function ``E(u|k) = int_0^u dn^2``.

    Quasi-periodic: ``E(u + 2K) = E(u) + 2E`` and
    ``E(u + 2iK') = E(u) + 2i(K' - E')``; poles at ``iK' + 2K Z + 2iK' Z``.
    """
    u = np.asarray(u, dtype=complex)
    if ctx.k == 0.0:
        return u if u.ndim else complex(u)
    _check_poles(u, ctx, "n", "epsilon function")
    ny = np.round(u.imag / (2 * ctx.Kprime))
    nx = np.round(u.real / (2 * ctx.K))
    u0 = u - 2j * ctx.Kprime * ny - 2 * ctx.K * nx
    out = 2j * (ctx.Kprime - ctx.Eprime) * ny + 2 * ctx.E * nx
    far = np.abs(u0.imag) > 0.5 * ctx.Kprime
    sgn = np.where(far, np.sign(u0.imag), 0.0)
    u1 = u0 - 1j * sgn * ctx.Kprime
    base = _eps_near_axis(u1, ctx)
    sn, cn, dn = sncndn(u1, ctx)
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(far, sgn * 1j * (ctx.Kprime - ctx.Eprime) + cn * dn / sn, 0.0)
    out = out + base + shift
    return out if out.ndim else complex(out)


def jacobi_zeta(x, ctx, max_terms=200):
    """Jacobi zeta function ``Z(x) = E(x) - (E/K) x`` for real x.

    Uses ``Z(x) = (2 pi/K) sum_n q^n/(1 - q^{2n}) sin(n pi x/K)`` when the nome
    is small, which keeps full relative accuracy as k -> 0; otherwise the
    direct difference.
    """
    x = np.asarray(x, dtype=float)
    if ctx.k == 0.0:
        return np.zeros_like(x) if x.ndim else 0.0
    q = ctx.q
    if q < 0.5:
        n_terms = min(max_terms, int(np.ceil(np.log(1e-18) / np.log(q))) + 1)
        n = np.arange(1, n_terms + 1)
        coef = q ** n / (1 - q ** (2 * n))
        out = 2 * np.pi / ctx.K * np.sum(coef * np.sin(np.multiply.outer(x, n) * np.pi / ctx.K), axis=-1)
    else:
        out = _eps_real(x, ctx) - ctx.E / ctx.K * x
    return out if np.ndim(out) else float(out)


def func_A(u, ctx):
    """The function ``A(u|k) = (Dc(u) + (E-K)u/K) / k'`` with ``Dc = int_0^u dc^2``.

    Evaluated as ``-(i/k') E(iu|k') + (E-K) u / (k' K)``. At k = 0 it equals tan.
    """
    u = np.asarray(u, dtype=complex)
    _check_poles(u, ctx, "c", "A")
    if ctx.k == 0.0:
        out = np.tan(u)
    else:
        d = ctx.dual
        out = -1j / ctx.kprime * _eps_unchecked(1j * u, d) + (ctx.E - ctx.K) * u / (ctx.kprime * ctx.K)
    return out if out.ndim else complex(out)


def _eps_unchecked(u, ctx):
    try:
        return jacobi_epsilon(u, ctx)
    except PoleError as err:
        raise PoleError("A evaluated at a pole", err.pole) from None


def dA(u, ctx):
    """Derivative ``A'(u) = dc^2(u)/k' - (K - E)/(k'K)``."""
    sn, cn, dn = sncndn(u, ctx)
    return (dn / cn) ** 2 / ctx.kprime - (ctx.K - ctx.E) / (ctx.kprime * ctx.K)


def func_H(u, ctx):
    """The function ``H(u|k) = (K'/pi) (E(u/2|k) + (E' - K') u / (2K'))``.

    Real for real u, ``H(0) = 0``, ``H(u + 4K) = H(u) + 1``, ``H(u + 4iK') = H(u)``,
    simple pole at ``2iK'`` with residue ``2K'/pi``; tends to ``u/(2 pi)`` as k -> 0.
    """
    u = np.asarray(u, dtype=complex)
    if ctx.k == 0.0:
        out = u / (2 * np.pi)
    else:
        try:
            e = jacobi_epsilon(u / 2, ctx)
        except PoleError as err:
            raise PoleError("H evaluated at a pole", 2 * err.pole) from None
        out = ctx.Kprime / np.pi * (e + (ctx.Eprime - ctx.Kprime) * u / (2 * ctx.Kprime))
    return out if out.ndim else complex(out)


def dH(u, ctx):
    """Derivative ``H'(u) = (K'/(2 pi)) (dn^2(u/2) + (E' - K')/K')``."""
    if ctx.k == 0.0:
        return np.full(np.shape(u), 1 / (2 * np.pi)) + 0j
    dn = sncndn(np.asarray(u, dtype=complex) / 2, ctx)[2]
    return ctx.Kprime / (2 * np.pi) * (dn * dn + (ctx.Eprime - ctx.Kprime) / ctx.Kprime)


def func_H_series(u, ctx, tol=1e-16):
    """Nome expansion of H for real u.

    ``H(4K t/pi) = t/pi + (2K'/K) sum_s q^s/(1 - q^{2s}) sin(2 s t)``.
    """
    t = np.asarray(u, dtype=float) * np.pi / (4 * ctx.K)
    out = t / np.pi
    if ctx.q == 0.0:
        return out
    pref = 2 * ctx.Kprime / ctx.K
    s = 1
    while True:
        c = ctx.q**s / (1 - ctx.q ** (2 * s))
        out = out + pref * c * np.sin(2 * s * t)
        if pref * c < tol:
            return out
        s += 1


def sc_series(u, ctx, tol=1e-16):
    """Nome expansion of sc for real u in (-K, K).

    ``sc(2K t/pi) = pi/(2k'K) tan t + (2 pi/(k'K)) sum_n (-1)^n q^{2n}/(1 + q^{2n}) sin(2 n t)``.
    """
    t = np.asarray(u, dtype=float) * np.pi / (2 * ctx.K)
    out = np.pi / (2 * ctx.kprime * ctx.K) * np.tan(t)
    pref = 2 * np.pi / (ctx.kprime * ctx.K)
    n = 1
    while ctx.q > 0.0:
        c = ctx.q ** (2 * n) / (1 + ctx.q ** (2 * n))
        out = out + pref * (-1) ** n * c * np.sin(2 * n * t)
        if pref * c < tol:
            break
        n += 1
    return out


def landen_ascend(k):
    """Ascending Landen transformation.

    Returns ``(l, mu)`` with ``l = (2 - k^2 - 2k')/k^2 = (1 - k')/(1 + k')`` and
    ``mu = (1 - l)/(1 + l) = k'``, so that
    ``(sn cn/dn)(u|k) = sn((1 + mu) u|l)/(1 + mu)``.
    """
    k = float(k)
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must lie in [0, 1), got {k}")
    kp = np.sqrt((1.0 - k) * (1.0 + k))
    ell = (1.0 - kp) / (1.0 + kp)
    mu = (1.0 - ell) / (1.0 + ell)
    return float(ell), float(mu)
