"""The discrete massive exponential function and its rate function chi."""

from dataclasses import dataclass

import numpy as np

from .elliptic import PoleError, sncndn


@dataclass(frozen=True)
class PathData:
    """Step directions of a minimal diamond path.

    Attributes
    ----------
    alpha : ndarray
        Distinct step angles in elliptic units, in [0, 4K).
    mult : ndarray
        Multiplicity of each angle.
    """

    alpha: np.ndarray
    mult: np.ndarray

    @property
    def length(self):
        return int(self.mult.sum())

    @property
    def weights(self):
        """Normalised multiplicities ``n_j = N_j / |x - y|``."""
        return self.mult / self.length

    def zeros(self):
        return self.alpha

    def poles(self, ctx):
        return np.mod(self.alpha + 2 * ctx.K, 4 * ctx.K)

    def sector(self, ctx):
        """(midpoint, half-width) of the smallest arc of [0, 4K) holding all step angles."""
        return _sector(self.alpha, 4 * ctx.K)


def _sector(angles, period):
    a = np.sort(np.mod(angles, period))
    if len(a) == 1:
        return float(a[0]), 0.0
    gaps = np.diff(np.concatenate([a, [a[0] + period]]))
    k = int(np.argmax(gaps))
    start = a[(k + 1) % len(a)]
    width = period - gaps[k]
    return float(np.mod(start + width / 2, period)), float(width / 2)


def path_data(g, x, y, ctx):
    """Path data of a minimal path from x to y in a periodic graph."""
    steps = g.minimal_path(x, y)
    return path_data_from_steps(steps, ctx)


def path_data_from_steps(steps, ctx):
    """Build :class:`PathData` from ``[(alpha_bar, multiplicity), ...]``."""
    if not steps:
        return PathData(np.zeros(0), np.zeros(0, dtype=int))
    a = np.array([s[0] for s in steps], dtype=float)
    m = np.array([s[1] for s in steps], dtype=int)
    alpha = np.mod(ctx.elliptic_angle(a), 4 * ctx.K)
    # merge directions that coincide in elliptic units
    key = np.round(alpha, 12)
    u, inv = np.unique(key, return_inverse=True)
    mult = np.zeros(len(u), dtype=int)
    np.add.at(mult, inv, m)
    return PathData(u.astype(float), mult)


def exp_factor(u, alpha, ctx):
    """Single diamond-step factor ``i sqrt(k') sc((u - alpha)/2)``."""
    sn, cn, _ = sncndn((np.asarray(u, dtype=complex) - alpha) / 2, ctx)
    return 1j * np.sqrt(ctx.kprime) * sn / cn


def _check(pd, u, ctx):
    u = np.asarray(u, dtype=complex)
    for a in pd.alpha:
        r = u - a - 2 * ctx.K
        x = r.real - 4 * ctx.K * np.round(r.real / (4 * ctx.K))
        y = r.imag if ctx.k == 0.0 else r.imag - 4 * ctx.Kprime * np.round(r.imag / (4 * ctx.Kprime))
        if np.any(np.abs(x + 1j * y) < 1e-10):
            raise PoleError("exponential function evaluated at a pole", a + 2 * ctx.K)


def log_exp(pd, u, ctx):
    """``sum_j N_j log(factor_j(u))`` (principal logs, accumulated factor by factor)."""
    u = np.asarray(u, dtype=complex)
    out = np.zeros(u.shape, dtype=complex)
    zero = np.zeros(u.shape, bool)
    for a, n in zip(pd.alpha, pd.mult):
        f = exp_factor(u, a, ctx)
        # exact zeros of the factor (u = alpha) give e = 0; keep them out of complex log arithmetic
        z = f == 0
        zero |= z
        out = out + n * np.log(np.where(z, 1.0, f))
    return np.where(zero, -np.inf, out)


def mass_exp_path(pd, u, ctx):
    """Exponential function for given path data, evaluated in log space."""
    _check(pd, u, ctx)
    out = np.exp(log_exp(pd, u, ctx))
    return out if np.ndim(out) else complex(out)


def mass_exp(g, x, y, u, ctx):
    """Discrete massive exponential ``e_{(x,y)}(u | k)`` on a periodic graph."""
    return mass_exp_path(path_data(g, x, y, ctx), u, ctx)


def _scd(v, ctx):
    sn, cn, dn = sncndn(v, ctx)
    return sn, cn, dn


def chi(pd, u, ctx):
    """``chi(u) = sum_j n_j log(sqrt(k') nd((u - alpha_j)/2))``.

    Equals ``log(e_{(x,y)}(u + 2iK'))/|x - y|`` modulo ``2 pi i``.
    """
    u = np.asarray(u, dtype=complex)
    if np.any(np.abs(u.imag) >= 2 * ctx.Kprime):
        raise ValueError("chi is defined for |Im u| < 2K'")
    out = np.zeros(u.shape, dtype=complex)
    for a, n in zip(pd.alpha, pd.weights):
        dn = _scd((u - a) / 2, ctx)[2]
        out = out + n * np.log(np.sqrt(ctx.kprime) / dn)
    return out if out.ndim else complex(out)


def dchi(pd, u, ctx):
    """``chi'(u) = sum_j n_j (k^2/2) (sn cn/dn)((u - alpha_j)/2)``."""
    u = np.asarray(u, dtype=complex)
    out = np.zeros(u.shape, dtype=complex)
    for a, n in zip(pd.alpha, pd.weights):
        sn, cn, dn = _scd((u - a) / 2, ctx)
        out = out + n * ctx.m / 2 * sn * cn / dn
    return out if out.ndim else complex(out)


def d2chi(pd, u, ctx):
    """Second derivative of chi, from ``(sn cn/dn)' = (cn^2 dn^2 - sn^2 dn^2 + k^2 sn^2 cn^2)/dn^2``."""
    u = np.asarray(u, dtype=complex)
    out = np.zeros(u.shape, dtype=complex)
    for a, n in zip(pd.alpha, pd.weights):
        sn, cn, dn = _scd((u - a) / 2, ctx)
        f = (cn * cn * dn * dn - sn * sn * dn * dn + ctx.m * sn * sn * cn * cn) / (dn * dn)
        out = out + n * ctx.m / 4 * f
    return out if out.ndim else complex(out)


def harmonicity_residual(g, x, y, u, ctx):
    """Relative residual of ``(Delta^m e_{(., y)}(u))(x)`` on a periodic graph.

    Returns ``|d(x) e(x) - sum_z rho(xz) e(z)| / (d(x) max|e|)`` per u.
    """
    from .laplacian import conductance, diagonal

    u = np.asarray(u, dtype=complex)
    ex = mass_exp(g, x, y, u, ctx)
    d = diagonal(g, x[0], ctx)
    acc = d * ex
    scale = np.abs(ex)
    for z, th, _, _ in g.neighbors(x):
        ez = mass_exp(g, z, y, u, ctx)
        acc = acc - conductance(th, ctx) * ez
        scale = np.maximum(scale, np.abs(ez))
    return np.abs(acc) / (d * scale)
