"""Small numerical helpers shared across modules."""
from functools import lru_cache

import numpy as np


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to converge."""


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def monotone_root(func, target, lo, hi, deriv=None, xtol=1e-14, max_iter=200,
                  increasing=True, x0=None):
    """Vectorised root of ``func(x) = target`` for monotone ``func`` on [lo, hi].

    Without ``deriv`` this is plain bisection to ``xtol``.  With ``deriv``
    each iteration takes a Newton step when it stays inside the current
    bracket and bisects otherwise.

    Parameters
    ----------
    func : callable
        Vectorised monotone function.
    target, lo, hi : array_like
        Broadcastable arrays of targets and brackets.
    deriv : callable, optional
        Derivative of ``func``.
    increasing : bool
        Direction of monotonicity.
    x0 : array_like, optional
        Starting point (the bracket midpoint by default).

    Returns
    -------
    numpy.ndarray
    """
    target = np.asarray(target, dtype=float)
    lo, hi, target = np.broadcast_arrays(np.asarray(lo, dtype=float),
                                         np.asarray(hi, dtype=float), target)
    lo = lo.copy()
    hi = hi.copy()
    sign = 1.0 if increasing else -1.0
    x = 0.5 * (lo + hi)
    if x0 is not None:
        x0 = np.broadcast_to(np.asarray(x0, dtype=float), x.shape)
        x = np.where(np.isfinite(x0) & (x0 > lo) & (x0 < hi), x0, x)
    for _ in range(max_iter):
        f = func(x) - target
        below = sign * f < 0
        lo = np.where(below, x, lo)
        hi = np.where(below, hi, x)
        mid = 0.5 * (lo + hi)
        if deriv is None:
            new = mid
        else:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                cand = x - f / deriv(x)
            ok = np.isfinite(cand) & (((cand > lo) & (cand < hi)) | (np.abs(cand - x) <= xtol))
            new = np.where(ok, cand, mid)
        done = (np.abs(new - x) <= xtol) | (hi - lo <= xtol) | (f == 0)
        x = np.where(f == 0, x, new)
        if np.all(done):
            return x
    if np.any(hi - lo > 1e3 * xtol):
        raise ConvergenceError("root search did not reach tolerance")
    return x


def kendall_tau(x, y):
    """Kendall's tau-b (thin wrapper so callers avoid the scipy result object)."""
    from scipy.stats import kendalltau
    return float(kendalltau(x, y).statistic)


_T_TABLE_SIZE = 1025
_FAST_T_MIN = 4096


@lru_cache(maxsize=64)
def _t_quantile_table(nu):
    from scipy import special
    from scipy.interpolate import CubicSpline
    z = np.linspace(np.log(1e-17), np.log(0.5), _T_TABLE_SIZE)
    y = np.arcsinh(special.stdtrit(nu, np.exp(z)))
    return CubicSpline(z, y)


def t_quantile(nu, p):
    """Student t quantile, fast for long arrays.

    Long inputs use a cubic spline of ``asinh(x)`` against ``log p`` for a
    starting value and one Newton step on ``stdtr``; non-finite entries
    fall back to ``scipy.special.stdtrit``.
    """
    from scipy import special
    p = np.asarray(p, dtype=float)
    if p.size < _FAST_T_MIN or not nu >= 0.5 or not np.isfinite(nu):
        return special.stdtrit(nu, p)
    q = np.minimum(p, 1.0 - p)
    q = np.clip(q, 1e-17, 0.5)
    x = np.sinh(_t_quantile_table(float(nu))(np.log(q)))
    lc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * np.log(nu * np.pi)
    dens = np.exp(lc - (nu + 1) / 2 * np.log1p(x * x / nu))
    x = x - (special.stdtr(nu, x) - q) / dens
    bad = ~np.isfinite(x)
    if np.any(bad):
        x[bad] = special.stdtrit(nu, q[bad])
    x = np.where(p > 0.5, -x, x)
    return np.where(p <= 0, -np.inf, np.where(p >= 1, np.inf, x))
