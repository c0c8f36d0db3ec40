"""Stationary simplified d-vine copula processes.

A d-vine of order ``p`` couples ``u_{j-k}`` and ``u_j`` through the pair
copula ``C_k`` applied to the backward and forward Rosenblatt values of the
two points given the ``k-1`` intermediate observations.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .copulas import (AbsSphericalT, BivariateCopula, Clayton, Independence, Joe, Rotated,
                      copula_from_dict, kendall_tau_ast_inverse)
from .vtcopula import LinearVtCopula, VtCopula
from .vtransform import VTransform, linear

__all__ = [
    "DVineSpec", "log_density", "simulate", "rosenblatt_forward", "vt_dvine_log_density",
    "kpacf_arma11", "build_garch_mimic", "canonical_transform",
]

EPS = 1e-15
DEFAULT_TRUNCATION = 30
# below this Kendall tau a pair copula is taken to be the independence copula
TAU_INDEPENDENCE = 1e-3


def _clip(u):
    return np.clip(u, EPS, 1 - EPS)


@dataclass(frozen=True)
class DVineSpec:
    """Ordered pair copulas ``(C_1, ..., C_p)`` of a stationary d-vine.

    Lags beyond ``truncation`` use the independence copula.  Pair copulas
    must expose closed-form h-functions; v-transformed copulas are admitted
    only in their linear form.
    """

    pair_copulas: tuple

    def __post_init__(self):
        cops = tuple(self.pair_copulas)
        object.__setattr__(self, "pair_copulas", cops)
        if not cops:
            raise ValueError("a d-vine needs at least one pair copula")
        for c in cops:
            if not isinstance(c, BivariateCopula):
                raise TypeError(f"pair copula {c!r} is not a BivariateCopula")
            if isinstance(c, VtCopula) and not isinstance(c, LinearVtCopula):
                raise ValueError("only linear v-transform copulas can enter a d-vine")

    @property
    def truncation(self):
        return len(self.pair_copulas)

    def to_dict(self):
        return {"truncation": self.truncation,
                "pair_copulas": [c.to_dict() for c in self.pair_copulas]}

    @classmethod
    def from_dict(cls, d):
        spec = cls(tuple(copula_from_dict(c) for c in d["pair_copulas"]))
        if "truncation" in d and int(d["truncation"]) != spec.truncation:
            raise ValueError("truncation does not match the number of pair copulas")
        return spec

    def is_independence(self):
        return all(isinstance(c, Independence) for c in self.pair_copulas)

    @property
    def order(self):
        """Largest lag with a non-independence pair copula (0 if none)."""
        for k in range(self.truncation, 0, -1):
            if not isinstance(self.pair_copulas[k - 1], Independence):
                return k
        return 0


def _as_batch(u):
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.ndim != 2 or u.shape[1] < 2:
        raise ValueError("need vectors of length at least 2")
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("d-vine arguments must lie strictly inside (0, 1)")
    return u, single


class _Vals:
    """Rosenblatt values with an optional folded representation.

    Values produced by a linear-vt pair copula are kept as ``(y, side)``
    relative to its fulcrum, where ``y`` is the base copula h-value.  Passing
    ``y`` on directly avoids the cancellation in ``(delta - x) / delta``
    when ``x`` sits near the fulcrum.
    """

    __slots__ = ("x", "y", "side", "delta")

    def __init__(self, x, y=None, side=None, delta=None):
        self.x, self.y, self.side, self.delta = x, y, side, delta

    @classmethod
    def folded(cls, y, side, delta):
        y = _clip(y)
        x = np.where(side, delta + (1 - delta) * y, delta * (1 - y))
        return cls(x, y, side, delta)

    def coords(self, delta):
        if self.delta == delta:
            return self.y, self.side
        x = self.x
        side = x > delta
        return _clip(np.where(side, (x - delta) / (1 - delta), (delta - x) / delta)), side

    def __getitem__(self, idx):
        if self.delta is None:
            return _Vals(self.x[idx])
        return _Vals(self.x[idx], self.y[idx], self.side[idx], self.delta)


def _pair_step(c, a, b, logpdf=True, h=True):
    # one d-vine edge: density at (a, b) and the h-values passed to the next lag
    lp = h1 = h2 = None
    if isinstance(c, LinearVtCopula):
        ya, sa = a.coords(c.delta1)
        yb, sb = b.coords(c.delta2)
        base = c.base
        if logpdf:
            lp = base.logpdf(ya, yb)
        if h:
            h1 = _Vals.folded(base.h1(ya, yb), sb, c.delta2)
            h2 = _Vals.folded(base.h2(ya, yb), sa, c.delta1)
    else:
        if logpdf:
            lp = c.logpdf(a.x, b.x)
        if h:
            h1, h2 = _Vals(_clip(c.h1(a.x, b.x))), _Vals(_clip(c.h2(a.x, b.x)))
    return lp, h1, h2


def _h1_inverse(c, a, p):
    # solve R_{k-1} from R_k = h1(B_{k-1}, R_{k-1})
    if isinstance(c, LinearVtCopula):
        ya = a.coords(c.delta1)[0]
        yp, sp = p.coords(c.delta2)
        return _Vals.folded(c.base._h1_inv(ya, yp), sp, c.delta2)
    return _Vals(_clip(c._h1_inv(a.x, p.x)))


def _sweep(spec, u, logpdf=True):
    """Level-by-level pass over a batch; yields (k, log densities, forward values)."""
    n = u.shape[1]
    # trailing independence lags leave the Rosenblatt values unchanged
    top = min(spec.order, n - 1)
    fwd = bwd = _Vals(u)
    for k in range(1, top + 1):
        c = spec.pair_copulas[k - 1]
        # bwd holds B_{k-1} for positions 0..n-k, fwd holds R_{k-1} for k-1..n-1
        a, b = bwd[:, :n - k], fwd[:, 1:]
        lp, r_new, b_new = _pair_step(c, a, b, logpdf=logpdf, h=True)
        yield k, lp, r_new
        fwd, bwd = r_new, b_new


def log_density(spec, u):
    """Log copula density of one vector or a batch of row vectors.

    Parameters
    ----------
    spec : DVineSpec
    u : array_like, shape (n,) or (m, n)

    Returns
    -------
    float or numpy.ndarray of shape (m,)
    """
    u, single = _as_batch(u)
    total = np.zeros(u.shape[0])
    for _, lp, _ in _sweep(spec, u):
        total += lp.sum(axis=1)
    return float(total[0]) if single else total


def rosenblatt_forward(spec, u):
    """Driving uniforms ``w_t = R_{min(t,p)}(u_t; u_{t-1}, ...)`` of a path.

    Inverse of the map used by :func:`simulate`.
    """
    u, single = _as_batch(u)
    w = u.copy()
    for k, _, r in _sweep(spec, u, logpdf=False):
        # r covers positions k..n-1; later positions are overwritten deeper down
        w[:, k:] = r.x
    return w[0] if single else w


def simulate(spec, n, seed=None, n_paths=None):
    """Simulate paths by sequential inversion of the forward Rosenblatt functions.

    Parameters
    ----------
    spec : DVineSpec
    n : int
        Path length.
    seed : int or numpy.random.Generator, optional
    n_paths : int, optional
        If given, simulate that many independent paths at once and return an
        array of shape ``(n_paths, n)``.

    Returns
    -------
    numpy.ndarray
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m = 1 if n_paths is None else int(n_paths)
    w = rng.random((m, n))
    out = _invert(spec, w)
    return out[0] if n_paths is None else out


def _invert(spec, w):
    n = w.shape[1]
    p = spec.order
    cops = spec.pair_copulas
    if p == 0:
        return w.copy()
    out = np.empty_like(w)
    # bstate[k] = B_k(u_{t-k}; u_{t-k+1}, ..., u_t) after step t
    bstate = []
    fwd = [None] * p
    for t in range(n):
        depth = min(t, p)
        x = _Vals(w[:, t])
        for k in range(depth, 0, -1):
            x = _h1_inverse(cops[k - 1], bstate[k - 1], x)
            fwd[k - 1] = x
        out[:, t] = x.x
        # fwd[k] holds R_k(u_t; past) for k < depth
        new = [x]
        for k in range(1, min(depth, p - 1) + 1):
            new.append(_pair_step(cops[k - 1], bstate[k - 1], fwd[k - 1], logpdf=False)[2])
        bstate = new
    return out


def vt_dvine_log_density(base_specs, vt, u):
    """Log density of a d-vine whose pair copulas share one linear v-transform.

    The v-transform is applied elementwise and the plain d-vine density of
    the base copulas is evaluated at the transformed vector.

    Parameters
    ----------
    base_specs : sequence of BivariateCopula or DVineSpec
    vt : VTransform or float
        Linear v-transform, or its fulcrum.
    u : array_like
    """
    if not isinstance(vt, VTransform):
        vt = linear(float(vt))
    if not vt.is_linear:
        raise ValueError("the vt-d-vine identity needs a linear v-transform")
    spec = base_specs if isinstance(base_specs, DVineSpec) else DVineSpec(tuple(base_specs))
    u, single = _as_batch(u)
    out = log_density(spec, _clip(vt(u)))
    return out[0] if single else out


def kpacf_arma11(alpha, movavg, p):
    """Kendall partial autocorrelations of a Gaussian ARMA(1,1) process.

    Partial autocorrelations come from the Levinson-Durbin recursion on the
    ARMA(1,1) autocorrelation function and are mapped to Kendall's scale by
    ``(2/pi) arcsin``.

    Parameters
    ----------
    alpha : float
        Autoregressive coefficient, ``|alpha| < 1``.
    movavg : float
        Moving-average coefficient, ``|movavg| < 1``.
    p : int
        Number of lags.

    Returns
    -------
    numpy.ndarray of shape (p,)
    """
    if not (abs(alpha) < 1 and abs(movavg) < 1):
        raise ValueError("ARMA(1,1) must be stationary and invertible")
    if p < 1:
        raise ValueError("p must be at least 1")
    a, b = float(alpha), float(movavg)
    rho1 = (1 + a * b) * (a + b) / (1 + 2 * a * b + b * b)
    acf = np.concatenate([[1.0], rho1 * a ** np.arange(p)])
    pacf = _levinson_pacf(acf, p)
    return 2 / np.pi * np.arcsin(np.clip(pacf, -1, 1))


def _levinson_pacf(acf, p):
    pacf = np.zeros(p)
    phi = np.zeros(0)
    v = acf[0]
    for k in range(1, p + 1):
        kk = (acf[k] - phi @ acf[k - 1:0:-1]) / v if k > 1 else acf[1] / v
        phi = np.concatenate([phi - kk * phi[::-1], [kk]])
        v *= 1 - kk * kk
        pacf[k - 1] = kk
    return pacf


def yule_walker_pacf(acf, p):
    """Partial autocorrelations by solving each Yule-Walker system directly."""
    out = np.zeros(p)
    for k in range(1, p + 1):
        out[k - 1] = linalg.solve(linalg.toeplitz(acf[:k]), acf[1:k + 1])[-1]
    return out


def _base_from_tau(family, tau):
    if tau < TAU_INDEPENDENCE:
        return Independence()
    if family == "joe":
        return Joe.from_tau(tau)
    if family in ("clayton180", "clayton-180"):
        return Rotated(Clayton(2 * tau / (1 - tau)), 180)
    if family == "ast":
        return AbsSphericalT(kendall_tau_ast_inverse(tau))
    raise ValueError(f"unknown base family {family!r}")


def build_garch_mimic(taus, base_family="joe", delta1=0.5, delta2=0.5, truncation=None):
    """d-vine whose lag-k pair copula is a linear-vt copula with Kendall tau ``taus[k]``.

    Parameters
    ----------
    taus : sequence of float
        Kendall correlations of the base copulas, each in ``[0, 1)``.
    base_family : {'joe', 'clayton180', 'ast'}
    delta1, delta2 : float
        Fulcrums of the linear v-transforms on the two arguments.
    truncation : int, optional
        Keep only the first ``truncation`` lags (default 30).

    Returns
    -------
    DVineSpec
    """
    taus = np.asarray(taus, dtype=float).ravel()
    if taus.size == 0:
        raise ValueError("need at least one Kendall tau")
    if np.any((taus < 0) | (taus >= 1)):
        raise ValueError("Kendall taus must lie in [0, 1)")
    if not (0 < delta1 < 1 and 0 < delta2 < 1):
        raise ValueError("fulcrums must lie in (0, 1)")
    taus = taus[:truncation or DEFAULT_TRUNCATION]
    pairs = []
    for tau in taus:
        base = _base_from_tau(base_family, tau)
        pairs.append(base if isinstance(base, Independence)
                     else LinearVtCopula(base, delta1, delta2))
    return DVineSpec(tuple(pairs))


def canonical_transform(dist, delta, x):
    """Canonical v-shaped transformation for a linear v-transform.

    ``T(x) = x - mu`` above ``mu = F^{-1}(delta)``; below it, ``x`` is mapped
    to the point above ``mu`` sharing its v-transformed probability.

    Parameters
    ----------
    dist : object with ``cdf`` and ``ppf``
        Marginal distribution, e.g. a GridDensity or frozen scipy law.
    delta : float
    x : array_like
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    x0 = np.asarray(x, dtype=float)
    x = np.atleast_1d(x0)
    mu = float(dist.ppf(delta))
    below = x < mu
    out = x - mu
    if np.any(below):
        u = np.asarray(dist.cdf(x[below]), dtype=float)
        dual = u + (delta - u) / delta
        out[below] = np.asarray(dist.ppf(np.clip(dual, 0.0, 1.0)), dtype=float) - mu
    return out.reshape(x0.shape) if x0.ndim else float(out[0])
