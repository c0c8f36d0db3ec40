"""First-order GARCH-type processes.

The volatility function is

    sigma(x, s)**2 = alpha0 + (alpha1 + gamma1 * 1{x < 0}) * x**2 + beta1 * s**2

and the process is ``X_t = phi * X_{t-1} + sigma_t * eps_t`` with
``sigma_t = sigma(X_{t-1}, sigma_{t-1})``.  For ``phi != 0`` only the
AR(1)-ARCH(1) case (``beta1 = gamma1 = 0``) is supported, where the
volatility depends on the previous observation rather than on a residual.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy import integrate, optimize, special

from ._numerics import ConvergenceError

__all__ = [
    "InnovationDist", "gaussian", "student_t", "skew_t", "GarchSpec",
    "Stationarity", "SimulationResult", "NonStationaryError", "SimulationOverflow",
    "check_stationarity", "tail_index", "simulate", "innovation_pdf",
    "innovation_cdf", "innovation_quantile",
]

OVERFLOW = 1e150


class NonStationaryError(ValueError):
    """The specification has no strictly stationary solution."""


class SimulationOverflow(FloatingPointError):
    """A simulated path exceeded the overflow guard."""


def _t_logpdf(x, nu):
    return (special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2)
            - 0.5 * np.log(nu * np.pi) - (nu + 1) / 2 * np.log1p(x * x / nu))


@dataclass(frozen=True)
class InnovationDist:
    """Innovation law standardised to mean 0 and variance 1.

    Parameters
    ----------
    law : {'gaussian', 'student_t', 'skew_t'}
    nu : float
        Degrees of freedom (must exceed 2 for the t laws).
    lam : float
        Fernandez-Steel asymmetry; ``lam < 1`` skews to the left.
    """

    law: str = "gaussian"
    nu: float = np.inf
    lam: float = 1.0
    loc: float = field(init=False, repr=False, default=0.0)
    scale: float = field(init=False, repr=False, default=1.0)

    def __post_init__(self):
        if self.law not in ("gaussian", "student_t", "skew_t"):
            raise ValueError(f"unknown innovation law {self.law!r}")
        if self.law != "gaussian" and not self.nu > 2:
            raise ValueError("t innovations need nu > 2 for unit variance")
        if self.law == "skew_t" and not self.lam > 0:
            raise ValueError("skew parameter must be positive")
        loc, scale = 0.0, 1.0
        if self.law == "student_t":
            scale = np.sqrt(self.nu / (self.nu - 2))
        elif self.law == "skew_t":
            nu, g = self.nu, self.lam
            m1 = 2 * np.sqrt(nu) * np.exp(special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2)) \
                / (np.sqrt(np.pi) * (nu - 1))
            m2 = nu / (nu - 2)
            loc = m1 * (g - 1 / g)
            scale = np.sqrt(m2 * (g * g - 1 + 1 / (g * g)) - loc * loc)
        object.__setattr__(self, "loc", float(loc))
        object.__setattr__(self, "scale", float(scale))

    @property
    def symmetric(self):
        return self.law != "skew_t" or self.lam == 1.0

    # raw (unstandardised) law -------------------------------------------
    def _raw_logpdf(self, z):
        if self.law == "gaussian":
            return -0.5 * z * z - 0.5 * np.log(2 * np.pi)
        if self.law == "student_t":
            return _t_logpdf(z, self.nu)
        g = self.lam
        zz = np.where(z >= 0, z / g, z * g)
        return np.log(2 / (g + 1 / g)) + _t_logpdf(zz, self.nu)

    def _raw_cdf(self, z):
        if self.law == "gaussian":
            return special.ndtr(z)
        if self.law == "student_t":
            return special.stdtr(self.nu, z)
        g, nu = self.lam, self.nu
        c = 1 + g * g
        return np.where(z < 0, 2 / c * special.stdtr(nu, z * g),
                        1 / c + 2 * g * g / c * (special.stdtr(nu, z / g) - 0.5))

    def _raw_ppf(self, p):
        if self.law == "gaussian":
            return special.ndtri(p)
        if self.law == "student_t":
            return special.stdtrit(self.nu, p)
        g, nu = self.lam, self.nu
        c = 1 + g * g
        p0 = 1 / c
        left = special.stdtrit(nu, np.clip(p * c / 2, 0, 1)) / g
        right = g * special.stdtrit(nu, np.clip(0.5 + (p - p0) * c / (2 * g * g), 0, 1))
        return np.where(p < p0, left, right)

    # standardised law ---------------------------------------------------
    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return self._raw_logpdf(self.loc + self.scale * x) + np.log(self.scale)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return self._raw_cdf(self.loc + self.scale * x)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0) | (p >= 1)):
            raise ValueError("quantile level must lie in (0, 1)")
        return (self._raw_ppf(p) - self.loc) / self.scale

    def rvs(self, n, rng):
        if self.law == "gaussian":
            return rng.standard_normal(n)
        if self.law == "student_t":
            return rng.standard_t(self.nu, n) / self.scale
        g = self.lam
        t = np.abs(rng.standard_t(self.nu, n))
        pos = rng.random(n) < g * g / (1 + g * g)
        z = np.where(pos, g * t, -t / g)
        return (z - self.loc) / self.scale

    def expect(self, func, split=(0.0,)):
        """``E func(eps)`` by adaptive quadrature, split at the given points."""
        pts = [-np.inf, *split, np.inf]
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            val, _ = integrate.quad(lambda x: func(x) * self.pdf(x), a, b,
                                    limit=400, epsabs=1e-13, epsrel=1e-11)
            total += val
        return total

    def to_dict(self):
        d = {"law": self.law}
        if self.law != "gaussian":
            d["nu"] = self.nu
        if self.law == "skew_t":
            d["lam"] = self.lam
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("law", "gaussian"), float(d.get("nu", np.inf)), float(d.get("lam", 1.0)))


def gaussian():
    return InnovationDist("gaussian")


def student_t(nu):
    return InnovationDist("student_t", nu)


def skew_t(nu, lam):
    return InnovationDist("skew_t", nu, lam)


def innovation_pdf(dist, x):
    return dist.pdf(x)


def innovation_cdf(dist, x):
    return dist.cdf(x)


def innovation_quantile(dist, p):
    return dist.ppf(p)


@dataclass(frozen=True)
class GarchSpec:
    """GARCH(1,1)-type specification with optional leverage and AR(1) mean."""

    alpha0: float
    alpha1: float = 0.0
    beta1: float = 0.0
    gamma1: float = 0.0
    phi: float = 0.0
    innovations: InnovationDist = field(default_factory=gaussian)

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if min(self.alpha1, self.beta1, self.gamma1) < 0:
            raise ValueError("alpha1, beta1 and gamma1 must be nonnegative")
        if self.phi != 0 and (self.beta1 != 0 or self.gamma1 != 0):
            raise ValueError("an AR(1) mean is only supported with ARCH(1) volatility "
                             "(beta1 = gamma1 = 0)")
        if not abs(self.phi) < 1:
            raise ValueError("phi must lie in (-1, 1)")

    @property
    def is_arch(self):
        return self.beta1 == 0

    def sigma2(self, x, s2=0.0):
        x = np.asarray(x, dtype=float)
        a = self.alpha1 + self.gamma1 * (x < 0)
        return self.alpha0 + a * x * x + self.beta1 * s2

    def sigma(self, x, s2=0.0):
        return np.sqrt(self.sigma2(x, s2))

    def to_dict(self):
        return {"alpha0": self.alpha0, "alpha1": self.alpha1, "beta1": self.beta1,
                "gamma1": self.gamma1, "phi": self.phi,
                "innovations": self.innovations.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["alpha0"]), float(d.get("alpha1", 0.0)), float(d.get("beta1", 0.0)),
                   float(d.get("gamma1", 0.0)), float(d.get("phi", 0.0)),
                   InnovationDist.from_dict(d.get("innovations", {})))


class Stationarity(NamedTuple):
    stationary: bool
    log_moment: float

    def __bool__(self):
        return self.stationary


def _multiplier_moment(spec, zeta):
    """``E m(eps)**zeta`` where ``m`` is the one-step volatility multiplier."""
    a, b, g, phi = spec.alpha1, spec.beta1, spec.gamma1, spec.phi
    dist = spec.innovations
    if phi != 0:
        # E |phi + sqrt(alpha1) eps|^zeta, singular where the bracket vanishes
        root = -phi / np.sqrt(a) if a > 0 else 0.0
        return dist.expect(lambda e: np.abs(phi + np.sqrt(a) * e) ** zeta, split=(root,))
    return dist.expect(lambda e: ((a + g * (e < 0)) * e * e + b) ** (zeta / 2))


def check_stationarity(spec):
    """Strict-stationarity condition ``E ln((alpha1 + gamma1 1{eps<0}) eps^2 + beta1) < 0``.

    For AR(1)-ARCH(1) the condition is ``E ln|phi + sqrt(alpha1) eps| < 0``.

    Returns
    -------
    Stationarity
        Named pair ``(stationary, log_moment)``; truthy when stationary.
    """
    a, b, g, phi = spec.alpha1, spec.beta1, spec.gamma1, spec.phi
    dist = spec.innovations
    if a == 0 and g == 0 and phi == 0:
        val = np.log(b) if b > 0 else -np.inf
        return Stationarity(bool(val < 0), float(val))
    if phi != 0:
        root = -phi / np.sqrt(a) if a > 0 else 0.0
        val = dist.expect(lambda e: np.log(np.abs(phi + np.sqrt(a) * e)), split=(root,))
    else:
        val = dist.expect(lambda e: np.log((a + g * (e < 0)) * e * e + b))
    return Stationarity(bool(val < 0), float(val))


def tail_index(spec):
    """Tail index ``zeta``: positive root of ``E m(eps)**zeta = 1``.

    Raises
    ------
    NonStationaryError
        If the stationarity condition fails.
    ConvergenceError
        If no sign change is found below the innovation moment limit.
    """
    if spec.alpha1 == 0 and spec.gamma1 == 0:
        raise ValueError("tail index needs alpha1 > 0 or gamma1 > 0")
    st = check_stationarity(spec)
    if not st:
        raise NonStationaryError("specification is not strictly stationary")
    g = lambda z: _multiplier_moment(spec, z) - 1.0
    cap = spec.innovations.nu if spec.innovations.law != "gaussian" else np.inf
    lo = 1e-3
    hi = 1.0
    while g(hi) < 0:
        lo = hi
        hi *= 1.5
        if hi >= cap:
            hi = 0.5 * (lo + cap)
            if cap - lo < 1e-9:
                raise ConvergenceError("moment equation has no root below the innovation tail index")
        if hi > 1e3:
            raise ConvergenceError("tail index root not bracketed")
    if g(lo) > 0:
        raise ConvergenceError("tail index root not bracketed")
    root = optimize.brentq(g, lo, hi, xtol=1e-12, rtol=1e-12)
    return float(root)


class SimulationResult(NamedTuple):
    x: np.ndarray
    sigma: np.ndarray


@njit(cache=True)
def _recurse(eps, alpha0, alpha1, beta1, gamma1, phi, s2, guard):
    n = eps.shape[0]
    x = np.empty(n)
    sig = np.empty(n)
    xp = 0.0
    for t in range(n):
        a = alpha1 + (gamma1 if xp < 0 else 0.0)
        s2 = alpha0 + a * xp * xp + beta1 * s2
        s = np.sqrt(s2)
        xp = phi * xp + s * eps[t]
        if not abs(xp) <= guard:
            return x, sig, t
        x[t] = xp
        sig[t] = s
    return x, sig, -1


def simulate(spec, n, burn_in=10_000, seed=None, check=True):
    """Simulate ``n`` observations after discarding ``burn_in``.

    Parameters
    ----------
    spec : GarchSpec
    n, burn_in : int
    seed : int or numpy.random.Generator, optional
    check : bool
        Verify strict stationarity first.

    Returns
    -------
    SimulationResult
        Arrays ``x`` and ``sigma`` of length ``n``.
    """
    if n < 1 or burn_in < 0:
        raise ValueError("n must be positive and burn_in nonnegative")
    if check and not check_stationarity(spec):
        raise NonStationaryError("specification is not strictly stationary")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    eps = spec.innovations.rvs(n + burn_in, rng)
    ab = spec.alpha1 + spec.beta1
    s2 = spec.alpha0 / (1 - ab) if ab < 1 else spec.alpha0
    x, sig, bad = _recurse(eps, spec.alpha0, spec.alpha1, spec.beta1, spec.gamma1,
                           spec.phi, s2, OVERFLOW)
    if bad >= 0:
        raise SimulationOverflow(f"|X_t| exceeded {OVERFLOW:g} at step {bad}")
    return SimulationResult(x[burn_in:], sig[burn_in:])
