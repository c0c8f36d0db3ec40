"""Bivariate copula families and structural constructions.

Conventions
-----------
``h1(u, v) = dC/du = P(V <= v | U = u)`` and ``h2(u, v) = dC/dv``.
``h1_inv(u, p)`` solves ``h1(u, v) = p`` for ``v``; ``h2_inv(p, v)`` solves
``h2(u, v) = p`` for ``u``.

All evaluation methods broadcast their arguments and return floats for
scalar input.  Copula objects are immutable.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from ._numerics import ConvergenceError, gauss_legendre, monotone_root, t_quantile

__all__ = [
    "BivariateCopula", "Independence", "Gaussian", "StudentT", "SphericalT",
    "AbsSphericalT", "Clayton", "Gumbel", "Joe", "Rotated", "Mixture",
    "Khoudraji", "ParameterError", "rotations_mixture", "kendall_tau_ast",
    "kendall_tau_ast_inverse", "joe_tau", "joe_tau_inverse",
    "spherical_t_cdf_radial", "copula_from_dict",
]

EPS = 1e-15
PDF_CAP = 1e300
LOG_PDF_CAP = np.log(PDF_CAP)
CDF_NODES = 256


class ParameterError(ValueError):
    """Copula parameter outside its family domain."""


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _prep(*args):
    arrs = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))
    scalar = arrs[0].ndim == 0
    return scalar, [np.atleast_1d(a).astype(float) for a in arrs]


def _ret(x, scalar):
    return float(x[0]) if scalar else x


def _clip(u):
    return np.clip(u, EPS, 1.0 - EPS)


class BivariateCopula:
    """Base class; subclasses implement the underscored kernels on arrays."""

    exchangeable = True
    analytic_cdf = True
    n_params = 0

    # -- public API ----------------------------------------------------
    def cdf(self, u, v):
        scalar, (u, v) = _prep(u, v)
        if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)):
            raise ValueError("copula arguments must lie in [0, 1]")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.clip(self._cdf(u, v), 0.0, 1.0)
        out = np.where(u == 0, 0.0, out)
        out = np.where(v == 0, 0.0, out)
        out = np.where(u == 1, v, out)
        out = np.where(v == 1, u, out)
        return _ret(out, scalar)

    def logpdf(self, u, v):
        scalar, (u, v) = _prep(u, v)
        out = self._logpdf(_clip(u), _clip(v))
        out = np.minimum(np.nan_to_num(out, nan=-np.inf, posinf=LOG_PDF_CAP), LOG_PDF_CAP)
        return _ret(out, scalar)

    def pdf(self, u, v, return_flag=False):
        """Copula density, capped at ``PDF_CAP``.

        With ``return_flag=True`` also returns a boolean mask of capped values.
        """
        scalar, (u, v) = _prep(u, v)
        lp = np.nan_to_num(self._logpdf(_clip(u), _clip(v)), nan=-np.inf, posinf=np.inf)
        flag = lp >= LOG_PDF_CAP
        out = np.exp(np.minimum(lp, LOG_PDF_CAP))
        if return_flag:
            return _ret(out, scalar), (bool(flag[0]) if scalar else flag)
        return _ret(out, scalar)

    def h1(self, u, v):
        scalar, (u, v) = _prep(u, v)
        out = np.clip(self._h1(_clip(u), _clip(v)), 0.0, 1.0)
        out = np.where(v <= 0, 0.0, np.where(v >= 1, 1.0, out))
        return _ret(out, scalar)

    def h2(self, u, v):
        scalar, (u, v) = _prep(u, v)
        out = np.clip(self._h2(_clip(u), _clip(v)), 0.0, 1.0)
        out = np.where(u <= 0, 0.0, np.where(u >= 1, 1.0, out))
        return _ret(out, scalar)

    def h1_inv(self, u, p):
        scalar, (u, p) = _prep(u, p)
        out = np.clip(self._h1_inv(_clip(u), np.clip(p, 0.0, 1.0)), 0.0, 1.0)
        return _ret(out, scalar)

    def h2_inv(self, p, v):
        scalar, (p, v) = _prep(p, v)
        out = np.clip(self._h2_inv(np.clip(p, 0.0, 1.0), _clip(v)), 0.0, 1.0)
        return _ret(out, scalar)

    def sample(self, n, seed=None):
        """Draw ``n`` pairs by the conditional-distribution method."""
        if n < 1:
            raise ValueError("n must be positive")
        rng = _rng(seed)
        return self._sample(int(n), rng)

    def _sample(self, n, rng):
        u = rng.random(n)
        w = rng.random(n)
        return np.column_stack([u, self.h1_inv(u, w)])

    # -- default kernels -----------------------------------------------
    def _h2(self, u, v):
        if self.exchangeable:
            return self._h1(v, u)
        raise NotImplementedError

    def _pdf_raw(self, u, v):
        return np.exp(np.minimum(self._logpdf(u, v), LOG_PDF_CAP))

    def _h1_inv(self, u, p):
        return monotone_root(lambda v: self._h1(u, _clip(v)), p, 0.0, 1.0,
                             deriv=lambda v: self._pdf_raw(u, _clip(v)))

    def _h2_inv(self, p, v):
        if self.exchangeable:
            return self._h1_inv(v, p)
        return monotone_root(lambda u: self._h2(_clip(u), v), p, 0.0, 1.0,
                             deriv=lambda u: self._pdf_raw(_clip(u), v))

    # -- serialisation -------------------------------------------------
    family = "abstract"

    def params(self):
        return {}

    def to_dict(self):
        return {"family": self.family, "params": self.params()}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


# ----------------------------------------------------------------------
# elementary families
# ----------------------------------------------------------------------
class Independence(BivariateCopula):
    family = "independence"

    def _cdf(self, u, v):
        return u * v

    def _logpdf(self, u, v):
        return np.zeros(np.broadcast(u, v).shape)

    def _h1(self, u, v):
        return v * np.ones_like(u)

    def _h1_inv(self, u, p):
        return p * np.ones_like(u)

    def tau(self):
        return 0.0


@dataclass(frozen=True, repr=False)
class Gaussian(BivariateCopula):
    rho: float
    family = "gaussian"
    n_params = 1

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ParameterError("gaussian rho must lie in (-1, 1)")

    def params(self):
        return {"rho": self.rho}

    def _logpdf(self, u, v):
        r = self.rho
        x, y = special.ndtri(u), special.ndtri(v)
        q = 1.0 - r * r
        return -0.5 * np.log(q) - (r * r * (x * x + y * y) - 2 * r * x * y) / (2 * q)

    def _h1(self, u, v):
        r = self.rho
        return special.ndtr((special.ndtri(v) - r * special.ndtri(u)) / np.sqrt(1 - r * r))

    def _h1_inv(self, u, p):
        r = self.rho
        p = np.clip(p, EPS, 1 - EPS)
        return special.ndtr(r * special.ndtri(u) + np.sqrt(1 - r * r) * special.ndtri(p))

    def _cdf(self, u, v):
        return _cdf_by_conditional_law(self, u, v)

    def tau(self):
        return 2.0 / np.pi * np.arcsin(self.rho)


@dataclass(frozen=True, repr=False)
class StudentT(BivariateCopula):
    """Student t copula with correlation ``rho`` and ``nu`` degrees of freedom."""

    rho: float
    nu: float
    family = "student_t"
    n_params = 2

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ParameterError("t copula rho must lie in (-1, 1)")
        if not self.nu > 0:
            raise ParameterError("t copula nu must be positive")

    def params(self):
        return {"rho": self.rho, "nu": self.nu}

    def _logpdf(self, u, v):
        nu = self.nu
        return self._logpdf_q(t_quantile(nu, u), t_quantile(nu, v))

    def _logpdf_q(self, x, y):
        # log density in terms of the t quantiles of the arguments
        r, nu = self.rho, self.nu
        q = 1.0 - r * r
        const = (special.gammaln((nu + 2) / 2) + special.gammaln(nu / 2)
                 - 2 * special.gammaln((nu + 1) / 2) - 0.5 * np.log(q))
        quad = (x * x + y * y - 2 * r * x * y) / (nu * q)
        return (const - (nu + 2) / 2 * np.log1p(quad)
                + (nu + 1) / 2 * (np.log1p(x * x / nu) + np.log1p(y * y / nu)))

    def _h1(self, u, v):
        r, nu = self.rho, self.nu
        x, y = t_quantile(nu, u), t_quantile(nu, v)
        scale = np.sqrt((nu + x * x) * (1 - r * r) / (nu + 1))
        return special.stdtr(nu + 1, (y - r * x) / scale)

    def _h1_inv(self, u, p):
        r, nu = self.rho, self.nu
        x = t_quantile(nu, u)
        p = np.clip(p, EPS, 1 - EPS)
        scale = np.sqrt((nu + x * x) * (1 - r * r) / (nu + 1))
        return special.stdtr(nu, r * x + t_quantile(nu + 1, p) * scale)

    def _cdf(self, u, v):
        return _cdf_by_conditional_law(self, u, v)

    def tau(self):
        return 2.0 / np.pi * np.arcsin(self.rho)


class SphericalT(StudentT):
    """Copula of a bivariate t vector with zero correlation (jointly symmetric)."""

    family = "spherical_t"
    n_params = 1

    def __init__(self, nu):
        super().__init__(0.0, nu)

    def params(self):
        return {"nu": self.nu}

    def __reduce__(self):
        return (SphericalT, (self.nu,))

    def _cdf(self, u, v):
        return spherical_t_cdf_radial(self.nu, u, v)

    def tau(self):
        return 0.0


@dataclass(frozen=True, repr=False)
class AbsSphericalT(BivariateCopula):
    """Copula of ``(|T1|, |T2|)`` for a spherical t vector ``(T1, T2)``.

    ``C(u, v) = 4 C_t((1+u)/2, (1+v)/2) - u - v - 1`` and the density is
    the spherical t density at ``((1+u)/2, (1+v)/2)``.
    """

    nu: float
    family = "abs_spherical_t"
    n_params = 1

    def __post_init__(self):
        if not self.nu > 0:
            raise ParameterError("abs_spherical_t nu must be positive")
        object.__setattr__(self, "_sph", SphericalT(self.nu))

    def params(self):
        return {"nu": self.nu}

    def _cdf(self, u, v):
        return 4.0 * self._sph._cdf((1 + u) / 2, (1 + v) / 2) - u - v - 1.0

    def _logpdf(self, u, v):
        return self._sph._logpdf((1 + u) / 2, (1 + v) / 2)

    def _h1(self, u, v):
        return 2.0 * self._sph._h1((1 + u) / 2, (1 + v) / 2) - 1.0

    def _h1_inv(self, u, p):
        return 2.0 * self._sph._h1_inv((1 + u) / 2, (1 + p) / 2) - 1.0

    def tau(self):
        return kendall_tau_ast(self.nu)


@dataclass(frozen=True, repr=False)
class Clayton(BivariateCopula):
    theta: float
    family = "clayton"
    n_params = 1

    def __post_init__(self):
        if not self.theta > 0:
            raise ParameterError("clayton theta must be positive")

    def params(self):
        return {"theta": self.theta}

    def _log_a(self, u, v):
        # log(u^-t + v^-t - 1) without overflow
        t = self.theta
        s = np.logaddexp(-t * np.log(u), -t * np.log(v))
        return s + np.log1p(-np.exp(-s))

    def _cdf(self, u, v):
        return np.exp(-self._log_a(u, v) / self.theta)

    def _logpdf(self, u, v):
        t = self.theta
        return (np.log1p(t) - (t + 1) * (np.log(u) + np.log(v))
                - (2 + 1 / t) * self._log_a(u, v))

    def _h1(self, u, v):
        t = self.theta
        return np.exp(-(t + 1) * np.log(u) - (1 + 1 / t) * self._log_a(u, v))

    def _h1_inv(self, u, p):
        t = self.theta
        p = np.clip(p, EPS, 1 - EPS)
        # v^-t = (p u^(t+1))^(-t/(1+t)) + 1 - u^-t
        lw = -t / (1 + t) * (np.log(p) + (t + 1) * np.log(u))
        lu = -t * np.log(u)
        with np.errstate(over="ignore"):
            arg = np.exp(lw) - np.expm1(lu)
        return np.exp(-np.log(arg) / t)

    def tau(self):
        return self.theta / (self.theta + 2.0)

    @classmethod
    def from_tau(cls, tau):
        if not 0 < tau < 1:
            raise ParameterError("clayton needs tau in (0, 1)")
        return cls(2 * tau / (1 - tau))


@dataclass(frozen=True, repr=False)
class Gumbel(BivariateCopula):
    theta: float
    family = "gumbel"
    n_params = 1

    def __post_init__(self):
        if not self.theta >= 1:
            raise ParameterError("gumbel theta must be >= 1")

    def params(self):
        return {"theta": self.theta}

    def _parts(self, u, v):
        t = self.theta
        x, y = -np.log(u), -np.log(v)
        a = np.exp(np.logaddexp(t * np.log(x), t * np.log(y)) / t)
        return x, y, a

    def _cdf(self, u, v):
        return np.exp(-self._parts(u, v)[2])

    def _logpdf(self, u, v):
        t = self.theta
        x, y, a = self._parts(u, v)
        return (-a + x + y + (t - 1) * (np.log(x) + np.log(y))
                + (1 - 2 * t) * np.log(a) + np.log(a + t - 1))

    def _h1(self, u, v):
        t = self.theta
        x, y, a = self._parts(u, v)
        return np.exp(-a + x + (1 - t) * np.log(a) + (t - 1) * np.log(x))

    def tau(self):
        return 1.0 - 1.0 / self.theta

    @classmethod
    def from_tau(cls, tau):
        if not 0 <= tau < 1:
            raise ParameterError("gumbel needs tau in [0, 1)")
        return cls(1.0 / (1.0 - tau))


@dataclass(frozen=True, repr=False)
class Joe(BivariateCopula):
    theta: float
    family = "joe"
    n_params = 1

    def __post_init__(self):
        if not self.theta >= 1:
            raise ParameterError("joe theta must be >= 1")

    def params(self):
        return {"theta": self.theta}

    def _parts(self, u, v):
        t = self.theta
        a = np.exp(t * np.log1p(-u))
        b = np.exp(t * np.log1p(-v))
        return a, b, a + b - a * b

    def _cdf(self, u, v):
        s = self._parts(u, v)[2]
        return 1.0 - s ** (1.0 / self.theta)

    def _logpdf(self, u, v):
        t = self.theta
        a, b, s = self._parts(u, v)
        return ((1 / t - 2) * np.log(s) + (t - 1) * (np.log1p(-u) + np.log1p(-v))
                + np.log(t - 1 + s))

    def _h1(self, u, v):
        t = self.theta
        a, b, s = self._parts(u, v)
        return np.exp((1 / t - 1) * np.log(s) + (t - 1) * np.log1p(-u)) * (1 - b)

    def tau(self):
        return joe_tau(self.theta)

    @classmethod
    def from_tau(cls, tau):
        return cls(joe_tau_inverse(tau))


# ----------------------------------------------------------------------
# structural constructions
# ----------------------------------------------------------------------
@dataclass(frozen=True, repr=False)
class Rotated(BivariateCopula):
    """Rotation of ``base``.

    ``C90(u,v) = v - C(1-u,v)``, ``C180(u,v) = u+v-1+C(1-u,1-v)`` and
    ``C270(u,v) = u - C(u,1-v)``; densities follow by reflecting arguments.
    """

    base: BivariateCopula
    angle: int
    family = "rotate"

    def __post_init__(self):
        if self.angle not in (0, 90, 180, 270):
            raise ParameterError("rotation angle must be 0, 90, 180 or 270")

    @property
    def exchangeable(self):
        return self.base.exchangeable and self.angle in (0, 180)

    @property
    def analytic_cdf(self):
        return self.base.analytic_cdf

    @property
    def n_params(self):
        return self.base.n_params

    def params(self):
        return {"angle": self.angle}

    def to_dict(self):
        return {"family": "rotate", "params": {"angle": self.angle},
                "base": self.base.to_dict()}

    def __repr__(self):
        return f"Rotated({self.base!r}, {self.angle})"

    def _cdf(self, u, v):
        c, a = self.base._cdf, self.angle
        if a == 0:
            return c(u, v)
        if a == 90:
            return v - c(1 - u, v)
        if a == 180:
            return u + v - 1 + c(1 - u, 1 - v)
        return u - c(u, 1 - v)

    def _reflect(self, u, v):
        a = self.angle
        if a == 0:
            return u, v
        if a == 90:
            return 1 - u, v
        if a == 180:
            return 1 - u, 1 - v
        return u, 1 - v

    def _logpdf(self, u, v):
        return self.base._logpdf(*self._reflect(u, v))

    def _h1(self, u, v):
        b, a = self.base, self.angle
        if a == 0:
            return b._h1(u, v)
        if a == 90:
            return b._h1(1 - u, v)
        if a == 180:
            return 1 - b._h1(1 - u, 1 - v)
        return 1 - b._h1(u, 1 - v)

    def _h2(self, u, v):
        b, a = self.base, self.angle
        if a == 0:
            return b._h2(u, v)
        if a == 90:
            return 1 - b._h2(1 - u, v)
        if a == 180:
            return 1 - b._h2(1 - u, 1 - v)
        return b._h2(u, 1 - v)

    def _h1_inv(self, u, p):
        b, a = self.base, self.angle
        if a == 0:
            return b._h1_inv(u, p)
        if a == 90:
            return b._h1_inv(1 - u, p)
        if a == 180:
            return 1 - b._h1_inv(1 - u, 1 - p)
        return 1 - b._h1_inv(u, 1 - p)

    def _h2_inv(self, p, v):
        b, a = self.base, self.angle
        if a == 0:
            return b._h2_inv(p, v)
        if a == 90:
            return 1 - b._h2_inv(1 - p, v)
        if a == 180:
            return 1 - b._h2_inv(1 - p, 1 - v)
        return b._h2_inv(p, 1 - v)

    def tau(self):
        t = self.base.tau()
        return t if self.angle in (0, 180) else -t


@dataclass(frozen=True, repr=False)
class Mixture(BivariateCopula):
    """Finite mixture of copulas with nonnegative weights summing to one."""

    components: tuple
    weights: tuple
    family = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.components) != len(self.weights) or not self.components:
            raise ParameterError("mixture needs one weight per component")
        w = np.asarray(self.weights)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise ParameterError("mixture weights must be nonnegative and sum to 1")

    @property
    def exchangeable(self):
        return all(c.exchangeable for c in self.components)

    @property
    def analytic_cdf(self):
        return all(c.analytic_cdf for c in self.components)

    def params(self):
        return {"weights": list(self.weights)}

    def to_dict(self):
        return {"family": "mixture", "params": {"weights": list(self.weights)},
                "components": [c.to_dict() for c in self.components]}

    def __repr__(self):
        return f"Mixture({list(self.components)!r}, {list(self.weights)!r})"

    def _sum(self, name, u, v):
        return sum(w * getattr(c, name)(u, v)
                   for c, w in zip(self.components, self.weights) if w > 0)

    def _cdf(self, u, v):
        return self._sum("_cdf", u, v)

    def _logpdf(self, u, v):
        logs = self._reflected_t_logs(u, v)
        if logs is None:
            logs = [np.log(w) + c._logpdf(u, v)
                    for c, w in zip(self.components, self.weights) if w > 0]
        return special.logsumexp(np.stack(logs), axis=0)

    def _reflected_t_logs(self, u, v):
        # reflections of one t copula share quantiles up to sign
        bases = [c.base if isinstance(c, Rotated) else c for c in self.components]
        b = bases[0]
        if not (isinstance(b, StudentT) and all(x == b for x in bases)):
            return None
        x, y = t_quantile(b.nu, u), t_quantile(b.nu, v)
        signs = {0: (1, 1), 90: (-1, 1), 180: (-1, -1), 270: (1, -1)}
        logs = []
        for c, w in zip(self.components, self.weights):
            if w > 0:
                sx, sy = signs[c.angle if isinstance(c, Rotated) else 0]
                logs.append(np.log(w) + b._logpdf_q(sx * x, sy * y))
        return logs

    def _h1(self, u, v):
        return self._sum("_h1", u, v)

    def _h2(self, u, v):
        return self._sum("_h2", u, v)

    def _h2_inv(self, p, v):
        return monotone_root(lambda u: self._h2(_clip(u), v), p, 0.0, 1.0,
                             deriv=lambda u: self._pdf_raw(_clip(u), v))

    def _sample(self, n, rng):
        idx = rng.choice(len(self.components), size=n, p=np.asarray(self.weights))
        out = np.empty((n, 2))
        for k, c in enumerate(self.components):
            sel = idx == k
            if sel.any():
                out[sel] = c._sample(int(sel.sum()), rng)
        return out

    def tau(self):
        raise NotImplementedError("no closed-form Kendall tau for mixtures")


def rotations_mixture(base, weights=(0.25, 0.25, 0.25, 0.25)):
    """Mixture of ``base`` and its 90, 180 and 270 degree rotations."""
    comps = (base, Rotated(base, 90), Rotated(base, 180), Rotated(base, 270))
    return Mixture(comps, weights)


_KHOUDRAJI_BASES = ("independence", "clayton", "gumbel", "joe")


def _khoudraji_ok(c):
    if isinstance(c, Rotated):
        return _khoudraji_ok(c.base)
    return c.family in _KHOUDRAJI_BASES


@dataclass(frozen=True, repr=False)
class Khoudraji(BivariateCopula):
    """Khoudraji asymmetrisation with the independence copula as second factor.

    ``C(u, v) = C_A(u**(1-a1), v**(1-a2)) * u**a1 * v**a2``.
    """

    base: BivariateCopula
    a1: float
    a2: float
    family = "khoudraji"

    def __post_init__(self):
        if not (0 <= self.a1 <= 1 and 0 <= self.a2 <= 1):
            raise ParameterError("khoudraji exponents must lie in [0, 1]")
        if not _khoudraji_ok(self.base):
            raise ParameterError(
                "khoudraji construction needs a base with analytic cdf and "
                f"h-functions (clayton, gumbel, joe, independence); got {self.base.family}")

    @property
    def exchangeable(self):
        return self.a1 == self.a2 and self.base.exchangeable

    @property
    def n_params(self):
        return self.base.n_params + 2

    def params(self):
        return {"a1": self.a1, "a2": self.a2}

    def to_dict(self):
        return {"family": "khoudraji", "params": {"a1": self.a1, "a2": self.a2},
                "base": self.base.to_dict()}

    def __repr__(self):
        return f"Khoudraji({self.base!r}, a1={self.a1!r}, a2={self.a2!r})"

    def _args(self, u, v):
        return u ** (1 - self.a1), v ** (1 - self.a2)

    def _cdf(self, u, v):
        p, q = self._args(u, v)
        return self.base._cdf(p, q) * u ** self.a1 * v ** self.a2

    def _logpdf(self, u, v):
        a1, a2, b = self.a1, self.a2, self.base
        p, q = self._args(u, v)
        p, q = _clip(p), _clip(q)
        ca = b._cdf(p, q)
        dens = ((1 - a1) * (1 - a2) * b._pdf_raw(p, q)
                + (1 - a1) * a2 * v ** (a2 - 1) * b._h1(p, q)
                + a1 * (1 - a2) * u ** (a1 - 1) * b._h2(p, q)
                + a1 * a2 * u ** (a1 - 1) * v ** (a2 - 1) * ca)
        with np.errstate(divide="ignore"):
            return np.log(dens)

    def _h1(self, u, v):
        a1, a2, b = self.a1, self.a2, self.base
        p, q = self._args(u, v)
        p, q = _clip(p), _clip(q)
        return v ** a2 * ((1 - a1) * b._h1(p, q) + a1 * u ** (a1 - 1) * b._cdf(p, q))

    def _h2(self, u, v):
        a1, a2, b = self.a1, self.a2, self.base
        p, q = self._args(u, v)
        p, q = _clip(p), _clip(q)
        return u ** a1 * ((1 - a2) * b._h2(p, q) + a2 * v ** (a2 - 1) * b._cdf(p, q))

    def tau(self):
        raise NotImplementedError("no closed-form Kendall tau for Khoudraji copulas")


# ----------------------------------------------------------------------
# cdf by quadrature
# ----------------------------------------------------------------------
def _cdf_by_conditional_law(cop, u, v, n=CDF_NODES):
    """``C(u,v)`` as the integral of ``h1(s, v)`` over ``s``.

    Integrates over the shorter of [0, u] and [u, 1]; a cubic change of
    variable clusters nodes at the outer endpoint, where ``h1`` behaves
    like a fractional power.
    """
    x, w = gauss_legendre(n)
    u = np.asarray(u, dtype=float)[..., None]
    v = np.asarray(v, dtype=float)[..., None]
    low = u <= 0.5
    span = np.where(low, u, 1.0 - u)
    t = x ** 3
    jac = 3.0 * x ** 2 * w
    s = np.where(low, span * t, 1.0 - span * t)
    vals = cop._h1(_clip(s), _clip(v * np.ones_like(s)))
    part = span[..., 0] * np.sum(vals * jac, axis=-1)
    v0 = v[..., 0]
    return np.where(low[..., 0], part, v0 - part)


def _radial_survival(nu, r):
    # P(R > r) for the radius of a standard bivariate spherical t vector
    with np.errstate(over="ignore"):
        return np.exp(-0.5 * nu * np.log1p(r * r / nu))


def _spherical_quadrant(nu, a, b, n=CDF_NODES):
    """P(T1 <= -a, T2 <= -b) for a, b >= 0 by the radial/angular representation.

    A ray at angle ``phi`` into the third quadrant meets the region once
    the radius exceeds ``max(a/cos(phi), b/sin(phi))``; the angular
    integral is split at the kink ``atan2(b, a)``.
    """
    x, w = gauss_legendre(n)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    kink = np.arctan2(b, a)
    # quadratic clustering towards phi = 0 and phi = pi/2
    t = x ** 2
    jac = 2.0 * x * w
    phi1 = kink * t
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(phi1 > 0, b / np.sin(phi1), np.inf)
        r1 = np.where(b == 0, 0.0, r1)
    part1 = kink[..., 0] * np.sum(_radial_survival(nu, r1) * jac, axis=-1)
    width = 0.5 * np.pi - kink
    phi2 = 0.5 * np.pi - width * t
    with np.errstate(divide="ignore", invalid="ignore"):
        cphi = np.cos(phi2)
        r2 = np.where(cphi > 0, a / cphi, np.inf)
        r2 = np.where(a == 0, 0.0, r2)
    part2 = width[..., 0] * np.sum(_radial_survival(nu, r2) * jac, axis=-1)
    return (part1 + part2) / (2.0 * np.pi)


def spherical_t_cdf_radial(nu, u, v, n=CDF_NODES):
    """Spherical t copula cdf for any real ``nu > 0``.

    Reduces to the third quadrant by v- and h-symmetry and evaluates the
    one-dimensional radial/angular integral there.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uu = np.minimum(u, 1.0 - u)
    vv = np.minimum(v, 1.0 - v)
    a = -t_quantile(nu, np.clip(uu, EPS, 0.5))
    b = -t_quantile(nu, np.clip(vv, EPS, 0.5))
    a = np.maximum(a, 0.0)
    b = np.maximum(b, 0.0)
    c = _spherical_quadrant(nu, a, b, n)
    c = np.where((uu <= 0) | (vv <= 0), 0.0, c)
    # undo reflections: C(u,v) = v - C(1-u,v) and C(u,v) = u - C(u,1-v)
    flip_u = u > 0.5
    flip_v = v > 0.5
    out = np.where(flip_u & ~flip_v, vv - c, c)
    out = np.where(~flip_u & flip_v, uu - c, out)
    out = np.where(flip_u & flip_v, u + v - 1.0 + c, out)
    return out


# ----------------------------------------------------------------------
# Kendall's tau
# ----------------------------------------------------------------------
def _tau_ast_quadrature(nu, n):
    # 64 * int_{[0,1/2]^2} C c du dv - 1 in polar coordinates of the third
    # quadrant: with s = P(R > r) the density weight becomes ds dtheta / (2 pi)
    # and s = 1 - w^2 removes the square-root behaviour at r = 0.
    xw, ww = gauss_legendre(n)
    xt, wt = gauss_legendre(n)
    theta = 0.5 * np.pi * xt
    wtheta = 0.5 * np.pi * wt
    s = 1.0 - xw ** 2
    ws = 2.0 * xw * ww
    with np.errstate(divide="ignore", over="ignore"):
        z = -2.0 / nu * np.log(s)
        log_r = 0.5 * np.log(nu) + 0.5 * np.where(z > 30, z, np.log(np.expm1(np.maximum(z, 1e-300))))
        r = np.exp(log_r)
    r = r[:, None]
    a = r * np.cos(theta)[None, :]
    b = r * np.sin(theta)[None, :]
    c = _spherical_quadrant(nu, a, b, n=max(64, n))
    integral = np.sum(c * ws[:, None] * wtheta[None, :]) / (2.0 * np.pi)
    return 64.0 * integral - 1.0


def kendall_tau_ast(nu, tol=1e-7):
    """Kendall's tau of the absolute spherical t copula.

    Evaluates ``64 * int_{[0,0.5]^2} C_t c_t du dv - 1`` with nested
    Gauss-Legendre rules, doubling the order until successive values agree
    to ``tol``.
    """
    if not nu > 0:
        raise ParameterError("nu must be positive")
    n = 32
    prev = _tau_ast_quadrature(nu, n)
    while n < 512:
        n *= 2
        cur = _tau_ast_quadrature(nu, n)
        if abs(cur - prev) < tol:
            return float(cur)
        prev = cur
    warnings.warn(f"kendall_tau_ast: quadrature tolerance not reached at nu={nu}")
    return float(cur)


def kendall_tau_ast_inverse(tau, tol=1e-4):
    """Degrees of freedom of the absolute spherical t copula with Kendall tau ``tau``."""
    from scipy.optimize import brentq
    if not 0.001 < tau < 0.999:
        raise ParameterError("tau must lie in (0.001, 0.999)")
    g = lambda lnu: kendall_tau_ast(np.exp(lnu), tol=1e-6) - tau
    lo, hi = -2.0, 2.0
    while g(lo) < 0:
        lo -= 2.0
        if lo < -12:
            raise ConvergenceError("tau too close to one")
    while g(hi) > 0:
        hi += 2.0
        if hi > 25:
            raise ConvergenceError("tau too close to zero")
    return float(np.exp(brentq(g, lo, hi, xtol=tol)))


def joe_tau(theta):
    """Kendall's tau of the Joe copula, ``1 + 4 int_0^1 phi/phi' dt``."""
    if theta < 1:
        raise ParameterError("joe theta must be >= 1")
    if theta == 1:
        return 0.0

    def ratio(t):
        s = 1.0 - t
        st = s ** theta
        return np.log1p(-st) * (1.0 - st) / (theta * s ** (theta - 1))

    val, _ = integrate.quad(ratio, 0.0, 1.0, limit=200, epsabs=1e-13)
    return 1.0 + 4.0 * val


def joe_tau_inverse(tau):
    """Joe parameter with Kendall tau ``tau`` by bisection on [1, 100]."""
    from scipy.optimize import brentq
    if not 0 <= tau < 1:
        raise ParameterError("joe needs tau in [0, 1)")
    if tau == 0:
        return 1.0
    if joe_tau(100.0) < tau:
        raise ParameterError("tau beyond the supported Joe range (theta <= 100)")
    return float(brentq(lambda t: joe_tau(t) - tau, 1.0, 100.0, xtol=1e-12))


# ----------------------------------------------------------------------
# JSON specifications
# ----------------------------------------------------------------------
_FAMILIES = {
    "independence": lambda p: Independence(),
    "gaussian": lambda p: Gaussian(p["rho"]),
    "student_t": lambda p: StudentT(p["rho"], p["nu"]),
    "spherical_t": lambda p: SphericalT(p["nu"]),
    "abs_spherical_t": lambda p: AbsSphericalT(p["nu"]),
    "clayton": lambda p: Clayton(p["theta"]),
    "gumbel": lambda p: Gumbel(p["theta"]),
    "joe": lambda p: Joe(p["theta"]),
}


def copula_from_dict(d):
    """Rebuild a copula from its ``to_dict`` representation."""
    fam = d["family"]
    p = d.get("params", {})
    if fam in _FAMILIES:
        return _FAMILIES[fam](p)
    if fam == "rotate":
        return Rotated(copula_from_dict(d["base"]), int(p["angle"]))
    if fam == "mixture":
        return Mixture([copula_from_dict(c) for c in d["components"]], p["weights"])
    if fam == "khoudraji":
        return Khoudraji(copula_from_dict(d["base"]), p["a1"], p["a2"])
    if fam == "vt":
        from .vtcopula import VtCopula
        return VtCopula.from_dict(d)
    if fam == "linear_vt":
        from .vtcopula import LinearVtCopula
        return LinearVtCopula.from_dict(d)
    raise ValueError(f"unknown copula family {fam!r}")
