"""V-transforms: uniformity-preserving v-shaped maps of the unit interval.

A v-transform with fulcrum ``delta`` and generator ``psi`` is

    V(u) = (1 - u) - (1 - delta) * psi(u / delta)              u <= delta
    V(u) = u - delta * psi^{-1}((1 - u) / (1 - delta))         u >  delta

``psi`` is a continuous, strictly increasing distribution function on
[0, 1].  The uniform generator gives the linear v-transform and
``psi(x) = x**kappa`` the two-parameter power family.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._numerics import monotone_root

__all__ = ["VTransform", "linear", "power", "custom", "symmetric"]

_FD_STEP = 1e-7


@dataclass(frozen=True)
class VTransform:
    """Immutable v-transform.

    Parameters
    ----------
    fulcrum : float
        Point in (0, 1) mapped to zero.
    kind : {'linear', 'power', 'custom'}
        Generator family.
    kappa : float
        Exponent of the power generator (ignored otherwise).
    grid, psi_values : tuple of float
        Samples of a custom generator; must start at (0, 0), end at (1, 1)
        and be strictly increasing.
    """

    fulcrum: float
    kind: str = "linear"
    kappa: float = 1.0
    grid: tuple = field(default=(), repr=False)
    psi_values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not 0.0 < self.fulcrum < 1.0:
            raise ValueError("fulcrum must lie in the open interval (0, 1)")
        if self.kind not in ("linear", "power", "custom"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == "power" and not self.kappa > 0:
            raise ValueError("power generator needs kappa > 0")
        if self.kind == "custom":
            x = np.asarray(self.grid, dtype=float)
            p = np.asarray(self.psi_values, dtype=float)
            if x.shape != p.shape or x.size < 2:
                raise ValueError("custom generator needs matching grid and values")
            if x[0] != 0 or x[-1] != 1 or p[0] != 0 or p[-1] != 1:
                raise ValueError("custom generator must run from (0, 0) to (1, 1)")
            if np.any(np.diff(x) <= 0) or np.any(np.diff(p) <= 0):
                raise ValueError("custom generator must be strictly increasing")
            object.__setattr__(self, "_pchip", PchipInterpolator(x, p))

    # -- generator -----------------------------------------------------
    def _psi(self, x):
        if self.kind == "linear":
            return x
        if self.kind == "power":
            return x ** self.kappa
        return np.clip(self._pchip(x), 0.0, 1.0)

    def _psi_inv(self, p):
        if self.kind == "linear":
            return p
        if self.kind == "power":
            return p ** (1.0 / self.kappa)
        return monotone_root(self._psi, p, 0.0, 1.0, xtol=1e-15)

    @property
    def is_linear(self):
        return self.kind == "linear"

    @property
    def is_symmetric(self):
        return self.kind == "linear" and self.fulcrum == 0.5

    # -- evaluation ----------------------------------------------------
    def __call__(self, u):
        """Evaluate the v-transform; raises ``ValueError`` outside [0, 1]."""
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
            raise ValueError("v-transform argument must lie in [0, 1]")
        return self._eval(u)

    def _eval(self, u):
        d = self.fulcrum
        left = u <= d
        if self.kind == "linear":
            out = np.where(left, (d - u) / d, (u - d) / (1.0 - d))
        else:
            ul = np.where(left, u, d)
            ur = np.where(left, 1.0, u)
            vl = (1.0 - ul) - (1.0 - d) * self._psi(ul / d)
            vr = ur - d * self._psi_inv((1.0 - ur) / (1.0 - d))
            out = np.where(left, vl, vr)
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def derivative(self, u):
        """Derivative of the v-transform (one-sided at the fulcrum)."""
        u = np.asarray(u, dtype=float)
        d = self.fulcrum
        left = u <= d
        if self.kind == "linear":
            out = np.where(left, -1.0 / d, 1.0 / (1.0 - d))
        elif self.kind == "power":
            k = self.kappa
            with np.errstate(divide="ignore", invalid="ignore"):
                dl = -1.0 - (1.0 - d) * k / d * (np.where(left, u, d) / d) ** (k - 1.0)
                z = (1.0 - np.where(left, d, u)) / (1.0 - d)
                dr = 1.0 + d / (k * (1.0 - d)) * z ** (1.0 / k - 1.0)
            out = np.where(left, dl, dr)
        else:
            h = _FD_STEP
            lo = np.where(left, np.clip(u - h, 0.0, d), np.clip(u - h, d, 1.0))
            hi = np.where(left, np.clip(u + h, 0.0, d), np.clip(u + h, d, 1.0))
            out = (self._eval(hi) - self._eval(lo)) / (hi - lo)
        return out if out.ndim else float(out)

    def partial_inverse(self, y):
        """Left-branch solution ``u <= fulcrum`` of ``V(u) = y``.

        The right-branch solution is ``partial_inverse(y) + y``.
        """
        y = np.asarray(y, dtype=float)
        if np.any((y < 0) | (y > 1)) or np.any(np.isnan(y)):
            raise ValueError("argument must lie in [0, 1]")
        d = self.fulcrum
        if self.kind == "linear":
            out = d * (1.0 - y)
        else:
            deriv = self.derivative if self.kind == "power" else None
            out = monotone_root(self._eval, y, 0.0, d, deriv=deriv,
                                increasing=False, xtol=1e-15)
            out = np.clip(out, 0.0, d)
        return out if out.ndim else float(out)

    def delta(self, y):
        """Probability of the left branch given ``V(U) = y``."""
        y = np.asarray(y, dtype=float)
        if self.kind == "linear":
            out = np.full(y.shape, self.fulcrum)
        else:
            with np.errstate(divide="ignore"):
                out = -1.0 / self.derivative(self.partial_inverse(y))
            out = np.clip(np.nan_to_num(out, nan=0.0), 0.0, 1.0)
        return out if out.ndim else float(out)

    def stochastic_inverse(self, y, coin):
        """Randomised inverse driven by an externally supplied uniform ``coin``.

        Returns the left root when ``coin <= delta(y)`` and the right root
        otherwise; ``y = 0`` maps to the fulcrum.
        """
        y, coin = np.broadcast_arrays(np.asarray(y, dtype=float),
                                      np.asarray(coin, dtype=float))
        if np.any((coin < 0) | (coin > 1)):
            raise ValueError("coin must lie in [0, 1]")
        left = self.partial_inverse(y)
        out = np.where(coin <= self.delta(y), left, left + y)
        out = np.where(y == 0, self.fulcrum, out)
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def sample_inverse(self, y, rng):
        """Stochastic inverse with coins drawn from ``rng``."""
        y = np.asarray(y, dtype=float)
        return self.stochastic_inverse(y, rng.random(y.shape))

    # -- serialisation -------------------------------------------------
    def to_dict(self):
        out = {"fulcrum": self.fulcrum, "kind": self.kind}
        if self.kind == "power":
            out["kappa"] = self.kappa
        if self.kind == "custom":
            out["grid"] = list(self.grid)
            out["psi"] = list(self.psi_values)
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(fulcrum=float(d["fulcrum"]), kind=d.get("kind", "linear"),
                   kappa=float(d.get("kappa", 1.0)),
                   grid=tuple(d.get("grid", ())), psi_values=tuple(d.get("psi", ())))


def linear(fulcrum=0.5):
    """Linear v-transform; ``linear(0.5)`` is ``|2u - 1|``."""
    return VTransform(fulcrum)


def symmetric():
    return VTransform(0.5)


def power(fulcrum, kappa):
    """Two-parameter v-transform with generator ``x**kappa``."""
    return VTransform(fulcrum, kind="power", kappa=kappa)


def custom(fulcrum, grid, psi_values):
    """V-transform whose generator is the monotone cubic interpolant of samples."""
    return VTransform(fulcrum, kind="custom", grid=tuple(map(float, grid)),
                      psi_values=tuple(map(float, psi_values)))
