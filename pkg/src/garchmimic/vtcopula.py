"""Copulas obtained by passing a base copula through v-transforms.

If ``(U, V)`` has copula ``C*`` then

* the *inverse* construction takes stochastic inverses of both
  coordinates and has density ``c*(V1(u), V2(v))``;
* the *forward* construction takes ``(V1(U), V2(V))`` and has density
  ``sum Δ-weights * c*(preimages)`` over the four branch combinations.

For two linear v-transforms the inverse construction has closed-form
cdf, h-functions and inverse h-functions (``LinearVtCopula``), which is
what d-vine models require.
"""
import numpy as np

from .copulas import BivariateCopula, ParameterError, _clip, _prep, _ret, copula_from_dict
from .vtransform import VTransform, linear

__all__ = [
    "VtCopula", "LinearVtCopula", "inverse_vt", "forward_vt",
    "pdf_inverse_vt", "pdf_forward_vt", "sample_inverse_vt",
    "linear_vt_cdf", "linear_vt_h1", "linear_vt_h2", "linear_vt_h1_inv", "linear_vt_h2_inv",
]


class VtCopula(BivariateCopula):
    """Base copula composed with two v-transforms.

    Parameters
    ----------
    base : BivariateCopula
    vt1, vt2 : VTransform
        Transforms applied to the first and second argument.
    direction : {'inverse', 'forward'}
    """

    family = "vt"
    analytic_cdf = False

    def __init__(self, base, vt1, vt2, direction="inverse"):
        if direction not in ("inverse", "forward"):
            raise ValueError("direction must be 'inverse' or 'forward'")
        if not isinstance(vt1, VTransform) or not isinstance(vt2, VTransform):
            raise TypeError("vt1 and vt2 must be VTransform instances")
        self.base = base
        self.vt1 = vt1
        self.vt2 = vt2
        self.direction = direction

    @property
    def exchangeable(self):
        return self.vt1 == self.vt2 and self.base.exchangeable

    @property
    def n_params(self):
        return self.base.n_params

    def __eq__(self, other):
        return (type(self) is type(other) and self.base == other.base
                and self.vt1 == other.vt1 and self.vt2 == other.vt2
                and self.direction == other.direction)

    def __hash__(self):
        return hash((type(self), self.direction, self.vt1, self.vt2))

    def __repr__(self):
        return f"{type(self).__name__}({self.base!r}, {self.vt1!r}, {self.vt2!r}, {self.direction!r})"

    def params(self):
        return {"direction": self.direction}

    def to_dict(self):
        return {"family": "vt", "params": {"direction": self.direction},
                "vt1": self.vt1.to_dict(), "vt2": self.vt2.to_dict(),
                "base": self.base.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(copula_from_dict(d["base"]), VTransform.from_dict(d["vt1"]),
                   VTransform.from_dict(d["vt2"]), d["params"]["direction"])

    # -- density -------------------------------------------------------
    def _logpdf(self, u, v):
        if self.direction == "inverse":
            return self.base._logpdf(_clip(self.vt1._eval(u)), _clip(self.vt2._eval(v)))
        return np.log(self._forward_pdf(u, v))

    def _forward_pdf(self, u, v):
        a1, a2 = self.vt1, self.vt2
        l1 = a1.partial_inverse(u)
        l2 = a2.partial_inverse(v)
        d1 = a1.delta(u)
        d2 = a2.delta(v)
        r1, r2 = l1 + u, l2 + v
        b = self.base._pdf_raw
        l1, l2, r1, r2 = _clip(l1), _clip(l2), _clip(r1), _clip(r2)
        return (d1 * d2 * b(l1, l2) + d1 * (1 - d2) * b(l1, r2)
                + (1 - d1) * d2 * b(r1, l2) + (1 - d1) * (1 - d2) * b(r1, r2))

    # -- unavailable in general ----------------------------------------
    def _cdf(self, u, v):
        raise NotImplementedError("cdf is only available for inverse constructions "
                                  "with two linear v-transforms")

    def _h1(self, u, v):
        raise NotImplementedError("h-functions are only available for inverse "
                                  "constructions with two linear v-transforms")

    _h2 = _h1

    def _h1_inv(self, u, p):
        raise NotImplementedError("inverse h-functions are only available for inverse "
                                  "constructions with two linear v-transforms")

    def _h2_inv(self, p, v):
        return self._h1_inv(v, p)

    # -- sampling ------------------------------------------------------
    def _sample(self, n, rng):
        # base draws first, then one coin per coordinate
        xy = self.base._sample(n, rng)
        if self.direction == "forward":
            return np.column_stack([self.vt1._eval(xy[:, 0]), self.vt2._eval(xy[:, 1])])
        coins = rng.random((n, 2))
        return np.column_stack([self.vt1.stochastic_inverse(xy[:, 0], coins[:, 0]),
                                self.vt2.stochastic_inverse(xy[:, 1], coins[:, 1])])


class LinearVtCopula(VtCopula):
    """Inverse-v-transformed copula with linear v-transforms of fulcrums ``delta1``, ``delta2``.

    Closed forms, with ``s1 = delta1`` for ``u <= delta1`` and ``delta1 - 1``
    otherwise (``s2`` likewise in ``v``)::

        C(u, v)  = s1 s2 C*(V1(u), V2(v)) + delta1 v + delta2 u - delta1 delta2
        h1(u, v) = delta2 - s2 h1*(V1(u), V2(v))
        h2(u, v) = delta1 - s1 h2*(V1(u), V2(v))
    """

    family = "linear_vt"
    analytic_cdf = True

    def __init__(self, base, delta1=0.5, delta2=0.5):
        if not (0 < delta1 < 1 and 0 < delta2 < 1):
            raise ParameterError("fulcrums must lie in (0, 1)")
        super().__init__(base, linear(delta1), linear(delta2), "inverse")
        self.delta1 = float(delta1)
        self.delta2 = float(delta2)

    def __repr__(self):
        return f"LinearVtCopula({self.base!r}, delta1={self.delta1!r}, delta2={self.delta2!r})"

    def params(self):
        return {"delta1": self.delta1, "delta2": self.delta2}

    def to_dict(self):
        return {"family": "linear_vt", "params": self.params(), "base": self.base.to_dict()}

    @classmethod
    def from_dict(cls, d):
        p = d["params"]
        return cls(copula_from_dict(d["base"]), p["delta1"], p["delta2"])

    def _v1(self, u):
        d = self.delta1
        return _clip(np.where(u <= d, (d - u) / d, (u - d) / (1 - d)))

    def _v2(self, v):
        d = self.delta2
        return _clip(np.where(v <= d, (d - v) / d, (v - d) / (1 - d)))

    def _cdf(self, u, v):
        d1, d2 = self.delta1, self.delta2
        s1 = np.where(u <= d1, d1, d1 - 1)
        s2 = np.where(v <= d2, d2, d2 - 1)
        return s1 * s2 * self.base._cdf(self._v1(u), self._v2(v)) + d1 * v + d2 * u - d1 * d2

    def _logpdf(self, u, v):
        return self.base._logpdf(self._v1(u), self._v2(v))

    def _h1(self, u, v):
        d2 = self.delta2
        s2 = np.where(v <= d2, d2, d2 - 1)
        return d2 - s2 * self.base._h1(self._v1(u), self._v2(v))

    def _h2(self, u, v):
        d1 = self.delta1
        s1 = np.where(u <= d1, d1, d1 - 1)
        return d1 - s1 * self.base._h2(self._v1(u), self._v2(v))

    def _h1_inv(self, u, p):
        # V(h1; delta2) = h1*(V1(u), V2(v)) and h1 <= delta2 exactly when v <= delta2
        d2 = self.delta2
        left = p <= d2
        y = _clip(np.where(left, (d2 - p) / d2, (p - d2) / (1 - d2)))
        w = self.base._h1_inv(self._v1(u), y)
        return np.where(left, d2 * (1 - w), d2 + w * (1 - d2))

    def _h2_inv(self, p, v):
        d1 = self.delta1
        left = p <= d1
        y = _clip(np.where(left, (d1 - p) / d1, (p - d1) / (1 - d1)))
        w = self.base._h2_inv(y, self._v2(v))
        return np.where(left, d1 * (1 - w), d1 + w * (1 - d1))

    def _sample(self, n, rng):
        return BivariateCopula._sample(self, n, rng)


def inverse_vt(base, vt1, vt2):
    """Inverse-v-transformed copula; closed forms are used for linear transforms."""
    if vt1.is_linear and vt2.is_linear:
        return LinearVtCopula(base, vt1.fulcrum, vt2.fulcrum)
    return VtCopula(base, vt1, vt2, "inverse")


def forward_vt(base, vt1, vt2):
    """Copula of ``(V1(U), V2(V))`` when ``(U, V)`` has copula ``base``."""
    return VtCopula(base, vt1, vt2, "forward")


# -- functional interface ----------------------------------------------
def pdf_inverse_vt(base, vt1, vt2, u, v):
    return VtCopula(base, vt1, vt2, "inverse").pdf(u, v)


def pdf_forward_vt(base, vt1, vt2, u, v):
    return VtCopula(base, vt1, vt2, "forward").pdf(u, v)


def sample_inverse_vt(base, vt1, vt2, n, seed=None):
    return VtCopula(base, vt1, vt2, "inverse").sample(n, seed)


def linear_vt_cdf(base, delta1, delta2, u, v):
    return LinearVtCopula(base, delta1, delta2).cdf(u, v)


def linear_vt_h1(base, delta1, delta2, u, v):
    return LinearVtCopula(base, delta1, delta2).h1(u, v)


def linear_vt_h2(base, delta1, delta2, u, v):
    return LinearVtCopula(base, delta1, delta2).h2(u, v)


def linear_vt_h1_inv(base, delta1, delta2, u, p):
    return LinearVtCopula(base, delta1, delta2).h1_inv(u, p)


def linear_vt_h2_inv(base, delta1, delta2, p, v):
    return LinearVtCopula(base, delta1, delta2).h2_inv(p, v)
