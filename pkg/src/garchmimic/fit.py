"""Pseudo-maximum-likelihood fitting of copula models and AIC comparison."""
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .copulas import (AbsSphericalT, Clayton, Gumbel, Independence, Joe, Khoudraji,
                      Rotated, StudentT, rotations_mixture)
from .vtcopula import LinearVtCopula, VtCopula
from .vtransform import linear, power

__all__ = [
    "Param", "Template", "FitResult", "pseudo_observations", "fit_pml",
    "compare_models", "table_zoo", "template", "format_table",
]

VT_EPS = 1e-12


def pseudo_observations(series, lag=1):
    """Rank-transformed lagged pairs ``(x_t, x_{t+lag})``.

    Each margin is ranked separately and scaled by ``1/(n+1)`` where ``n``
    is the number of pairs.

    Returns
    -------
    numpy.ndarray
        Array of shape ``(n, 2)``.
    """
    x = np.asarray(series, dtype=float).ravel()
    if lag < 1:
        raise ValueError("lag must be at least 1")
    if x.size < lag + 2:
        raise ValueError("series too short for the requested lag")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    a, b = x[:-lag], x[lag:]
    n = a.size
    if np.unique(a).size < n or np.unique(b).size < n:
        warnings.warn("ties in the data are broken by average ranks")
    return np.column_stack([stats.rankdata(a) / (n + 1), stats.rankdata(b) / (n + 1)])


@dataclass(frozen=True)
class Param:
    """Free parameter with an unconstrained reparameterisation.

    ``kind='log'`` maps ``x`` to ``lo + exp(x)``; ``kind='logit'`` maps to
    ``lo + (hi - lo) * expit(x)``.
    """

    name: str
    start: float
    lo: float = 0.0
    hi: float = np.inf
    kind: str = "log"

    def to_natural(self, x):
        if self.kind == "log":
            return self.lo + np.exp(x)
        return self.lo + (self.hi - self.lo) * special.expit(x)

    def to_free(self, t):
        if self.kind == "log":
            return np.log(t - self.lo)
        return special.logit((t - self.lo) / (self.hi - self.lo))


@dataclass(frozen=True)
class Template:
    """Named copula model with free parameters.

    ``build`` maps a sequence of natural-scale parameter values to a copula.
    """

    name: str
    params: tuple
    build: object = field(repr=False)

    @property
    def n_params(self):
        return len(self.params)


@dataclass
class FitResult:
    name: str
    spec: object
    params: dict
    loglik: float
    aic: float
    n_params: int
    converged: bool
    iterations: int
    error: str = ""

    def to_dict(self):
        return {"name": self.name, "n_params": self.n_params, "loglik": self.loglik,
                "aic": self.aic, "params": self.params, "converged": self.converged,
                "iterations": self.iterations,
                "spec": self.spec.to_dict() if self.spec is not None else None}


def _loglik(copula, sample):
    with np.errstate(all="ignore"):
        lp = copula.logpdf(sample[:, 0], sample[:, 1])
    return float(np.sum(lp))


def fit_pml(sample, template, starts=3, xatol=1e-8, fatol=1e-8, maxfev=2000):
    """Maximise the pseudo log-likelihood of ``template`` on ``sample``.

    Nelder-Mead on the unconstrained parameters, restarted from
    ``starts`` deterministic starting points; the best run is kept.

    Parameters
    ----------
    sample : array_like, shape (n, 2)
        Pseudo-observations in (0, 1)^2.
    template : Template

    Returns
    -------
    FitResult
    """
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[1] != 2:
        raise ValueError("sample must have shape (n, 2)")
    if np.any((sample <= 0) | (sample >= 1)):
        raise ValueError("pseudo-observations must lie strictly inside (0, 1)")
    ps = template.params
    if not ps:
        cop = template.build(())
        ll = _loglik(cop, sample)
        return FitResult(template.name, cop, {}, ll, -2 * ll, 0, True, 0)

    def natural(x):
        return [p.to_natural(xi) for p, xi in zip(ps, x)]

    def objective(x):
        try:
            cop = template.build(natural(x))
        except ValueError:
            return 1e300
        ll = _loglik(cop, sample)
        return -ll if np.isfinite(ll) else 1e300

    x0 = np.array([p.to_free(p.start) for p in ps])
    offsets = [0.0, 0.5, -0.5][:max(1, starts)]
    best = None
    total_iter = 0
    for off in offsets:
        res = optimize.minimize(objective, x0 + off, method="Nelder-Mead",
                                options={"xatol": xatol, "fatol": fatol, "maxfev": maxfev,
                                         "adaptive": len(ps) > 2})
        total_iter += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
    theta = natural(best.x)
    k = len(ps)
    try:
        cop = template.build(theta)
    except ValueError as exc:
        # every start stayed in the invalid region
        return FitResult(template.name, None, {p.name: float(t) for p, t in zip(ps, theta)},
                         -np.inf, np.inf, k, False, total_iter, str(exc))
    ll = -float(best.fun)
    converged = bool(best.success) and np.isfinite(ll) and ll > -1e299
    return FitResult(template.name, cop, {p.name: float(t) for p, t in zip(ps, theta)},
                     ll, 2 * k - 2 * ll, k, converged, total_iter)


def compare_models(sample, zoo, max_workers=None, **fit_kw):
    """Fit every template in ``zoo`` and rank by AIC.

    Failures are recorded in the result's ``error`` field rather than raised.

    Returns
    -------
    list of (FitResult, delta_aic)
        Sorted by increasing AIC.
    """
    zoo = list(zoo.values()) if isinstance(zoo, dict) else list(zoo)
    if len(zoo) < 2:
        raise ValueError("compare_models needs at least two models")

    def run(t):
        try:
            return fit_pml(sample, t, **fit_kw)
        except Exception as exc:  # recorded, not fatal
            return FitResult(t.name, None, {}, -np.inf, np.inf, t.n_params, False, 0, repr(exc))

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(run, zoo))
    finite = [r.aic for r in results if np.isfinite(r.aic)]
    best = min(finite) if finite else np.nan
    results.sort(key=lambda r: (not np.isfinite(r.aic), r.aic))
    return [(r, r.aic - best) for r in results]


def format_table(rows):
    """Aligned text rendering of ``compare_models`` output."""
    lines = [f"{'model':<22}{'p':>3}{'loglik':>14}{'aic':>14}{'delta':>10}  params"]
    for r, d in rows:
        ps = ", ".join(f"{k}={v:.4g}" for k, v in r.params.items())
        lines.append(f"{r.name:<22}{r.n_params:>3}{r.loglik:>14.2f}{r.aic:>14.2f}{d:>10.2f}  {ps}")
    return "\n".join(lines)


# ----------------------------------------------------------------------
# templates
# ----------------------------------------------------------------------
_BASES = {
    "ast": ((Param("nu", 3.0),), lambda t: AbsSphericalT(t[0])),
    "Clayton-180": ((Param("theta", 1.0),), lambda t: Rotated(Clayton(t[0]), 180)),
    "Clayton": ((Param("theta", 1.0),), lambda t: Clayton(t[0])),
    "Gumbel": ((Param("theta", 1.5, lo=1.0),), lambda t: Gumbel(t[0])),
    "Joe": ((Param("theta", 1.5, lo=1.0),), lambda t: Joe(t[0])),
    "t": ((Param("rho", 0.3, 0.0, 0.99, "logit"), Param("nu", 4.0)),
          lambda t: StudentT(t[0], t[1])),
}


def _khoudraji(base):
    if base not in _BASES:
        raise ValueError(f"unknown base copula {base!r}")
    ps, build = _BASES[base]
    extra = (Param("a1", 0.1, 0.0, 1.0, "logit"), Param("a2", 0.1, 0.0, 1.0, "logit"))
    k = len(ps)
    return ps + extra, lambda t: Khoudraji(build(t[:k]), t[k], t[k + 1])


def _base(name):
    if name.startswith("K-"):
        return _khoudraji(name[2:])
    if name not in _BASES:
        raise ValueError(f"unknown base copula {name!r}")
    return _BASES[name]


def _pvt(d, k):
    # power v-transform clamped away from degenerate fulcrums
    return power(float(np.clip(d, VT_EPS, 1 - VT_EPS)), k)


def template(name):
    """Build a template from its name.

    Recognised forms (``B`` a base name such as ``ast``, ``Joe``, ``K-Joe``):
    ``independence``, ``B``, ``mix-B``, ``iv-B``, ``iva-B``, ``ivl-ivl-B``,
    ``iv2-iv2-B``.
    """
    if name == "independence":
        return Template(name, (), lambda t: Independence())
    for prefix in ("mix-", "iv-", "iva-", "ivl-ivl-", "iv2-iv2-"):
        if name.startswith(prefix):
            ps, build = _base(name[len(prefix):])
            k = len(ps)
            if prefix == "mix-":
                return Template(name, ps, lambda t: rotations_mixture(build(t)))
            if prefix == "iv-":
                return Template(name, ps, lambda t: LinearVtCopula(build(t), 0.5, 0.5))
            if prefix == "iva-":
                ps2 = ps + (Param("kappa", 1.0),)
                return Template(name, ps2, lambda t: VtCopula(
                    build(t[:k]), power(0.5, t[k]), linear(0.5), "inverse"))
            if prefix == "ivl-ivl-":
                ps2 = ps + (Param("delta1", 0.5, 0.0, 1.0, "logit"),
                            Param("delta2", 0.5, 0.0, 1.0, "logit"))
                return Template(name, ps2, lambda t: LinearVtCopula(
                    build(t[:k]), np.clip(t[k], VT_EPS, 1 - VT_EPS),
                    np.clip(t[k + 1], VT_EPS, 1 - VT_EPS)))
            ps2 = ps + (Param("delta1", 0.5, 0.0, 1.0, "logit"), Param("kappa1", 1.0),
                        Param("delta2", 0.5, 0.0, 1.0, "logit"), Param("kappa2", 1.0))
            return Template(name, ps2, lambda t: VtCopula(
                build(t[:k]), _pvt(t[k], t[k + 1]), _pvt(t[k + 2], t[k + 3]), "inverse"))
    if name in _BASES or name.startswith("K-"):
        ps, build = _base(name)
        return Template(name, ps, build)
    raise ValueError(f"unknown template {name!r}")


_TABLES = {
    "table1": ["iv-ast", "mix-t", "mix-Clayton", "mix-Gumbel", "mix-Joe", "iv-Clayton-180",
               "iv-Gumbel", "iv-Joe", "mix-K-Clayton", "mix-K-Gumbel", "mix-K-Joe",
               "iv-K-Clayton-180", "iv-K-Gumbel", "iv-K-Joe"],
    "table2": ["iv-ast", "iv-Clayton-180", "iv-Joe", "iva-ast", "iva-Clayton-180", "iva-Joe",
               "iv-K-Clayton-180", "iv-K-Joe", "iva-K-Clayton-180", "iva-K-Joe"],
    "table3": ["iv-ast", "iv-Clayton-180", "iv-Joe",
               "ivl-ivl-ast", "ivl-ivl-Clayton-180", "ivl-ivl-Joe",
               "ivl-ivl-K-Clayton-180", "ivl-ivl-K-Joe",
               "iv2-iv2-ast", "iv2-iv2-Clayton-180", "iv2-iv2-Joe",
               "iv2-iv2-K-Clayton-180", "iv2-iv2-K-Joe"],
}


def table_zoo(name):
    """Ordered dict of the templates making up one of the three model tables."""
    if name not in _TABLES:
        raise ValueError(f"unknown zoo {name!r}; choose from {sorted(_TABLES)}")
    return {n: template(n) for n in _TABLES[name]}
