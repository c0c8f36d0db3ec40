"""Densities and copulas implied by first-order GARCH-type processes.

ARCH(1)-type processes (``beta1 = 0``)
    The stationary density solves ``f(x) = int K(x, y) f(y) dy`` with
    ``K(x, y) = f_eps((x - phi y)/sigma(y)) / sigma(y)``.  The integral is
    discretised on a sinh-stretched grid and the fixed point found by
    power iteration.  The discrete solution then defines ``f_X`` everywhere
    as a finite scale mixture of innovation densities (Nystrom extension),
    which also gives the cdf in closed form.

GARCH(1,1)-type processes (``beta1 > 0``)
    ``X = sigma * eps`` with ``sigma`` independent of ``eps``; the marginal
    law of ``sigma`` is estimated from a long simulation by a kernel
    density in ``z = log(sigma^2 - sigma_min^2)`` and discretised into
    quadrature nodes.  Joint densities of successive observations are
    then finite sums over those nodes.
"""
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.ndimage import gaussian_filter1d

from ._numerics import ConvergenceError, monotone_root
from .garch import GarchSpec, check_stationarity, simulate, tail_index, NonStationaryError

__all__ = [
    "GridDensity", "SigmaDensity", "CopulaGrid", "ImpliedModel",
    "solve_arch_marginal", "estimate_sigma_density", "garch_marginal", "implied_model",
    "joint_density", "copula_density_c1", "copula_grid_c1", "conditional_copula_c2",
    "copula_grid_c2", "independence_distance", "implied_v_transform_leverage",
    "symmetry_report", "open_grid",
]


def open_grid(m):
    """Cell midpoints ``(i - 0.5)/m`` of an ``m``-cell partition of [0, 1]."""
    return (np.arange(1, m + 1) - 0.5) / m


def _stretched_grid(scale, x_max, m):
    # x = L sinh(t), equally spaced in t; returns nodes and trapezoid weights in x.
    # Relative spacing is constant in the tails, so the grid keeps resolving
    # kernels whose width grows in proportion to |x|.
    t_max = np.arcsinh(x_max / scale)
    t = np.linspace(-t_max, t_max, m)
    x = scale * np.sinh(t)
    w = np.full(m, t[1] - t[0]) * scale * np.cosh(t)
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def _scale_and_range(spec, tail_mass=1e-9):
    ab = spec.alpha1 + spec.beta1 + 0.5 * spec.gamma1
    scale = np.sqrt(spec.alpha0 / (1 - ab)) if ab < 1 else np.sqrt(spec.alpha0)
    scale /= np.sqrt(max(1 - spec.phi ** 2, 1e-3))
    try:
        zeta = tail_index(spec) if (spec.alpha1 > 0 or spec.gamma1 > 0) else np.inf
    except Exception:
        zeta = 1.0
    law = spec.innovations
    if law.law != "gaussian":
        zeta = min(zeta, law.nu)
    if np.isfinite(zeta):
        x_max = scale * max(25.0, tail_mass ** (-1.0 / zeta))
    else:
        x_max = 25.0 * scale
    return scale, x_max


@dataclass(eq=False)
class GridDensity:
    """Stationary marginal law as a scale mixture of innovation densities.

    ``f(x) = sum_j a_j f_eps((x - b_j)/c_j)/c_j`` with tabulated values at
    ``nodes``.
    """

    nodes: np.ndarray
    pdf_values: np.ndarray
    cdf_values: np.ndarray
    weights: np.ndarray = field(repr=False)
    locs: np.ndarray = field(repr=False)
    scales: np.ndarray = field(repr=False)
    dist: object = field(repr=False)
    node_weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        # far-tail increments below this are unresolvable and break the interpolant
        keep = np.concatenate([[True], np.diff(self.cdf_values) > 1e-14])
        self._qinterp = PchipInterpolator(self.cdf_values[keep], self.nodes[keep], extrapolate=True)

    @classmethod
    def from_mixture(cls, nodes, weights, locs, scales, dist, node_weights=None):
        """Tabulate the mixture ``sum_j a_j f((x - b_j)/c_j)/c_j`` at ``nodes``.

        ``node_weights`` are trapezoid weights of the grid in its stretched
        coordinate.
        """
        proto = cls.__new__(cls)
        proto.weights, proto.locs, proto.scales, proto.dist = weights, locs, scales, dist
        return cls(nodes, proto.pdf(nodes), proto.cdf(nodes), weights, locs, scales, dist,
                   node_weights)

    def _eval(self, x, fn, block=4096):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty(flat.shape)
        for i in range(0, flat.size, block):
            z = (flat[i:i + block, None] - self.locs[None, :]) / self.scales[None, :]
            out[i:i + block] = fn(z) @ self.weights
        return out.reshape(x.shape)

    def pdf(self, x):
        return self._eval(x, lambda z: self.dist.pdf(z) / self.scales[None, :])

    def cdf(self, x):
        return np.clip(self._eval(x, self.dist.cdf), 0.0, 1.0)

    def ppf(self, p, exact=True):
        """Quantile function; ``exact=False`` uses the monotone cubic interpolant."""
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0) | (p >= 1)):
            raise ValueError("quantile level must lie in (0, 1)")
        if not exact:
            return self._qinterp(p)
        idx = np.searchsorted(self.cdf_values, p)
        n = self.nodes
        span = n[-1] - n[0]
        lo = np.where(idx > 0, n[np.clip(idx - 1, 0, n.size - 1)], n[0] - 1e3 * span)
        hi = np.where(idx < n.size, n[np.clip(idx, 0, n.size - 1)], n[-1] + 1e3 * span)
        return monotone_root(self.cdf, p, lo, hi, deriv=self.pdf, xtol=1e-12 * max(1.0, span),
                             x0=self._qinterp(p))

    quantile = ppf

    def integrate(self, values=None):
        """Grid quadrature of ``values * pdf`` (of ``pdf`` when omitted)."""
        if self.node_weights is None:
            raise ValueError("grid has no quadrature weights")
        f = self.pdf_values if values is None else np.asarray(values) * self.pdf_values
        return float(self.node_weights @ f)

    def mean(self):
        return float(self.weights @ self.locs)

    def variance(self):
        # innovations have mean 0 and variance 1
        m2 = self.weights @ (self.locs ** 2 + self.scales ** 2)
        return float(m2 - self.mean() ** 2)

    def boundary_mass(self):
        return float(self.cdf(self.nodes[0]) + 1 - self.cdf(self.nodes[-1]))


def _kernel_matrix(spec, x, w):
    s = spec.sigma(x)
    z = (x[:, None] - spec.phi * x[None, :]) / s[None, :]
    return spec.innovations.pdf(z) / s[None, :] * w[None, :]


def solve_arch_marginal(spec, m=2001, tol=1e-12, max_iter=10_000):
    """Stationary density of an ARCH(1)-type process.

    Parameters
    ----------
    spec : GarchSpec
        Must have ``beta1 = 0``.
    m : int
        Number of grid nodes.
    tol : float
        Sup-norm tolerance of the power iteration.

    Returns
    -------
    GridDensity
    """
    if spec.beta1 != 0:
        raise ValueError("solve_arch_marginal needs an ARCH(1)-type spec (beta1 = 0)")
    if not check_stationarity(spec):
        raise NonStationaryError("specification is not strictly stationary")
    scale, x_max = _scale_and_range(spec)
    x, w = _stretched_grid(scale, x_max, m)
    k = _kernel_matrix(spec, x, w)
    f = spec.innovations.pdf(x / scale) / scale
    f /= w @ f
    for it in range(max_iter):
        g = k @ f
        g /= w @ g
        if np.max(np.abs(g - f)) <= tol * max(1.0, np.max(g)):
            f = g
            break
        f = g
    else:
        raise ConvergenceError("power iteration did not converge")
    a = w * f
    a /= a.sum()
    dens = GridDensity.from_mixture(x, a, spec.phi * x, spec.sigma(x), spec.innovations, w)
    if dens.boundary_mass() > 1e-8:
        warnings.warn(f"marginal grid misses probability mass {dens.boundary_mass():.2e}")
    return dens


@dataclass(eq=False)
class SigmaDensity:
    """Marginal law of the volatility on ``[sigma_min, inf)``.

    ``nodes``/``weights`` form a quadrature rule for ``int g(s) f_sigma(s) ds``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    sigma_min: float
    z_grid: np.ndarray = field(repr=False)
    z_density: np.ndarray = field(repr=False)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        d = s * s - self.sigma_min ** 2
        out = np.zeros(s.shape)
        ok = d > 0
        z = np.log(d[ok])
        fz = np.interp(z, self.z_grid, self.z_density, left=0.0, right=0.0)
        out[ok] = fz * 2 * s[ok] / d[ok]
        return out

    def expect(self, g):
        return float(self.weights @ g(self.nodes))


def estimate_sigma_density(spec, n_sim=2_000_000, seed=20240101, n_nodes=512):
    """Kernel estimate of the volatility density of a GARCH(1,1)-type process.

    Simulates the volatility series and smooths a histogram of
    ``log(sigma^2 - sigma_min^2)``, ``sigma_min^2 = alpha0/(1 - beta1)``,
    with a Gaussian kernel (normal-reference bandwidth).
    """
    if spec.beta1 <= 0:
        raise ValueError("volatility density estimation needs beta1 > 0; "
                         "for ARCH processes sigma is a function of X")
    s2min = spec.alpha0 / (1 - spec.beta1)
    sig = simulate(spec, n_sim, seed=seed).sigma
    d = np.maximum(sig ** 2 - s2min, 1e-14 * s2min)
    z = np.log(d)
    sd = z.std()
    iqr = np.subtract(*np.percentile(z, [75, 25]))
    h = 0.9 * min(sd, iqr / 1.34) * z.size ** (-0.2)
    lo, hi = z.min() - 4 * h, z.max() + 4 * h
    edges = np.linspace(lo, hi, n_nodes + 1)
    counts, _ = np.histogram(z, edges)
    dz = edges[1] - edges[0]
    smooth = gaussian_filter1d(counts.astype(float), h / dz, mode="constant", truncate=6.0)
    q = smooth / smooth.sum()
    zc = 0.5 * (edges[:-1] + edges[1:])
    nodes = np.sqrt(s2min + np.exp(zc))
    return SigmaDensity(nodes, q, float(np.sqrt(s2min)), zc, q / dz)


def garch_marginal(spec, sigma_density, m=2001):
    """Marginal law ``f_X(x) = int f_eps(x/s)/s f_sigma(s) ds`` as a GridDensity."""
    scale, x_max = _scale_and_range(spec)
    x, w = _stretched_grid(scale, x_max, m)
    q, s = sigma_density.weights, sigma_density.nodes
    return GridDensity.from_mixture(x, q, np.zeros_like(s), s, spec.innovations, w)


@dataclass(eq=False)
class CopulaGrid:
    """Copula density values ``values[i, j] = c(u[i], u[j])`` on the open grid."""

    u: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.u.size

    def margins(self):
        """Row and column means (each should be close to 1)."""
        return self.values.mean(axis=1), self.values.mean(axis=0)


def independence_distance(grid):
    """Mean absolute deviation of the copula density from 1 over the grid."""
    return float(np.mean(np.abs(grid.values - 1.0)))


def symmetry_report(grid):
    """Maximum deviations from the four reflection symmetries.

    Returns
    -------
    dict
        ``h_sym``: c(u,v) vs c(u,1-v); ``v_sym``: c(1-u,v); ``radial``:
        c(1-u,1-v); ``exchangeable``: c(v,u).
    """
    c = grid.values
    return {"h_sym": float(np.max(np.abs(c - c[:, ::-1]))),
            "v_sym": float(np.max(np.abs(c - c[::-1, :]))),
            "radial": float(np.max(np.abs(c - c[::-1, ::-1]))),
            "exchangeable": float(np.max(np.abs(c - c.T)))}


class ImpliedModel:
    """Marginal, joint and copula densities implied by a GarchSpec."""

    def __init__(self, spec, m=2001, n_sim=2_000_000, seed=20240101):
        self.spec = spec
        if spec.is_arch:
            self.marginal = solve_arch_marginal(spec, m)
            self.sigma_density = None
        else:
            self.sigma_density = estimate_sigma_density(spec, n_sim, seed)
            self.marginal = garch_marginal(spec, self.sigma_density, m)

    # -- helpers ---------------------------------------------------------
    def _g(self, x, s):
        return self.spec.innovations.pdf(x / s) / s

    def joint_density(self, x, y):
        """Density of ``(X_t, X_{t+1})``."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        sp = self.spec
        if self.sigma_density is None:
            xx, ix = np.unique(x, return_inverse=True)
            fx = self.marginal.pdf(xx)[ix].reshape(x.shape)
            return fx * self._g(y - sp.phi * x, sp.sigma(x))
        s, q = self.sigma_density.nodes, self.sigma_density.weights
        xx, yy = x[..., None], y[..., None]
        s2 = sp.sigma(xx, s ** 2)
        return (self._g(xx, s) * self._g(yy, s2)) @ q

    def c1(self, u, v):
        """Copula density of ``(X_t, X_{t+1})``."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        uu, iu = np.unique(u, return_inverse=True)
        vv, iv = np.unique(v, return_inverse=True)
        qx = self.marginal.ppf(uu)[iu].reshape(u.shape)
        qy = self.marginal.ppf(vv)[iv].reshape(v.shape)
        fy = self.marginal.pdf(qy)
        sp = self.spec
        if self.sigma_density is None:
            return self._g(qy - sp.phi * qx, sp.sigma(qx)) / fy
        return self.joint_density(qx, qy) / (self.marginal.pdf(qx) * fy)

    def c1_grid(self, m=200):
        u = open_grid(m)
        q = self.marginal.ppf(u)
        f = self.marginal.pdf(q)
        sp = self.spec
        if self.sigma_density is None:
            vals = self._g(q[None, :] - sp.phi * q[:, None], sp.sigma(q)[:, None]) / f[None, :]
        else:
            vals = self.joint_density(q[:, None], q[None, :]) / (f[:, None] * f[None, :])
        return CopulaGrid(u, vals, {"kind": "c1"})

    # -- conditional copula of (X1, X3) given X2 ---------------------------
    def _conditional_parts(self, w, m_tab=4001):
        sp = self.spec
        s, q = self.sigma_density.nodes, self.sigma_density.weights
        x2 = float(self.marginal.ppf(w))
        gx2 = self._g(x2, s) * q                      # weights of sigma_2 given X2 = x2
        f2 = gx2.sum()
        s3 = sp.sigma(x2, s ** 2)                     # sigma_3 given sigma_2 = s
        # X1 | X2: tabulate f12(t, x2) over t and integrate
        scale, x_max = _scale_and_range(sp)
        t, wt = _stretched_grid(scale, x_max, m_tab)
        f12 = self.joint_density(t, np.full_like(t, x2))
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (f12[1:] + f12[:-1]) * np.diff(t))])
        cum /= cum[-1]
        keep = np.concatenate([[True], np.diff(cum) > 0])
        q1 = PchipInterpolator(cum[keep], t[keep])
        return x2, f2, gx2, s3, q1

    def c2(self, u, v, w):
        """Conditional copula density of ``(X1, X3)`` given ``X2 = F_X^{-1}(w)``."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        if self.sigma_density is None:
            return np.ones(u.shape)
        if not 0.05 <= w <= 0.95:
            warnings.warn("conditional copula approximation is unreliable for w outside [0.05, 0.95]")
        return self._c2_eval(u.ravel(), v.ravel(), w).reshape(u.shape)

    def _c2_eval(self, u, v, w, outer=False):
        sp = self.spec
        s, q = self.sigma_density.nodes, self.sigma_density.weights
        x2, f2, gx2, s3, q1 = self._conditional_parts(w)
        x1 = q1(u)
        # X3 | X2 is a finite mixture: invert its cdf exactly
        p3 = gx2 / f2
        cdf3 = lambda y: sp.innovations.cdf(y[:, None] / s3[None, :]) @ p3
        pdf3 = lambda y: self._g(y[:, None], s3[None, :]) @ p3
        span = 1e3 * (abs(x2) + 1.0) * s3.max()
        x3 = monotone_root(cdf3, v, -span, span, deriv=pdf3, xtol=1e-12)
        # triple density divided by f2, via sigma_1 nodes
        g1 = self._g(x1[:, None], s[None, :]) * q[None, :]          # (n1, K)
        s2 = sp.sigma(x1[:, None], s[None, :] ** 2)                  # sigma_2 | x1, sigma_1
        g2 = self._g(x2, s2)
        s3b = sp.sigma(x2, s2 ** 2)
        f12 = (g1 * g2).sum(axis=1)                                  # f(x1, x2)
        f23 = pdf3(x3) * f2                                           # f(x2, x3)
        if outer:
            g3 = self._g(x3[None, :, None], s3b[:, None, :])         # (n1, n3, K)
            f123 = np.einsum("ik,ijk->ij", g1 * g2, g3)
            return f2 * f123 / (f12[:, None] * f23[None, :])
        g3 = self._g(x3[:, None], s3b)
        f123 = (g1 * g2 * g3).sum(axis=1)
        return f2 * f123 / (f12 * f23)

    def c2_grid(self, w, m=100):
        u = open_grid(m)
        if self.sigma_density is None:
            return CopulaGrid(u, np.ones((m, m)), {"kind": "c2", "w": w})
        if not 0.05 <= w <= 0.95:
            warnings.warn("conditional copula approximation is unreliable for w outside [0.05, 0.95]")
        vals = self._c2_eval(u, u, w, outer=True)
        return CopulaGrid(u, vals, {"kind": "c2", "w": w})

    # -- leverage v-transform --------------------------------------------
    def leverage_v_transform(self, u):
        """``V1 = F_sigma o sigma o F_X^{-1}`` for ARCH(1) with leverage.

        Arrays longer than 4096 are evaluated by monotone interpolation of
        an exact table (4097 logit-spaced nodes per branch).
        """
        sp = self.spec
        if not sp.is_arch or sp.phi != 0 or not sp.innovations.symmetric or sp.alpha1 <= 0:
            raise ValueError("needs an ARCH(1) spec with alpha1 > 0, phi = 0 and symmetric innovations")
        u = np.asarray(u, dtype=float)
        if u.size <= 4096:
            return self._leverage_exact(u)
        left, right = self._leverage_table()
        uc = np.clip(u, 1e-12, 1 - 1e-12)
        z = np.log(uc) - np.log1p(-uc)
        out = np.where(u <= 0.5, left(np.minimum(z, 0.0)), right(np.maximum(z, 0.0)))
        out = np.where((u == 0) | (u == 1), 1.0, out)
        return np.clip(out, 0.0, 1.0)

    def _leverage_exact(self, u):
        sp = self.spec
        F, Q = self.marginal.cdf, self.marginal.ppf
        r = np.sqrt(1 + sp.gamma1 / sp.alpha1)
        uc = np.clip(u, 1e-12, 1 - 1e-12)
        x = Q(uc)
        out = np.where(u <= 0.5, F(-r * x) - u, u - F(-x / r))
        out = np.where(u == 0, 1.0, np.where(u == 1, 1.0, out))
        return np.clip(out, 0.0, 1.0)

    def _leverage_table(self):
        if getattr(self, "_lev_table", None) is None:
            z_end = np.log(1e12 - 1.0)
            z = np.linspace(-z_end, 0.0, 4097)
            ul = 1.0 / (1.0 + np.exp(-z))
            left = PchipInterpolator(z, self._leverage_exact(ul))
            right = PchipInterpolator(-z[::-1], self._leverage_exact(1.0 - ul[::-1]))
            self._lev_table = (left, right)
        return self._lev_table


@lru_cache(maxsize=16)
def implied_model(spec, m=2001, n_sim=2_000_000, seed=20240101):
    """Cached ImpliedModel for a (hashable) GarchSpec."""
    return ImpliedModel(spec, m, n_sim, seed)


def joint_density(spec, x, y):
    return implied_model(spec).joint_density(x, y)


def copula_density_c1(spec, u, v):
    return implied_model(spec).c1(u, v)


def copula_grid_c1(spec, m=200):
    return implied_model(spec).c1_grid(m)


def conditional_copula_c2(spec, u, v, w):
    return implied_model(spec).c2(u, v, w)


def copula_grid_c2(spec, w, m=100):
    return implied_model(spec).c2_grid(w, m)


def implied_v_transform_leverage(spec, u):
    return implied_model(spec).leverage_v_transform(u)
