"""Copula models for volatile financial time series.

Modules
-------
vtransform
    V-shaped uniformity-preserving transforms.
copulas
    Bivariate copula families, rotations, mixtures, Khoudraji asymmetry.
vtcopula
    Copulas built by passing a base copula through v-transforms.
garch
    AR-ARCH / GJR-GARCH simulation, stationarity and tail index.
implied
    Copula densities implied by ARCH and GARCH processes.
fit
    Pseudo-observations, maximum likelihood fitting and model comparison.
dvine
    Stationary D-vine time-series models.
"""
from . import copulas, vtransform  # noqa: F401

__version__ = "0.1.0"
