"""Exact transport of unit-intensity results to any intensity.

A homogeneous process of intensity lam is the unit process shrunk by
lam^(1/3), so volumes divide by lam, surface areas by lam^(2/3), and face
counts do not change at all. The maps below apply this to samples, CDFs,
densities and fitted parameters; the four views stay mutually consistent.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .fitting import GammaParams, GenGammaParams, LognormalParams

FEATURES = ("volume", "surface", "faces")


def scale_factor(feature, lam):
    """Division factor taking a unit-intensity value to intensity lam."""
    lam = float(lam)
    if lam <= 0.0:
        raise ValueError("intensity must be positive")
    if feature == "volume":
        return lam
    if feature == "surface":
        return lam ** (2.0 / 3.0)
    if feature == "faces":
        return 1.0
    raise ValueError(f"unknown feature {feature!r}")


def scale_sample(values, feature, lam):
    """Map unit-intensity draws to intensity lam (faces pass through)."""
    factor = scale_factor(feature, lam)
    values = np.asarray(values)
    return values if factor == 1.0 else values / factor


class ScaledCdf:
    """CDF x -> base(factor * x); composing multiplies the factors once.

    Keeping the accumulated factor explicit makes repeated scaling
    associative to the last bit: scaling by lam1 then lam2 produces the
    same callable as scaling by lam1 * lam2.
    """

    def __init__(self, base, factor):
        self.base = base
        self.factor = float(factor)

    def __call__(self, x):
        return self.base(np.asarray(x, dtype=float) * self.factor)


def scale_cdf(cdf_at_unit, feature, lam):
    """Distribution function at intensity lam from the unit-intensity one."""
    factor = scale_factor(feature, lam)
    if factor == 1.0:
        return cdf_at_unit
    if isinstance(cdf_at_unit, ScaledCdf):
        return ScaledCdf(cdf_at_unit.base, cdf_at_unit.factor * factor)
    return ScaledCdf(cdf_at_unit, factor)


class ScaledDensity:
    """Density x -> factor * base(factor * x)."""

    def __init__(self, base, factor):
        self.base = base
        self.factor = float(factor)

    def __call__(self, x):
        return self.factor * np.asarray(self.base(np.asarray(x, dtype=float) * self.factor))


def scale_density(pdf_at_unit, feature, lam):
    """Density at intensity lam from the unit-intensity one."""
    factor = scale_factor(feature, lam)
    if factor == 1.0:
        return pdf_at_unit
    if isinstance(pdf_at_unit, ScaledDensity):
        return ScaledDensity(pdf_at_unit.base, pdf_at_unit.factor * factor)
    return ScaledDensity(pdf_at_unit, factor)


def scale_params(fit, feature, lam):
    """Fitted parameters at intensity lam from the unit-intensity fit.

    Scale families divide their scale parameter; the lognormal shifts its
    log-location. Face counts have no parametric family in scope. The
    log-likelihood does not transport (the data change), so it is dropped
    from the scaled copy.
    """
    factor = scale_factor(feature, lam)
    if feature == "faces":
        raise ValueError("no parametric family is fitted to face counts")
    if factor == 1.0:
        return fit
    flags = tuple(fit.flags) + ("scaled",)
    if isinstance(fit, (GenGammaParams, GammaParams)):
        se = None
        if fit.std_errors is not None:
            se = np.array(fit.std_errors, dtype=float)
            se[0] = se[0] / factor
        return replace(fit, a=fit.a / factor, std_errors=se, loglik=None, flags=flags)
    if isinstance(fit, LognormalParams):
        return replace(fit, mu=fit.mu - np.log(factor), loglik=None, flags=flags)
    raise TypeError(f"unsupported fit type {type(fit).__name__}")
