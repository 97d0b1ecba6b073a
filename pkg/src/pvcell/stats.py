"""Empirical summaries of feature samples.

Raw moments (not central ones), the empirical distribution function, the
face-count PMF, and Epanechnikov kernel density estimates with a
least-squares cross-validated bandwidth.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DENSITY_INTEGRAL_TOL = 0.01
DEFAULT_GRID_POINTS = 512
DEFAULT_CV_CANDIDATES = 30
_CV_BINS = 4096


class Moments(NamedTuple):
    """Raw moments E[X^k] for k = 1..4 plus the sample standard deviation."""

    mu1: float
    sigma: float
    mu2: float
    mu3: float
    mu4: float


def moments(sample) -> Moments:
    """First four raw moments and the sample standard deviation (ddof=1)."""
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two observations")
    return Moments(
        mu1=float(np.mean(x)),
        sigma=float(np.std(x, ddof=1)),
        mu2=float(np.mean(x ** 2)),
        mu3=float(np.mean(x ** 3)),
        mu4=float(np.mean(x ** 4)),
    )


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample exposing the ECDF and its left limits."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float))
        if v.size < 1:
            raise ValueError("empty sample")
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.size

    def cdf(self, x):
        """Right-continuous fraction of values <= x."""
        return np.searchsorted(self.values, x, side="right") / self.n

    def cdf_left(self, x):
        """Left limit: fraction of values strictly below x."""
        return np.searchsorted(self.values, x, side="left") / self.n


def ecdf(dist: EmpiricalDistribution, x):
    """Empirical distribution function of ``dist`` evaluated at x."""
    return dist.cdf(x)


def face_pmf(face_counts):
    """Face-count frequencies as {faces: (count, probability)}."""
    f = np.asarray(face_counts, dtype=np.int64)
    if f.size == 0:
        raise ValueError("empty sample")
    if np.any(f < 4):
        raise ValueError("a bounded 3D cell has at least 4 faces")
    values, counts = np.unique(f, return_counts=True)
    n = f.size
    return {int(v): (int(c), c / n) for v, c in zip(values, counts)}


@dataclass(frozen=True)
class DensityEstimate:
    """Density values on an ascending grid, with the bandwidth that made them."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if g.ndim != 1 or g.shape != d.shape or g.size < 2:
            raise ValueError("grid and density must be matching 1D arrays")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly ascending")
        if np.any(d < 0):
            raise ValueError("density must be nonnegative")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "density", d)

    def integral(self):
        return float(np.trapezoid(self.density, self.grid))

    def check_normalized(self, tol=DENSITY_INTEGRAL_TOL):
        total = self.integral()
        if abs(total - 1.0) > tol:
            raise ValueError(f"density integrates to {total:.4f}, not 1 within {tol}")


def default_grid(sample, bandwidth, n_points=DEFAULT_GRID_POINTS):
    """Equally spaced export grid from 0 to max(sample) + 3 bandwidths."""
    hi = float(np.max(sample)) + 3.0 * bandwidth
    return np.linspace(0.0, hi, n_points)


def kde_epanechnikov(sample, bandwidth, grid=None) -> DensityEstimate:
    """Kernel density estimate with K(u) = 0.75 (1 - u^2) on |u| <= 1.

    Exact evaluation (no binning): the kernel's compact support makes each
    grid point a cheap window query on the sorted sample. No boundary
    correction is applied, so the estimate may dip near the edge of a
    bounded support.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    h = float(bandwidth)
    if h <= 0.0:
        raise ValueError("bandwidth must be positive")
    g = default_grid(x, h) if grid is None else np.asarray(grid, dtype=float)
    dens = np.empty(g.size)
    n = x.size
    for i, gx in enumerate(g):
        lo = np.searchsorted(x, gx - h, side="left")
        hi = np.searchsorted(x, gx + h, side="right")
        if hi == lo:
            dens[i] = 0.0
            continue
        u = (gx - x[lo:hi]) / h
        dens[i] = 0.75 * np.sum(1.0 - u * u) / (n * h)
    np.maximum(dens, 0.0, out=dens)
    return DensityEstimate(grid=g, density=dens, bandwidth=h)


def _epan(u):
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u ** 2), 0.0)


def _epan_selfconv(t):
    """(K * K)(t) for the Epanechnikov kernel, supported on |t| <= 2."""
    a = np.abs(t)
    return np.where(a <= 2.0, 3.0 / 160.0 * (2.0 - a) ** 3 * (a * a + 6.0 * a + 4.0), 0.0)


def _pair_lag_weights(x, n_bins):
    """Ordered-pair weights per absolute bin lag, via linear binning.

    Entry m approximates the number of ordered pairs (i, j) whose
    separation falls at lag m (both signs); lag 0 includes the n self
    pairs. Returns (bin width, weights).
    """
    lo = float(x[0])
    hi = float(x[-1])
    delta = (hi - lo) / (n_bins - 1)
    pos = (x - lo) / delta
    idx = np.floor(pos).astype(np.int64)
    idx = np.minimum(idx, n_bins - 2)
    frac = pos - idx
    counts = np.zeros(n_bins)
    np.add.at(counts, idx, 1.0 - frac)
    np.add.at(counts, idx + 1, frac)
    size = 1 << int(np.ceil(np.log2(2 * n_bins)))
    spec = np.fft.rfft(counts, size)
    acf = np.fft.irfft(spec * np.conj(spec), size)[:n_bins]
    acf[1:] *= 2.0
    return delta, acf


def lscv_score(sample, bandwidths, n_bins=_CV_BINS, force_binned=False):
    """Least-squares cross-validation score for each candidate bandwidth.

    LSCV(h) = int f^2 - (2/n) sum_i f_{-i}(X_i), evaluated through binned
    pair separations; exact pairwise sums are used for small samples.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    hs = np.asarray(bandwidths, dtype=float)
    if n < 2:
        raise ValueError("need at least two observations")
    exact = n <= 2000 and not force_binned
    if exact:
        diff = np.abs(x[:, None] - x[None, :])
    else:
        delta, lagw = _pair_lag_weights(x, n_bins)
        lags = delta * np.arange(lagw.size)
    scores = np.empty(hs.size)
    for j, h in enumerate(hs):
        if exact:
            sum_kk = float(np.sum(_epan_selfconv(diff / h)))
            sum_k = float(np.sum(_epan(diff / h))) - n * 0.75
        else:
            u = lags / h
            m = int(np.searchsorted(u, 2.0, side="right"))
            w = lagw[:m]
            # lag 0 holds the n self pairs plus same-bin cross pairs
            sum_kk = float(np.sum(_epan_selfconv(u[:m]) * w))
            sum_k = float(np.sum(_epan(u[:m]) * w)) - n * 0.75
        rf = sum_kk / (n * n * h)
        loo = sum_k / ((n - 1) * h)
        scores[j] = rf - 2.0 / n * loo
    return scores


def default_cv_candidates(sample, n_candidates=DEFAULT_CV_CANDIDATES):
    """Log-spaced bandwidth candidates around a normal-reference pilot."""
    x = np.asarray(sample, dtype=float)
    pilot = 2.34 * float(np.std(x)) * x.size ** (-0.2)
    if pilot <= 0.0:
        pilot = 1.0
    return np.geomspace(pilot / 8.0, pilot * 8.0, n_candidates)


def cv_bandwidth(sample, candidate_grid=None):
    """Bandwidth minimizing the cross-validation score over the candidates.

    A sample without spread is degenerate: the smallest candidate is
    returned with a warning.
    """
    x = np.asarray(sample, dtype=float)
    if candidate_grid is None:
        candidate_grid = default_cv_candidates(x)
    hs = np.asarray(candidate_grid, dtype=float)
    if hs.size == 0:
        raise ValueError("empty candidate grid")
    if np.any(hs <= 0.0):
        raise ValueError("candidate bandwidths must be positive")
    if x.size < 2 or np.max(x) == np.min(x):
        warnings.warn("degenerate sample: returning the smallest candidate bandwidth")
        return float(np.min(hs))
    scores = lscv_score(x, hs)
    return float(hs[int(np.argmin(scores))])
