"""Box-counting dimension estimates and projection-dimension experiments.

Dimension here always means the least-squares slope of log2 N_r against
log2(1/r) over a dyadic scale ladder, with the end scales dropped when
enough scales remain (coarse scales saturate, the finest feels the data
resolution).  The area-positivity check is a measure-stability proxy:
occupied-cell area m_delta(theta) staying put under delta-halving, not a
Hausdorff-measure statement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import Curve, project
from .fractal import PointCloud

RATIO_FLOOR = 0.6
PROXY_LABEL = "measure-stability ratio proxy (not a Hausdorff measure)"


@dataclass(frozen=True)
class ScalingFit:
    """Dyadic box counts with their log-log regression.

    ``scales`` is stored coarse to fine; counts grow along it.  ``r2`` is
    the usual goodness of fit, forced to 0.0 for a degenerate (constant)
    count sequence, where the slope is reported as 0.  ``fit_range`` is
    the (finest, coarsest) pair of scales actually regressed.
    """

    scales: tuple
    counts: tuple
    slope: float
    r2: float
    fit_range: tuple

    def __post_init__(self):
        if any(c <= 0 for c in self.counts):
            raise ValueError("box counts must be positive")
        if any(b < a for a, b in zip(self.counts, self.counts[1:])):
            raise ValueError("counts must not decrease toward finer scales")


def _box_count(points: np.ndarray, r: float) -> int:
    k = np.floor(points / r).astype(np.int64)
    k -= k.min(axis=0)
    ranges = k.max(axis=0) + 1
    if math.prod(int(x) for x in ranges) < 2**62:
        code = k[:, 0]
        for i in range(1, k.shape[1]):
            code = code * ranges[i] + k[:, i]
        return len(np.unique(code))
    return len(np.unique(k, axis=0))


def _fit_indices(n_scales: int) -> slice:
    if n_scales >= 5:
        return slice(1, n_scales - 1)
    if n_scales == 4:
        return slice(1, n_scales)
    return slice(0, n_scales)


def dim_fit(points: np.ndarray, scale_range) -> ScalingFit:
    """Box-count ``points`` (any ambient dimension) over a scale ladder.

    Scales should form a dyadic chain so the boxes nest; the coarsest and
    finest scales are dropped from the regression whenever at least five
    scales are supplied (one end with four, none with three).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("points must be a nonempty (m, d) array")
    scales = sorted({float(r) for r in scale_range}, reverse=True)
    if len(scales) < 3:
        raise ValueError("need at least 3 scales")
    if scales[-1] <= 0:
        raise ValueError("scales must be positive")
    counts = [_box_count(pts, r) for r in scales]
    sel = _fit_indices(len(scales))
    x = np.log2([1.0 / r for r in scales[sel]])
    y = np.log2(counts[sel])
    fit_range = (scales[sel][-1], scales[sel][0])
    if np.ptp(y) == 0.0:
        return ScalingFit(tuple(scales), tuple(counts), 0.0, 0.0, fit_range)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float(np.sum(resid**2)) / float(np.sum((y - y.mean()) ** 2))
    return ScalingFit(tuple(scales), tuple(counts), float(slope), r2,
                      fit_range)


def dyadic_scales(coarse: float, fine: float) -> list[float]:
    """The dyadic ladder [coarse, coarse/2, ..., fine], ends included."""
    k0 = round(math.log2(1.0 / coarse))
    k1 = round(math.log2(1.0 / fine))
    if abs(2.0**-k0 - coarse) > 1e-12 or abs(2.0**-k1 - fine) > 1e-12:
        raise ValueError("endpoints must be dyadic")
    if k1 < k0:
        raise ValueError("fine scale must not exceed the coarse one")
    return [2.0**-k for k in range(k0, k1 + 1)]


# ---------------------------------------------------------------------------
# per-direction projection profiles


@dataclass(frozen=True)
class ExceptionalProfile:
    """Per-direction projection fits over a centered theta grid."""

    thetas: np.ndarray
    fits: tuple
    spacing: float

    def slopes(self) -> np.ndarray:
        return np.array([f.slope for f in self.fits])

    def median_slope(self) -> float:
        return float(np.median(self.slopes()))

    def exceptional_set(self, s: float) -> np.ndarray:
        """Directions whose projection scales strictly below exponent s."""
        return self.thetas[self.slopes() < s]


def _theta_grid(curve: Curve, spacing: float) -> np.ndarray:
    lo, hi = curve.domain
    n = int((hi - lo) / spacing + 1e-9)
    if n < 1:
        raise ValueError("spacing exceeds the curve domain")
    offset = 0.5 * ((hi - lo) - n * spacing)
    return lo + offset + (np.arange(n) + 0.5) * spacing


def projection_profile(cloud: PointCloud, curve: Curve, theta_spacing: float,
                       scale_range) -> ExceptionalProfile:
    """Fit the box-count slope of the projected cloud at every grid theta."""
    thetas = _theta_grid(curve, theta_spacing)
    fits = tuple(dim_fit(project(curve, float(t), cloud.points), scale_range)
                 for t in thetas)
    return ExceptionalProfile(thetas, fits, theta_spacing)


def exceptional_dim_estimate(profile: ExceptionalProfile, s: float,
                             alpha_hat: float) -> dict:
    """Box-count dimension of the exceptional direction set against the
    max(1 + s - alpha_hat, 0) budget."""
    exceptional = profile.exceptional_set(s)
    bound = max(1.0 + s - alpha_hat, 0.0)
    out = {"s": s, "alpha_hat": alpha_hat, "bound": bound,
           "n_exceptional": int(len(exceptional))}
    if len(exceptional) == 0:
        out.update(E_dim=0.0, fit=None)
        return out
    scales = dyadic_scales(2.0**-3, profile.spacing)
    if len(scales) < 3:
        raise ValueError("theta grid too coarse to fit the exceptional set")
    fit = dim_fit(exceptional, scales)
    out.update(E_dim=fit.slope, fit=fit)
    return out


def segment_cloud(curve: Curve, thetas, delta: float,
                  origin=(0.0, 0.0, 0.0)) -> PointCloud:
    """Union of delta-sampled unit segments along curve directions.

    Each segment runs from ``origin`` along gamma(theta); a one-segment
    cloud collapses to a point under the projection at its own theta.
    """
    ts = (np.arange(round(1.0 / delta)) + 0.5) * delta
    pieces = [np.asarray(origin, dtype=float)
              + ts[:, None] * curve.point(float(t))[None, :]
              for t in np.atleast_1d(thetas)]
    return PointCloud(points=np.concatenate(pieces),
                      nominal_dimension=1.0, generator="segments", seed=0,
                      resolution=delta)


# ---------------------------------------------------------------------------
# area positivity proxy


def ball_cover_cloud(delta: float, radius: float = 0.5,
                     center: float = 0.5) -> PointCloud:
    """Sphere point net whose every projection is a delta-covered disk.

    Stands in for the solid ball in projected-area experiments: the
    projection of the sphere is the same disk as the ball's, and a
    Fibonacci net with covering radius below delta/2 projects (projection
    being 1-Lipschitz and onto) to a delta/2-net of that disk, so the net
    occupies every delta-cell of the disk at a 1/delta fraction of the
    solid grid's cost.
    """
    n = math.ceil(16.0 * (radius / 0.5) ** 2 / delta**2)
    i = np.arange(n)
    z = radius * (1.0 - (2.0 * i + 1.0) / n)
    rho = np.sqrt(np.maximum(radius**2 - z**2, 0.0))
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    pts = center + np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    return PointCloud(points=pts, nominal_dimension=3.0,
                      generator="sphere-cover", seed=0, resolution=delta)


def area_positivity_proxy(cloud: PointCloud, curve: Curve, deltas,
                          theta_spacing: float = 2.0**-5,
                          ratio_floor: float = RATIO_FLOOR) -> dict:
    """Occupied-cell area of every projection across a delta-halving chain.

    For each grid theta, m_delta = (number of occupied delta-cells of the
    projected cloud) * delta^2; a direction passes when every consecutive
    ratio m_{delta/2} / m_delta stays above ``ratio_floor``.  Only
    meaningful above dimension 2, so flatter clouds are refused.
    """
    if cloud.nominal_dimension <= 2.0:
        raise ValueError("area proxy needs a cloud of dimension above 2")
    deltas = [float(d) for d in deltas]
    if len(deltas) < 2:
        raise ValueError("need at least two scales for stability ratios")
    if any(abs(b - 0.5 * a) > 1e-12 * a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must halve between consecutive entries")
    thetas = _theta_grid(curve, theta_spacing)
    m = np.empty((len(thetas), len(deltas)))
    for i, t in enumerate(thetas):
        proj = project(curve, float(t), cloud.points)
        m[i] = [_box_count(proj, d) * d * d for d in deltas]
    ratios = m[:, 1:] / m[:, :-1]
    theta_pass = np.all(ratios >= ratio_floor, axis=1)
    return {"thetas": thetas, "deltas": np.array(deltas), "m": m,
            "ratios": ratios, "theta_pass": theta_pass,
            "fraction_pass": float(np.mean(theta_pass)),
            "ratio_floor": ratio_floor, "proxy": PROXY_LABEL}
