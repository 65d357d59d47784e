"""Nondegenerate spherical curves and their Frenet apparatus.

A curve here is a C^2 map ``gamma`` from a parameter interval ``[0, a]``
into the unit sphere whose frame determinant ``det(gamma, gamma',
gamma'')`` never vanishes.  Such a curve carries an orthonormal moving
frame

    e1 = gamma,   e2 = gamma'/|gamma'|,   e3 = e1 x e2,

and every direction ``e1(theta)`` defines an orthogonal projection of
R^3 onto the plane spanned by ``(e2, e3)``.  This module evaluates the
frame, the signed curvature ``<e2', e3>``, arclength and flat-direction
reparametrizations, and the plane projections.  Everything downstream
(tube geometry, frequency slabs, incidence counts) consumes curves only
through this interface.

The built-in model curve is

    gamma(theta) = (cos(theta)/sqrt2, sin(theta)/sqrt2, 1/sqrt2),

a circle at height 45 degrees with constant speed 1/sqrt2 and constant
frame determinant 1/(2 sqrt2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline, PchipInterpolator

Evaluator = Callable[[float], np.ndarray]

#: Step for all finite-difference derivative fallbacks.
FD_STEP = 1e-5

#: A curve counts as degenerate when min |det(gamma, gamma', gamma'')|
#: over the diagnostic grid drops below this.
DEGENERACY_THRESHOLD = 1e-6

#: Number of rows in cumulative-integral reparametrization tables.
TABLE_SIZE = 2048


def _fd_weights(nodes: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for arbitrary stencil nodes.

    ``nodes`` are offsets relative to the evaluation point.  The weights
    are exact for polynomials up to degree ``len(nodes) - 1``, which
    allows shifted stencils near interval endpoints.
    """
    n = len(nodes)
    scale = float(np.max(np.abs(nodes)))
    vander = np.vander(nodes / scale, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs) / scale**order


def _fd_derivative(f: Evaluator, theta: float, lo: float, hi: float,
                   order: int, h: float = FD_STEP) -> np.ndarray:
    """5-point finite difference of ``f`` at ``theta``, order 1 or 2.

    The stencil is centered when possible and slides inward near the
    endpoints so that all evaluation points stay inside ``[lo, hi]``.
    """
    base = min(max(theta, lo + 2.0 * h), hi - 2.0 * h)
    nodes = base + h * np.arange(-2.0, 3.0) - theta
    weights = _fd_weights(nodes, order)
    values = np.stack([np.asarray(f(theta + t), dtype=float) for t in nodes])
    return weights @ values


@dataclass(frozen=True)
class Curve:
    """A parametrized curve on the unit sphere.

    ``eval0`` must return gamma(theta); ``eval1``/``eval2`` return the
    first and second parameter derivatives and may be omitted, in which
    case 5-point finite differences with step ``FD_STEP`` are used.
    ``arclength_flag`` asserts |gamma'| == 1 (within tolerance), which
    gates the Frenet identities used by callers.
    """

    domain: tuple[float, float]
    eval0: Evaluator
    eval1: Optional[Evaluator] = None
    eval2: Optional[Evaluator] = None
    arclength_flag: bool = False

    def _check_domain(self, theta: float) -> None:
        lo, hi = self.domain
        if not (lo - 1e-12 <= theta <= hi + 1e-12):
            raise ValueError(f"parameter {theta} outside domain [{lo}, {hi}]")

    def point(self, theta: float) -> np.ndarray:
        self._check_domain(theta)
        return np.asarray(self.eval0(theta), dtype=float)

    def velocity(self, theta: float) -> np.ndarray:
        self._check_domain(theta)
        if self.eval1 is not None:
            return np.asarray(self.eval1(theta), dtype=float)
        lo, hi = self.domain
        return _fd_derivative(self.eval0, theta, lo, hi, order=1)

    def acceleration(self, theta: float) -> np.ndarray:
        self._check_domain(theta)
        if self.eval2 is not None:
            return np.asarray(self.eval2(theta), dtype=float)
        lo, hi = self.domain
        return _fd_derivative(self.eval0, theta, lo, hi, order=2)


@dataclass(frozen=True)
class Frame:
    """Orthonormal frame (e1, e2, e3) at a point of the curve."""

    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray

    def matrix(self) -> np.ndarray:
        """Rows are (e1, e2, e3); orthogonal with determinant +1."""
        return np.stack([self.e1, self.e2, self.e3])

    def plane_basis(self) -> np.ndarray:
        """3x2 matrix whose columns span the projection plane."""
        return np.stack([self.e2, self.e3], axis=1)


@dataclass(frozen=True)
class NondegeneracyReport:
    min_abs_det: float
    argmin: float
    ok: bool


@dataclass(frozen=True)
class ConeModel:
    """The cone swept by the flat directions r * e3(theta), r in [r_min, 1]."""

    curve: Curve
    r_min: float = 1.0e-3

    def point(self, r: float, theta: float) -> np.ndarray:
        if not (self.r_min - 1e-12 <= r <= 1.0 + 1e-12):
            raise ValueError(f"radius {r} outside [{self.r_min}, 1]")
        return r * eval_frame(self.curve, theta).e3

    def sample(self, n_r: int, n_theta: int) -> np.ndarray:
        """Grid sample of the truncated cone, shape (n_r * n_theta, 3)."""
        lo, hi = self.curve.domain
        radii = np.linspace(self.r_min, 1.0, n_r)
        thetas = np.linspace(lo, hi, n_theta)
        dirs = np.stack([eval_frame(self.curve, t).e3 for t in thetas])
        return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)


def model_curve() -> Curve:
    """The model curve (cos t, sin t, 1)/sqrt2 on [0, 1], closed form."""
    inv = 1.0 / math.sqrt(2.0)

    def eval0(t: float) -> np.ndarray:
        return np.array([math.cos(t) * inv, math.sin(t) * inv, inv])

    def eval1(t: float) -> np.ndarray:
        return np.array([-math.sin(t) * inv, math.cos(t) * inv, 0.0])

    def eval2(t: float) -> np.ndarray:
        return np.array([-math.cos(t) * inv, -math.sin(t) * inv, 0.0])

    return Curve(domain=(0.0, 1.0), eval0=eval0, eval1=eval1, eval2=eval2,
                 arclength_flag=False)


def eval_frame(c: Curve, theta: float) -> Frame:
    """Orthonormal frame at ``theta``: (gamma, gamma'/|gamma'|, cross)."""
    e1 = c.point(theta)
    v = c.velocity(theta)
    speed = float(np.linalg.norm(v))
    if speed < 1e-12:
        raise ValueError(f"degenerate derivative at theta={theta}")
    e2 = v / speed
    e3 = np.cross(e1, e2)
    return Frame(e1=e1, e2=e2, e3=e3)


def frame_determinant(c: Curve, theta: float) -> float:
    """det(gamma, gamma', gamma'') at ``theta`` (rows of a 3x3 matrix)."""
    m = np.stack([c.point(theta), c.velocity(theta), c.acceleration(theta)])
    return float(np.linalg.det(m))


def check_nondegenerate(c: Curve, n_samples: int = 1000) -> NondegeneracyReport:
    """Scan |det(gamma, gamma', gamma'')| on a uniform grid.

    Reports the minimum and its location; ``ok`` is false when the
    minimum drops below ``DEGENERACY_THRESHOLD``.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    lo, hi = c.domain
    grid = np.linspace(lo, hi, n_samples)
    dets = np.array([abs(frame_determinant(c, t)) for t in grid])
    i = int(np.argmin(dets))
    return NondegeneracyReport(min_abs_det=float(dets[i]),
                               argmin=float(grid[i]),
                               ok=bool(dets[i] >= DEGENERACY_THRESHOLD))


def curvature(c: Curve, theta: float, h: float = FD_STEP) -> float:
    """Curvature <e2'(theta), e3(theta)> via central differences.

    Positive for nondegenerate curves with the orientation convention
    used throughout.  ``theta`` must be at least ``h`` away from the
    endpoints so the central stencil stays inside the domain.
    """
    lo, hi = c.domain
    if theta - h < lo - 1e-12 or theta + h > hi + 1e-12:
        raise ValueError(f"theta={theta} too close to the boundary for the "
                         f"central stencil (h={h})")
    e2_plus = eval_frame(c, theta + h).e2
    e2_minus = eval_frame(c, theta - h).e2
    de2 = (e2_plus - e2_minus) / (2.0 * h)
    return float(de2 @ eval_frame(c, theta).e3)


def _curvature_clipped(c: Curve, theta: float, h: float = FD_STEP) -> float:
    """Like :func:`curvature` but slides the stencil inward at endpoints."""
    lo, hi = c.domain
    t = min(max(theta, lo + h), hi - h)
    return curvature(c, t, h=h)


def _frame_derivative(c: Curve, theta: float, which: str,
                      h: float = FD_STEP) -> np.ndarray:
    """Central-difference derivative of a frame axis, clipped at endpoints."""
    lo, hi = c.domain
    t = min(max(theta, lo + h), hi - h)
    fp = getattr(eval_frame(c, t + h), which)
    fm = getattr(eval_frame(c, t - h), which)
    return (fp - fm) / (2.0 * h)


def reparametrize_arclength(c: Curve) -> Curve:
    """Reparametrize by arclength via a cumulative trapezoid table.

    The speed |gamma'| is tabulated on ``TABLE_SIZE`` uniform nodes, the
    cumulative integral inverted with a monotone cubic (PCHIP), and the
    returned curve evaluates gamma(theta(s)) with exact chain-rule
    derivatives, so |gamma'| == 1 holds identically.
    """
    lo, hi = c.domain
    thetas = np.linspace(lo, hi, TABLE_SIZE)
    speeds = np.array([float(np.linalg.norm(c.velocity(t))) for t in thetas])
    if np.any(speeds < 1e-12):
        raise ValueError("curve has a vanishing derivative; cannot "
                         "reparametrize by arclength")
    s_table = cumulative_trapezoid(speeds, thetas, initial=0.0)
    total = float(s_table[-1])
    theta_of_s = PchipInterpolator(s_table, thetas)

    def to_theta(s: float) -> float:
        return float(theta_of_s(min(max(s, 0.0), total)))

    def eval0(s: float) -> np.ndarray:
        return c.point(to_theta(s))

    def eval1(s: float) -> np.ndarray:
        v = c.velocity(to_theta(s))
        return v / np.linalg.norm(v)

    def eval2(s: float) -> np.ndarray:
        t = to_theta(s)
        v = c.velocity(t)
        a = c.acceleration(t)
        n2 = float(v @ v)
        return a / n2 - v * (float(v @ a) / n2**2)

    return Curve(domain=(0.0, total), eval0=eval0, eval1=eval1, eval2=eval2,
                 arclength_flag=True)


def flat_curve(c: Curve) -> Curve:
    """The flat-direction curve s -> e3(theta(s)), unit speed.

    ``s(theta)`` is the cumulative integral of the curvature, so that
    d/ds e3 = -e2 exactly in the limit; the derivative handles returned
    here use that identity, with e2' taken by finite differences for the
    second order.  The result lies on the sphere and is nondegenerate
    whenever the input is.
    """
    lo, hi = c.domain
    thetas = np.linspace(lo, hi, TABLE_SIZE)
    kappas = np.array([_curvature_clipped(c, t) for t in thetas])
    if np.any(kappas <= 0.0):
        raise ValueError("curvature <e2', e3> must stay positive to "
                         "reparametrize the flat directions")
    s_table = cumulative_trapezoid(kappas, thetas, initial=0.0)
    total = float(s_table[-1])
    theta_of_s = PchipInterpolator(s_table, thetas)

    def to_theta(s: float) -> float:
        return float(theta_of_s(min(max(s, 0.0), total)))

    def eval0(s: float) -> np.ndarray:
        return eval_frame(c, to_theta(s)).e3

    def eval1(s: float) -> np.ndarray:
        return -eval_frame(c, to_theta(s)).e2

    def eval2(s: float) -> np.ndarray:
        t = to_theta(s)
        de2 = _frame_derivative(c, t, "e2")
        return -de2 / _curvature_clipped(c, t)

    return Curve(domain=(0.0, total), eval0=eval0, eval1=eval1, eval2=eval2,
                 arclength_flag=True)


def project(c: Curve, theta: float, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto gamma(theta)^perp in frame coordinates.

    Returns (<x, e2>, <x, e3>).  ``x`` may be a single point of shape
    (3,) or a batch of shape (..., 3); the output has matching shape
    with last axis 2.
    """
    frame = eval_frame(c, theta)
    return np.asarray(x, dtype=float) @ frame.plane_basis()


def jacobian_identity_check(c: Curve, samples: int = 100,
                            seed: int = 0) -> float:
    """Check the change-of-variables Jacobian for xi = eta1 gamma' + eta2 (gamma x gamma').

    For unit-speed nondegenerate curves the Jacobian determinant of
    (eta1, eta2, theta) -> xi equals |eta1| |det(gamma x gamma', gamma',
    gamma'')| = |eta1|.  The determinant is measured by finite
    differences at random (eta1, eta2, theta) and compared against the
    closed form; the maximum relative deviation is returned.
    """
    if not c.arclength_flag:
        raise ValueError("jacobian identity requires an arclength "
                         "parametrized curve")
    lo, hi = c.domain
    rng = np.random.default_rng(seed)
    h = FD_STEP

    def xi(eta1: float, eta2: float, theta: float) -> np.ndarray:
        v = c.velocity(theta)
        return eta1 * v + eta2 * np.cross(c.point(theta), v)

    worst = 0.0
    for _ in range(samples):
        eta1 = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
        eta2 = float(rng.uniform(-2.0, 2.0))
        theta = float(rng.uniform(lo + 2.0 * h, hi - 2.0 * h))
        cols = np.stack([
            (xi(eta1 + h, eta2, theta) - xi(eta1 - h, eta2, theta)) / (2 * h),
            (xi(eta1, eta2 + h, theta) - xi(eta1, eta2 - h, theta)) / (2 * h),
            (xi(eta1, eta2, theta + h) - xi(eta1, eta2, theta - h)) / (2 * h),
        ], axis=1)
        measured = abs(float(np.linalg.det(cols)))
        g, v, a = c.point(theta), c.velocity(theta), c.acceleration(theta)
        reference = abs(eta1) * abs(float(np.linalg.det(
            np.stack([np.cross(g, v), v, a]))))
        worst = max(worst, abs(measured - reference) / reference)
    return worst


def table_curve(thetas: Sequence[float], points: Sequence[Sequence[float]]) -> Curve:
    """Curve through sampled points, spline-interpolated and renormalized.

    The cubic spline through ``points`` is divided by its norm so the
    result lies exactly on the sphere; derivatives fall back to finite
    differences of the normalized curve.
    """
    t = np.asarray(thetas, dtype=float)
    p = np.asarray(points, dtype=float)
    if t.ndim != 1 or len(t) < 4:
        raise ValueError("table curve needs at least 4 nodes")
    if p.shape != (len(t), 3):
        raise ValueError("points must have shape (len(thetas), 3)")
    if np.any(np.diff(t) <= 0):
        raise ValueError("thetas must be strictly increasing")
    spline = CubicSpline(t, p, axis=0)

    def eval0(theta: float) -> np.ndarray:
        q = spline(theta)
        return q / np.linalg.norm(q)

    return Curve(domain=(float(t[0]), float(t[-1])), eval0=eval0)


def curve_from_config(cfg: dict) -> Curve:
    """Build a curve from a config mapping.

    Accepted forms: {"kind": "model"} and {"kind": "table", "thetas":
    [...], "points": [[x, y, z], ...]}.
    """
    kind = cfg.get("kind")
    if kind == "model":
        return model_curve()
    if kind == "table":
        return table_curve(cfg["thetas"], cfg["points"])
    raise ValueError(f"unknown curve kind: {kind!r}")
