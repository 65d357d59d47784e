"""Oriented plank geometry for the projection experiments.

Everything here is a closed box with orthonormal axes: the delta-tubes
pointing along e1(theta), their dual frequency slabs, the frequency
decomposition of a slab into high/low/angular parts, the middle-case
planks (the fine plank inside an angular part, the cone-covering plank
it sits in, and the intermediate-thickness plank), and the planks tiling
a neighbourhood of the light cone swept by e3.  Predicates (containment,
box intersection via separating axes, Monte-Carlo overlap counts) are
exact up to floating point; nothing is clipped to balls.

Constants that the underlying estimates leave unspecified ("some large
constant") are frozen here after one-time calibration on the model
curve; see the individual docstrings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve import Curve, eval_frame

#: Orthonormality tolerance for plank axes.
ORTHO_TOL = 1e-9

#: Dilation constant of the cone-covering plank (middle case).
DEFAULT_C1 = 64.0

#: Dilation constant of the intermediate plank (middle case).
DEFAULT_C2 = 8.0

#: Fine planks at angular scale lam separate once their parameters
#: differ by this constant times lam^{-1} delta.
DISJOINTNESS_CONSTANT = 32.0

#: Angular-width constant of the cone planks, calibrated on the model
#: curve by doubling until every corner's distance to the cone falls in
#: the required dyadic bracket (see ``calibrate_cone_constant``).
MODEL_CONE_CONSTANT = 4.0


@dataclass(frozen=True)
class Plank:
    """A closed box: center, orthonormal axis rows, half side lengths."""

    center: np.ndarray
    axes: np.ndarray
    half_lengths: np.ndarray

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        axes = np.asarray(self.axes, dtype=float)
        half = np.asarray(self.half_lengths, dtype=float)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "half_lengths", half)
        if axes.shape != (3, 3) or center.shape != (3,) or half.shape != (3,):
            raise ValueError("plank needs a 3-vector center, 3x3 axes and "
                             "3 half lengths")
        if np.max(np.abs(axes @ axes.T - np.eye(3))) > ORTHO_TOL:
            raise ValueError("plank axes must be orthonormal")
        if np.any(half <= 0):
            raise ValueError("half lengths must be positive")

    def frame_coords(self, x: np.ndarray) -> np.ndarray:
        """Coordinates of ``x`` (shape (..., 3)) along the plank axes."""
        return (np.asarray(x, dtype=float) - self.center) @ self.axes.T

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Closed-boundary membership; scalar or boolean batch."""
        coords = self.frame_coords(x)
        tol = 1e-12 * (1.0 + self.half_lengths)
        inside = np.abs(coords) <= self.half_lengths + tol
        return inside.all(axis=-1)

    def vertices(self) -> np.ndarray:
        """The 8 corners, shape (8, 3)."""
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1)
                          for sz in (-1, 1)], dtype=float)
        return self.center + (signs * self.half_lengths) @ self.axes

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` uniform points inside the plank."""
        u = rng.uniform(-1.0, 1.0, size=(n, 3))
        return self.center + (u * self.half_lengths) @ self.axes

    def volume(self) -> float:
        return float(np.prod(2.0 * self.half_lengths))

    def to_json(self) -> dict:
        return {"center": self.center.tolist(),
                "axes": self.axes.tolist(),
                "half_lengths": self.half_lengths.tolist()}

    @classmethod
    def from_json(cls, blob: dict) -> "Plank":
        return cls(np.array(blob["center"]), np.array(blob["axes"]),
                   np.array(blob["half_lengths"]))


def _box_from_intervals(frame: np.ndarray, intervals) -> Plank:
    """Plank from per-axis closed intervals in the rows of ``frame``."""
    lo = np.array([iv[0] for iv in intervals], dtype=float)
    hi = np.array([iv[1] for iv in intervals], dtype=float)
    center = ((lo + hi) / 2.0) @ frame
    return Plank(center=center, axes=frame, half_lengths=(hi - lo) / 2.0)


def planks_intersect(p: Plank, q: Plank) -> bool:
    """Closed-box intersection test via the separating-axis theorem."""
    return not _separated(p, q, gap=1e-12)


def disjoint_interiors(p: Plank, q: Plank) -> bool:
    """True when the open boxes do not meet (touching faces allowed)."""
    return _separated(p, q, gap=-1e-12)


def _separated(p: Plank, q: Plank, gap: float) -> bool:
    d = q.center - p.center
    candidates = [p.axes[i] for i in range(3)] + [q.axes[i] for i in range(3)]
    for i in range(3):
        for k in range(3):
            cross = np.cross(p.axes[i], q.axes[k])
            norm = np.linalg.norm(cross)
            if norm > 1e-12:
                candidates.append(cross / norm)
    for axis in candidates:
        ext_p = float(np.abs(p.axes @ axis) @ p.half_lengths)
        ext_q = float(np.abs(q.axes @ axis) @ q.half_lengths)
        if abs(float(d @ axis)) > ext_p + ext_q + gap:
            return True
    return False


def tube(c: Curve, theta: float, base: np.ndarray, delta: float) -> Plank:
    """The delta x delta x 1 tube over ``base`` pointing along e1(theta).

    ``base`` is a point of the projection plane in (e2, e3) coordinates;
    the tube is the full-length box around the fiber over it (no ball
    clipping), so both end centers project back onto ``base``.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    f = eval_frame(c, theta)
    center = base[0] * f.e2 + base[1] * f.e3
    return Plank(center=center, axes=f.matrix(),
                 half_lengths=np.array([0.5, delta / 2.0, delta / 2.0]))


def dual_slab(c: Curve, theta: float, delta: float) -> Plank:
    """The frequency slab dual to the tubes at ``theta``: delta x 1 x 1."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    f = eval_frame(c, theta)
    return Plank(center=np.zeros(3), axes=f.matrix(),
                 half_lengths=np.array([delta, 1.0, 1.0]))


def _dyadic_lambdas(delta: float, K: float) -> list[float]:
    """Dyadic angular scales in (sqrt(delta), 1/K], largest first."""
    lams = []
    lam = 2.0 ** math.floor(math.log2(1.0 / K) + 1e-9)
    while lam > math.sqrt(delta) * (1.0 + 1e-12):
        lams.append(lam)
        lam /= 2.0
    return lams


@dataclass(frozen=True)
class SlabDecomposition:
    """High/low/angular split of a frequency slab at one parameter.

    ``high`` holds the two boxes with |xi_2| in [1/K, 1]; ``low`` the
    single box with |xi_2|, |xi_3| <= 1/K; ``lam_parts[lam]`` the four
    boxes with |xi_2| in [lam/2, lam] and |xi_3| in [1/K, 1]; ``floor``
    the two boxes below the smallest angular scale.  ``floor_bound``
    equals sqrt(delta) whenever that is dyadic, else the next dyadic
    bin edge below it, capped at 1/K when sqrt(delta) exceeds the high
    cutoff (keeps the parts an exact partition).
    """

    theta: float
    delta: float
    K: float
    high: list
    low: list
    lam_parts: dict
    floor: list
    floor_bound: float
    labels: list = field(default_factory=list)

    def all_parts(self) -> list:
        out = [("high", self.high), ("low", self.low)]
        for lam, boxes in self.lam_parts.items():
            out.append((f"lam_{lam:g}", boxes))
        out.append(("floor", self.floor))
        return out

    def classify(self, xi: np.ndarray) -> np.ndarray:
        """Index into ``labels`` for frame coordinates, shape (..., 3).

        The angular bins are half-open on the lower |xi_2| side, so
        every point of the slab gets exactly one label.
        """
        xi = np.asarray(xi, dtype=float)
        a2, a3 = np.abs(xi[..., 1]), np.abs(xi[..., 2])
        inv_k = 1.0 / self.K
        out = np.full(xi.shape[:-1], len(self.labels) - 1, dtype=int)
        out[a2 >= inv_k] = 0
        low_mask = (a2 < inv_k) & (a3 <= inv_k)
        out[low_mask] = 1
        lams = sorted(self.lam_parts, reverse=True)
        for i, lam in enumerate(lams):
            mask = (~low_mask) & (a2 >= lam / 2.0) & (a2 < lam)
            out[mask] = 2 + i
        return out


def slab_parts(c: Curve, theta: float, delta: float, K: float) -> SlabDecomposition:
    """Split the slab at ``theta`` into high, low and angular parts.

    ``K`` must be a power of two >= 4 so the dyadic angular bins meet
    the high cutoff exactly.  When sqrt(delta) > 1/K the middle range
    is empty and the floor fattens to the high cutoff (the same
    degenerate regime the frequency-side masks use), so the parts stay
    an exact partition at every delta.
    """
    if K < 4:
        raise ValueError("K must be at least 4")
    if abs(2.0 ** round(math.log2(K)) - K) > 1e-9 * K:
        raise ValueError("K must be a power of two")
    f = eval_frame(c, theta).matrix()
    inv_k = 1.0 / K
    high = [_box_from_intervals(f, [(-delta, delta), (s * inv_k, s * 1.0)[::o],
                                    (-1.0, 1.0)])
            for s, o in ((1, 1), (-1, -1))]
    low = [_box_from_intervals(f, [(-delta, delta), (-inv_k, inv_k),
                                   (-inv_k, inv_k)])]
    lams = _dyadic_lambdas(delta, K)
    lam_parts = {}
    for lam in lams:
        boxes = []
        for s2 in (1, -1):
            i2 = (lam / 2.0, lam) if s2 > 0 else (-lam, -lam / 2.0)
            for s3 in (1, -1):
                i3 = (inv_k, 1.0) if s3 > 0 else (-1.0, -inv_k)
                boxes.append(_box_from_intervals(
                    f, [(-delta, delta), i2, i3]))
        lam_parts[lam] = boxes
    floor_bound = lams[-1] / 2.0 if lams else min(math.sqrt(delta), inv_k)
    floor = [_box_from_intervals(f, [(-delta, delta),
                                     (-floor_bound, floor_bound), i3])
             for i3 in ((inv_k, 1.0), (-1.0, -inv_k))]
    labels = (["high", "low"] + [f"lam_{lam:g}" for lam in lams] + ["floor"])
    return SlabDecomposition(theta=theta, delta=delta, K=K, high=high,
                             low=low, lam_parts=lam_parts, floor=floor,
                             floor_bound=floor_bound, labels=labels)


def _lattice(lo: float, hi: float, step: float) -> np.ndarray:
    m0 = math.ceil(lo / step - 1e-9)
    m1 = math.floor(hi / step + 1e-9)
    return np.arange(m0, m1 + 1) * step


@dataclass(frozen=True)
class MiddlePlanks:
    """The three plank families of the angular middle case.

    ``fine[theta]`` is the top-right plank of the angular part at
    ``theta`` (delta x lam x 1); ``cover[sigma]`` the cone-covering
    plank (C1 lam^2 x C1 lam x C1); ``mid[tau]`` the intermediate plank
    (delta x C2 lam x C2).  Keys are the lattice representatives.
    """

    delta: float
    lam: float
    K: float
    C1: float
    C2: float
    fine: dict
    cover: dict
    mid: dict


def middle_planks(c: Curve, delta: float, lam: float, K: float,
                  C1: float = DEFAULT_C1, C2: float = DEFAULT_C2) -> MiddlePlanks:
    """Build the fine/cover/intermediate planks for one angular scale."""
    if not math.sqrt(delta) < lam <= 1.0 / K + 1e-12:
        raise ValueError("need sqrt(delta) < lam <= 1/K")
    if K < 4:
        raise ValueError("K must be at least 4")
    if not C1 >= 4.0 * C2 >= 4.0:
        raise ValueError("need C1 >> C2 >= 1 (enforced as C1 >= 4 C2)")
    lo, hi = c.domain
    inv_k = 1.0 / K
    fine = {}
    for theta in _lattice(lo, hi, delta):
        f = eval_frame(c, theta).matrix()
        fine[float(theta)] = _box_from_intervals(
            f, [(-delta, delta), (lam / 2.0, lam), (inv_k, 1.0)])
    cover = {}
    for sigma in _lattice(lo, hi, lam):
        f = eval_frame(c, sigma).matrix()
        cover[float(sigma)] = _box_from_intervals(
            f, [(-C1 * lam**2, C1 * lam**2), (-C1 * lam, C1 * lam),
                (inv_k / C1, C1)])
    mid = {}
    for tau in _lattice(lo, hi, delta / lam):
        f = eval_frame(c, tau).matrix()
        mid[float(tau)] = _box_from_intervals(
            f, [(-delta, delta), (-C2 * lam, C2 * lam), (inv_k / C2, C2)])
    return MiddlePlanks(delta=delta, lam=lam, K=K, C1=C1, C2=C2,
                        fine=fine, cover=cover, mid=mid)


@dataclass(frozen=True)
class ConeDecomposition:
    """Planks covering an annular neighbourhood of the light cone.

    ``entries`` aligns with ``planks``: entry i is (theta, sign) for
    plank i.  ``j`` fixes the radial scale 2^j, ``k`` the distance
    scale 2^(j-k) to the cone.
    """

    j: int
    k: int
    c_gamma: float
    planks: list
    entries: list


def cone_planks(c: Curve, j: int, k: int,
                c_gamma: float = MODEL_CONE_CONSTANT) -> ConeDecomposition:
    """Planks of dimensions ~ 2^j x 2^(j-k/2) x 2^(j-k) along the cone.

    The long axis is e3 (radial), the middle axis e2 (angular, width
    set by ``c_gamma``), the thin axis e1 (transversal).  For k < j the
    e1 coordinate has sign opposite to the box sign; for k = j it is
    unsigned with |coordinate| <= 2.  Requires an arclength curve so
    that gamma x gamma' = e3 exactly.
    """
    if not (isinstance(j, int) and isinstance(k, int) and 0 <= k <= j):
        raise ValueError("need integers 0 <= k <= j")
    if not c.arclength_flag:
        raise ValueError("cone planks require an arclength curve")
    lo, hi = c.domain
    thetas = _lattice(max(lo, 0.0), hi, 2.0 ** (-k / 2.0))
    planks, entries = [], []
    for theta in thetas:
        f = eval_frame(c, float(theta)).matrix()
        frame = np.stack([f[2], f[1], f[0]])
        for sign in (1, -1):
            radial = (sign * 2.0 ** (j - 1), sign * 2.0 ** (j + 1))[::sign]
            angular = (-(2.0 ** (j - k / 2.0)) / c_gamma,
                       (2.0 ** (j - k / 2.0)) / c_gamma)
            if k < j:
                transversal = (-sign * 2.0 ** (j - k + 1),
                               -sign * 2.0 ** (j - k - 1))[::sign]
            else:
                transversal = (-2.0, 2.0)
            planks.append(_box_from_intervals(
                frame, [radial, angular, transversal]))
            entries.append((float(theta), sign))
    return ConeDecomposition(j=j, k=k, c_gamma=c_gamma, planks=planks,
                             entries=entries)


def cone_distance(c: Curve, x: np.ndarray, n_grid: int = 2048) -> np.ndarray:
    """Distance from points to the cone {r e3(theta) : r real}.

    Both sheets are included (the backward planks live on the negative
    side).  The radius is optimized in closed form per grid direction;
    only the parameter is discretized.  ``x`` has shape (..., 3).
    """
    lo, hi = c.domain
    grid = np.linspace(lo, hi, n_grid)
    dirs = np.stack([eval_frame(c, float(t)).e3 for t in grid])
    x = np.asarray(x, dtype=float)
    dots = x @ dirs.T
    d2 = np.sum(x * x, axis=-1)[..., None] - dots**2
    return np.sqrt(np.clip(d2.min(axis=-1), 0.0, None))


def corner_distance_bounds(c: Curve, dec: ConeDecomposition,
                           n_grid: int = 2048) -> tuple[float, float]:
    """Min and max corner distance to the cone, in units of 2^(j-k)."""
    corners = np.concatenate([p.vertices() for p in dec.planks])
    d = cone_distance(c, corners, n_grid=n_grid)
    scale = 2.0 ** (dec.j - dec.k)
    return float(d.min() / scale), float(d.max() / scale)


def calibrate_cone_constant(c: Curve, pairs, candidates=None) -> float:
    """Smallest power-of-two angular constant passing the corner check.

    Doubles the constant until, for every (j, k) in ``pairs``, all
    corner distances to the cone lie in [2^(j-k-2), 2^(j-k+2)].
    """
    if candidates is None:
        candidates = [2.0**i for i in range(11)]
    for cand in candidates:
        ok = True
        for j, k in pairs:
            dec = cone_planks(c, j, k, c_gamma=cand)
            lo, hi = corner_distance_bounds(c, dec)
            if lo < 0.25 or hi > 4.0:
                ok = False
                break
        if ok:
            return float(cand)
    raise ValueError("no candidate constant passed the corner check")


def overlap_profile(planks: list, samples: int, seed: int) -> dict:
    """Monte-Carlo overlap count over the union's bounding box.

    Samples uniform points from the axis-aligned bounding box of all
    plank vertices, counts how many planks contain each, and reports
    the maximum and the nonzero histogram.
    """
    rng = np.random.default_rng(seed)
    corners = np.concatenate([p.vertices() for p in planks])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    pts = rng.uniform(lo, hi, size=(samples, 3))
    counts = np.zeros(samples, dtype=int)
    for p in planks:
        counts += p.contains(pts)
    values, freq = np.unique(counts, return_counts=True)
    return {"max_overlap": int(counts.max()),
            "histogram": {int(v): int(f) for v, f in zip(values, freq)},
            "n_samples": int(samples), "seed": int(seed)}


def high_separation_check(c: Curve, delta: float, K: float, C: float,
                          n_theta: int = 5, n_delta: int = 9,
                          n_samples: int = 200, seed: int = 0) -> float:
    """Worst normal-component distance between nearby high parts.

    For parameters theta and theta + D with D in [C delta, 1/C], points
    xi = a e2(theta) + b e3(theta) of the high plane piece (1/K <= |a|
    <= 1, |b| <= 1) are tested against the plane at theta + D via the
    exact normal component <gamma(theta + D), xi>.  Returns the minimum
    over the sweep in units of delta (the high/low split relies on this
    staying >= 10).
    """
    if C * delta > 1.0 / C:
        raise ValueError("empty parameter-offset range: need delta <= 1/C^2")
    lo, hi = c.domain
    rng = np.random.default_rng(seed)
    a_vals = np.concatenate([
        np.array([1.0 / K, -1.0 / K, 1.0, -1.0]),
        rng.uniform(1.0 / K, 1.0, n_samples) * rng.choice([-1, 1], n_samples)])
    b_vals = np.concatenate([
        np.array([1.0, -1.0, 1.0, -1.0]),
        rng.uniform(-1.0, 1.0, n_samples)])
    worst = math.inf
    offsets = np.geomspace(C * delta, 1.0 / C, n_delta)
    for theta in np.linspace(lo, hi - 1.0 / C, n_theta):
        f = eval_frame(c, float(theta))
        xi = a_vals[:, None] * f.e2 + b_vals[:, None] * f.e3
        for off in offsets:
            normal = c.point(float(theta + off))
            worst = min(worst, float(np.min(np.abs(xi @ normal))) / delta)
    return worst


def plank_coefficient_check(c: Curve, j: int, k: int,
                  c_gamma: float = MODEL_CONE_CONSTANT,
                  theta: float = None, n_samples: int = 10**4,
                  seed: int = 0, n_grid: int = 8192) -> dict:
    """Coefficient ranges of cone-plank points over the projection planes.

    Samples xi in the plank tau(theta', j, k, +), solves <xi, gamma(t)>
    = 0 for t (dense grid bracketing plus bisection), and for every
    root reads off eta1 = <xi, e2(t)>, eta2 = <xi, e3(t)>, i.e. the
    coefficients of xi = eta1 gamma'(t) + eta2 (gamma x gamma')(t).
    Returns the measured |eta1|, |eta2| ranges and the fraction of
    samples admitting at least one root.
    """
    if not c.arclength_flag:
        raise ValueError("requires an arclength curve")
    lo, hi = c.domain
    if theta is None:
        step = 2.0 ** (-k / 2.0)
        theta = step * round(0.5 * (lo + hi) / step)
    dec_frame = eval_frame(c, theta).matrix()
    frame = np.stack([dec_frame[2], dec_frame[1], dec_frame[0]])
    radial = (2.0 ** (j - 1), 2.0 ** (j + 1))
    angular = (-(2.0 ** (j - k / 2.0)) / c_gamma,
               (2.0 ** (j - k / 2.0)) / c_gamma)
    transversal = (-(2.0 ** (j - k + 1)), -(2.0 ** (j - k - 1)))
    plank = _box_from_intervals(frame, [radial, angular, transversal])
    rng = np.random.default_rng(seed)
    xi = plank.sample(n_samples, rng)

    grid = np.linspace(lo, hi, n_grid)
    gammas = np.stack([c.point(float(t)) for t in grid])
    g = xi @ gammas.T
    sign_change = g[:, :-1] * g[:, 1:] < 0
    rows, cols = np.nonzero(sign_change)
    t_lo, t_hi = grid[cols].copy(), grid[cols + 1].copy()
    g_lo = g[rows, cols].copy()
    for _ in range(30):
        mid = 0.5 * (t_lo + t_hi)
        g_mid = np.einsum("ij,ij->i",
                          np.stack([c.point(float(t)) for t in mid]),
                          xi[rows])
        left = g_lo * g_mid < 0
        t_hi = np.where(left, mid, t_hi)
        t_lo = np.where(left, t_lo, mid)
        g_lo = np.where(left, g_lo, g_mid)
    roots = 0.5 * (t_lo + t_hi)

    eta1 = np.empty(len(roots))
    eta2 = np.empty(len(roots))
    for i, (r, row) in enumerate(zip(roots, rows)):
        f = eval_frame(c, float(r))
        eta1[i] = xi[row] @ f.e2
        eta2[i] = xi[row] @ f.e3
    return {"fraction_expressible": len(np.unique(rows)) / n_samples,
            "eta1_abs_range": (float(np.abs(eta1).min()),
                               float(np.abs(eta1).max())) if len(roots)
            else (math.nan, math.nan),
            "eta2_abs_range": (float(np.abs(eta2).min()),
                               float(np.abs(eta2).max())) if len(roots)
            else (math.nan, math.nan),
            "n_roots": int(len(roots))}
