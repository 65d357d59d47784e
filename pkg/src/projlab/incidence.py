"""Tube-cell incidence counting and projection mass experiments.

Everything here works at a fixed dyadic resolution: tubes are unit-length
delta x delta planks pointing along curve directions, cells are delta-grid
cubes of [-1,1]^3, and all counts are exact -- conservative rasterization
proposes candidate cells and a separating-axis test filters them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import Curve, project
from .dyadic import DeltaSet, DyadicCube, extract_delta_s_set
from .fractal import DyadicMeasure
from .geometry import Plank, tube

PASS_CONSTANT = 8.0
HEAVY_CONSTANT = 10.0
MARSTRAND_CONSTANT = 2.0


# ---------------------------------------------------------------------------
# exact plank-vs-grid intersection


def _sat_frame(plank: Plank) -> tuple[np.ndarray, np.ndarray]:
    """Separating-axis directions and plank extents for grid-cube tests."""
    rows = [np.eye(3), plank.axes]
    cross = np.cross(np.eye(3)[:, None, :], plank.axes[None, :, :]).reshape(-1, 3)
    rows.append(cross[np.linalg.norm(cross, axis=1) > 1e-12])
    mat = np.vstack(rows)
    ext = np.abs(mat @ plank.axes.T) @ plank.half_lengths
    return mat, ext


def plank_cell_hits(plank: Plank, cells: np.ndarray, delta: float) -> np.ndarray:
    """Boolean mask over delta-grid cells whose closed cube meets the plank."""
    cells = np.atleast_2d(np.asarray(cells, dtype=np.int64))
    mat, ext_p = _sat_frame(plank)
    proj = np.abs(((cells + 0.5) * delta - plank.center) @ mat.T)
    ext_c = 0.5 * delta * np.abs(mat).sum(axis=1)
    return np.all(proj <= ext_c + ext_p + 1e-12, axis=1)


def rasterize_plank(plank: Plank, delta: float) -> np.ndarray:
    """All delta-cells meeting the plank, as an (n, 3) lexicographic array.

    Walks the long axis in delta/2 steps, dilates each visited cell by a
    conservative per-axis radius, then keeps exactly the candidates that
    pass the separating-axis test.
    """
    long_axis = int(np.argmax(plank.half_lengths))
    h = plank.half_lengths[long_axis]
    ts = np.arange(-h, h + delta / 4.0, delta / 2.0)
    line = plank.center + ts[:, None] * plank.axes[long_axis]
    seeds = np.unique(np.floor(line / delta).astype(np.int64), axis=0)
    others = [i for i in range(3) if i != long_axis]
    slack = (np.abs(plank.axes[others]).T @ plank.half_lengths[others]
             + 0.25 * delta * np.abs(plank.axes[long_axis]))
    rad = np.floor(slack / delta).astype(np.int64) + 1
    offs = np.stack(np.meshgrid(*[np.arange(-r, r + 1) for r in rad],
                                indexing="ij"), axis=-1).reshape(-1, 3)
    cand = np.unique((seeds[:, None, :] + offs[None, :, :]).reshape(-1, 3), axis=0)
    return cand[plank_cell_hits(plank, cand, delta)]


# ---------------------------------------------------------------------------
# tube families


@dataclass(frozen=True)
class TubeFamily:
    """Parallel delta-tubes in one curve direction with their spread audit.

    ``condition_constant`` is the measured maximum over dyadic grid cubes
    of side r in [delta, 1] of (#tubes meeting the cube) / (r/delta)^s.
    """

    theta: float
    tubes: tuple[Plank, ...]
    s: float
    condition_constant: float

    def __post_init__(self):
        if not self.tubes:
            raise ValueError("a tube family needs at least one tube")

    @property
    def delta(self) -> float:
        return 2.0 * float(np.min(self.tubes[0].half_lengths))

    def passes(self) -> bool:
        return (self.condition_constant <= PASS_CONSTANT
                and len(self.tubes) <= PASS_CONSTANT * self.delta**-self.s)


def tube_condition_constant(tubes, delta: float, s: float) -> float:
    """Exhaustive dyadic-cube scan of the tube concentration ratio."""
    l_max = round(math.log2(1.0 / delta))
    worst = 0.0
    for m in range(l_max + 1):
        r = delta * 2.0**m
        counts = np.unique(np.concatenate([rasterize_plank(t, r) for t in tubes]),
                           axis=0, return_counts=True)[1]
        worst = max(worst, counts.max() / 2.0 ** (m * s))
    return float(worst)


def tube_family(curve: Curve, theta: float, bases: np.ndarray, delta: float,
                s: float) -> TubeFamily:
    """Build the family over the given plane base points and audit it."""
    bases = np.atleast_2d(np.asarray(bases, dtype=float))
    tubes = tuple(tube(curve, theta, b, delta) for b in bases)
    return TubeFamily(theta, tubes, s, tube_condition_constant(tubes, delta, s))


# ---------------------------------------------------------------------------
# multiplicity and heavy cells


def multiplicity_map(families, delta: float) -> dict[tuple[int, int, int], int]:
    """Count, per delta-cell of [-1,1]^3, the tubes meeting it."""
    n = round(1.0 / delta)
    hits = []
    for fam in families:
        for t in fam.tubes:
            if abs(2.0 * float(np.min(t.half_lengths)) - delta) > 1e-12:
                raise ValueError("tube width disagrees with the grid delta")
            cells = rasterize_plank(t, delta)
            keep = np.all((cells >= -n) & (cells <= n - 1), axis=1)
            hits.append(cells[keep])
    if not hits:
        return {}
    cells, counts = np.unique(np.concatenate(hits), axis=0, return_counts=True)
    return {tuple(c): int(k) for c, k in zip(cells.tolist(), counts)}


@dataclass(frozen=True)
class HeavySet:
    """Cells whose tube multiplicity reached the threshold."""

    cells: frozenset
    threshold: float

    def __len__(self) -> int:
        return len(self.cells)


def heavy_cells(mult: dict, threshold: float) -> HeavySet:
    picked = frozenset(c for c, k in mult.items() if k >= threshold - 1e-9)
    return HeavySet(picked, threshold)


def heavy_threshold(n_theta: int, delta: float,
                    constant: float = HEAVY_CONSTANT) -> float:
    """Multiplicity cutoff ~ #directions / log^2(1/delta)."""
    return constant * n_theta / math.log(1.0 / delta) ** 2


def incidence_ratio(theta_set, heavy: HeavySet, delta: float, s: float) -> float:
    """#directions * #heavy cells * delta^(1+s)."""
    n = int(theta_set) if isinstance(theta_set, (int, np.integer)) else len(theta_set)
    return n * len(heavy) * delta ** (1.0 + s)


def direction_set(delta: float, s: float) -> DeltaSet:
    """A (delta, s)-separated direction set extracted from the full net."""
    l_max = round(math.log2(1.0 / delta))
    cells = [DyadicCube(l_max, (i,)) for i in range(2**l_max)]
    return extract_delta_s_set(cells, delta, s)


def bush_experiment(curve: Curve, delta: float, s: float,
                    threshold_constant: float = HEAVY_CONSTANT) -> dict:
    """All-tubes-through-the-origin configuration and its incidence ratio."""
    ds = direction_set(delta, s)
    families = [tube_family(curve, float(t), np.zeros(2), delta, s)
                for t in ds.points[:, 0]]
    mult = multiplicity_map(families, delta)
    thr = heavy_threshold(len(ds), delta, threshold_constant)
    heavy = heavy_cells(mult, thr)
    core = 0.0
    if heavy.cells:
        centers = (np.array(sorted(heavy.cells)) + 0.5) * delta
        core = float(np.abs(centers).max())
    return {"delta": delta, "s": s, "n_theta": len(ds),
            "n_tubes": sum(len(f.tubes) for f in families),
            "n_heavy": len(heavy), "threshold": thr,
            "ratio": incidence_ratio(ds, heavy, delta, s),
            "core_radius": core,
            "condition_max": max(f.condition_constant for f in families)}


def rotate_plank(plank: Plank, rot: np.ndarray) -> Plank:
    """Apply a rigid rotation about the origin to a plank."""
    return Plank(rot @ plank.center, plank.axes @ rot.T, plank.half_lengths)


# ---------------------------------------------------------------------------
# minimal tube covers (incidence lower-bound experiment)


def tube_covering_experiment(mu: DyadicMeasure, curve: Curve, delta: float,
                             eps: float) -> dict:
    """Size of the natural shadow cover forcing multiplicity delta^(eps-1).

    Picks ceil(delta^(eps-1)) evenly spread directions from the delta-net
    and, for each, one tube per occupied shadow cell of supp(mu); every
    support cell then meets at least that many tubes.  The result is
    compared against mass * c_alpha^-1 * delta^-(1+min(alpha,2)).
    """
    if abs(mu.delta - delta) > 1e-15:
        raise ValueError("measure resolution must equal delta")
    need = math.ceil(delta ** (eps - 1.0) - 1e-9)
    net = math.floor(1.0 / delta + 1e-9) + 1
    if need > net:
        raise ValueError("required multiplicity exceeds the direction count")
    centers = mu.cell_centers()
    w_size = 0
    for i in np.floor(np.arange(need) * (net / need)).astype(int):
        uv = project(curve, min(i * delta, 1.0), centers)
        w_size += len(np.unique(np.floor(uv / delta).astype(np.int64), axis=0))
    bound = (mu.total_mass / mu.c_alpha_certificate
             * delta ** -(1.0 + min(mu.alpha, 2.0)))
    return {"W_size": w_size, "bound": bound, "ratio": w_size / bound,
            "n_directions": need}


# ---------------------------------------------------------------------------
# projection mass sums (decay experiments)


def _plane_bins(uv: np.ndarray, delta: float, shape: str) -> np.ndarray:
    """Cell indices of projected points: delta balls or sqrt(delta) x delta
    rectangles whose long side runs along the curve tangent coordinate."""
    if shape == "ball":
        res = (delta, delta)
    elif shape == "rect":
        res = (math.sqrt(delta), delta)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return np.stack([np.floor(uv[:, 0] / res[0]),
                     np.floor(uv[:, 1] / res[1])], axis=1).astype(np.int64)


def _theta_net(delta: float, shape: str) -> np.ndarray:
    step = delta if shape == "ball" else math.sqrt(delta)
    return np.arange(0.0, 1.0 + step * 1e-9, step)


def greedy_cell_families(mu: DyadicMeasure, curve: Curve, delta: float,
                         shape: str, cap: float) -> dict[float, np.ndarray]:
    """Per direction, the floor(cap) heaviest projected cells of mu."""
    centers = mu.cell_centers()
    take = int(cap)
    families = {}
    for theta in _theta_net(delta, shape):
        bins = _plane_bins(project(curve, float(theta), centers), delta, shape)
        cells, inv = np.unique(bins, axis=0, return_inverse=True)
        masses = np.zeros(len(cells))
        np.add.at(masses, inv, mu.weights)
        order = np.argsort(-masses, kind="stable")[:take]
        families[float(theta)] = cells[np.sort(order)]
    return families


def projection_mass_sum(mu: DyadicMeasure, curve: Curve, families: dict,
                        delta: float, shape: str, cap: float) -> float:
    """Net-weighted total pushforward mass captured by the given cells.

    Ball shape: delta * sum over the delta-net; rect shape: sqrt(delta) *
    sum over the sqrt(delta)-net.  Each family must be duplicate-free and
    no larger than the cap.
    """
    centers = mu.cell_centers()
    total = 0.0
    for theta in sorted(families):
        cells = np.atleast_2d(np.asarray(families[theta], dtype=np.int64))
        if len(cells) and len(np.unique(cells, axis=0)) != len(cells):
            raise ValueError("families must consist of disjoint cells")
        if len(cells) > cap + 1e-9:
            raise ValueError("family size exceeds the corollary cap")
        if not len(cells):
            continue
        bins = _plane_bins(project(curve, theta, centers), delta, shape)
        shift = min(int(bins.min()), int(cells.min()))
        width = max(int(bins.max()), int(cells.max())) - shift + 1
        code = lambda a: (a[:, 0] - shift) * width + (a[:, 1] - shift)
        mask = np.isin(code(bins), code(cells))
        total += float(mu.weights[mask].sum())
    scale = delta if shape == "ball" else math.sqrt(delta)
    return scale * total


# ---------------------------------------------------------------------------
# planar projection warm-up


def _window_maxima(idx: np.ndarray, l_max: int) -> np.ndarray:
    """Max occupied-cell count over aligned dyadic windows, per level."""
    out = np.empty(l_max + 1, dtype=np.int64)
    for m in range(l_max + 1):
        out[m] = np.unique(idx >> m, return_counts=True)[1].max()
    return out


def marstrand_2d_experiment(points: np.ndarray, delta: float,
                            s_grid: np.ndarray | None = None,
                            condition_constant: float = MARSTRAND_CONSTANT,
                            ) -> dict:
    """Planar projection-counting check on a rasterized point set.

    For each direction theta in the delta-net of [0, pi], the projections
    are binned at delta and the aligned dyadic-window counts are compared
    with constant * (r/delta)^s at every dyadic r.  ``s_min`` is the
    smallest grid s for which at least half the directions pass, and
    ``gap`` = s_min - a_meas, where a_meas = log(#cells)/log(1/delta).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.linalg.norm(pts, axis=1).max() > 1.0 + delta:
        raise ValueError("points must lie in the unit disk")
    if s_grid is None:
        s_grid = np.round(np.arange(1, 31) * 0.05, 10)
    cells = np.unique(np.floor(pts / delta).astype(np.int64), axis=0)
    a_meas = math.log(len(cells)) / math.log(1.0 / delta)
    centers = (cells + 0.5) * delta
    l_max = round(math.log2(1.0 / delta))
    thetas = np.arange(0.0, math.pi + delta / 2.0, delta)
    maxima = np.empty((len(thetas), l_max + 1), dtype=np.int64)
    for i, theta in enumerate(thetas):
        proj = centers @ np.array([math.cos(theta), math.sin(theta)])
        idx = np.unique(np.floor(proj / delta).astype(np.int64))
        maxima[i] = _window_maxima(idx, l_max)
    levels = np.arange(l_max + 1)
    fractions = {}
    s_min, flagged = float(s_grid[-1]), True
    for s in s_grid:
        bound = condition_constant * 2.0 ** (levels * s) + 1e-9
        frac = float(np.mean(np.all(maxima <= bound, axis=1)))
        fractions[float(s)] = frac
        if flagged and frac >= 0.5:
            s_min, flagged = float(s), False
    return {"a_meas": a_meas, "s_min": s_min, "gap": s_min - a_meas,
            "pass_fractions": fractions, "all_failed": flagged,
            "condition_constant": condition_constant}


# ---------------------------------------------------------------------------
# planar instance generators


def segment_points_2d(delta: float, length: float = 0.875) -> np.ndarray:
    """delta/2-spaced samples of a centered horizontal segment."""
    x = np.arange(-length / 2.0, length / 2.0 + delta / 4.0, delta / 2.0)
    return np.stack([x, np.zeros_like(x)], axis=1)


def cantor_points_2d(exponent: float, delta: float, seed: int = 0) -> np.ndarray:
    """A Cantor-type set of the given exponent on the x-axis segment."""
    if not 0.0 < exponent <= 1.0:
        raise ValueError("exponent must lie in (0, 1]")
    l_max = round(math.log2(1.0 / delta))
    if abs(2.0**-l_max - delta) > 1e-12:
        raise ValueError("delta must be a dyadic scale 2^-k")
    rng = np.random.default_rng(seed)
    cur = np.array([0], dtype=np.int64)
    for lvl in range(1, l_max + 1):
        target = int(np.clip(round(2.0 ** (exponent * lvl)),
                             len(cur), min(2 * len(cur), 2**lvl)))
        doubles = rng.choice(len(cur), size=target - len(cur), replace=False)
        keep_bit = rng.integers(0, 2, size=len(cur))
        children = [2 * cur + keep_bit]
        children.append(2 * cur[doubles] + 1 - keep_bit[doubles])
        cur = np.sort(np.concatenate(children))
    x = (cur + 0.5) * delta - 0.5
    return np.stack([x, np.zeros_like(x)], axis=1)


def disk_points_2d(delta: float, radius: float = 0.9) -> np.ndarray:
    """Centers of the delta-cells filling a centered disk."""
    n = round(1.0 / delta)
    g = (np.arange(-n, n) + 0.5) * delta
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    return pts[np.linalg.norm(pts, axis=1) <= radius]
