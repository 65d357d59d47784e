"""Dyadic cubes, covers, the regularization exchange, and (delta, s)-sets.

Cells are half-open products [i 2^-k, (i+1) 2^-k)^n (top/right faces
removed) so same-level cells tile space disjointly.  A cover is a finite
set of cells with no mutual containment, weighted by the budget
sum r(D)^s; ``regularize_cover`` rewrites it until no dyadic ancestor
holds more level-k descendants than 2^((k-l)s).  ``extract_delta_s_set``
thins a set of occupied delta-cells to a delta-separated set whose
concentration on every dyadic ball is certified by ``verify_delta_s``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

#: A (delta, s) certificate passes when no dyadic ball exceeds this ratio.
CERTIFICATE_THRESHOLD = 8.0


@dataclass(frozen=True)
class DyadicCube:
    """Half-open dyadic cell of side 2^-level at integer lattice coords."""

    level: int
    coords: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    def low(self) -> np.ndarray:
        return np.array(self.coords, dtype=float) * self.side

    def center(self) -> np.ndarray:
        return (np.array(self.coords, dtype=float) + 0.5) * self.side

    def ancestor(self, level: int) -> "DyadicCube":
        if level > self.level:
            raise ValueError("ancestor level must not exceed cell level")
        shift = self.level - level
        return DyadicCube(level, tuple(c >> shift for c in self.coords))

    def contains_point(self, x: Sequence[float]) -> bool:
        lo = self.low()
        return bool(np.all(lo <= x) and np.all(np.asarray(x) < lo + self.side))

    def contains_cube(self, other: "DyadicCube") -> bool:
        """True iff ``other`` is a (weak) descendant of this cell."""
        if other.level < self.level or other.dim != self.dim:
            return False
        return other.ancestor(self.level) == self


def cube_of_point(x: Sequence[float], level: int) -> DyadicCube:
    scaled = np.floor(np.asarray(x, dtype=float) * 2.0**level).astype(int)
    return DyadicCube(level, tuple(int(v) for v in scaled))


class DyadicCover:
    """Finite antichain of dyadic cells with an s-dimensional budget."""

    def __init__(self, cells: Iterable[DyadicCube], s: float):
        cells = list(cells)
        if cells:
            dims = {c.dim for c in cells}
            if len(dims) != 1:
                raise ValueError("cover cells must share one dimension")
        index = set(cells)
        if len(index) != len(cells):
            raise ValueError("duplicate cells in cover")
        for c in cells:
            for lvl in range(c.level - 1, -1, -1):
                if c.ancestor(lvl) in index:
                    raise ValueError("cover contains nested cells")
        self.cells = index
        self.s = float(s)

    @property
    def budget(self) -> float:
        return sum(c.side**self.s for c in self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def to_json(self) -> list[dict]:
        ordered = sorted(self.cells, key=lambda c: (c.level, c.coords))
        return [{"level": c.level, "coords": list(c.coords)} for c in ordered]

    @classmethod
    def from_json(cls, rows: Sequence[dict], s: float) -> "DyadicCover":
        return cls([DyadicCube(r["level"], tuple(r["coords"])) for r in rows], s)


@dataclass(frozen=True)
class DeltaSet:
    """A delta-separated point set with its concentration certificate."""

    points: np.ndarray
    delta: float
    s: float
    certificate: float

    def __len__(self) -> int:
        return len(self.points)

    def to_json(self) -> dict:
        return {"delta": self.delta, "s": self.s,
                "worst_ratio": self.certificate,
                "points": np.asarray(self.points).tolist()}


def separated_count(points: Sequence[Sequence[float]], delta: float) -> int:
    """Greedy delta-net cardinality.

    Points are visited in lexicographic order and kept when at least
    ``delta`` (Euclidean) from every kept point.  This is within the
    usual factor 2 of the maximal delta-separated subset size.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return 0
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    n = pts.shape[1]
    kept: dict[tuple[int, ...], list[np.ndarray]] = {}
    offsets = list(itertools.product((-1, 0, 1), repeat=n))
    # relative slack so exactly-delta-spaced grids survive float rounding
    cutoff = delta * delta * (1.0 - 1e-9)
    count = 0
    for p in pts:
        cell = tuple(int(v) for v in np.floor(p / delta))
        ok = True
        for off in offsets:
            for q in kept.get(tuple(c + o for c, o in zip(cell, off)), ()):
                if float(np.sum((p - q) ** 2)) < cutoff:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            kept.setdefault(cell, []).append(p)
            count += 1
    return count


def _occupied_counts(points: np.ndarray, levels: Iterable[int]) -> dict[int, int]:
    counts = {}
    for k in sorted(levels, reverse=True):
        cells = np.floor(points * 2.0**k).astype(np.int64)
        counts[k] = len(np.unique(cells, axis=0))
    return counts


def hausdorff_content_upper(obj: Union[np.ndarray, DyadicCover], t: float,
                            finest_level: int = 10) -> float:
    """Upper bound on the t-dimensional Hausdorff content.

    Minimum over single-scale dyadic covers at levels 0..finest_level of
    (number of occupied cells) * side^t.  Accepts a point array or a
    DyadicCover (whose union is covered at each level).
    """
    if t <= 0:
        raise ValueError("exponent t must be positive")
    best = math.inf
    if isinstance(obj, DyadicCover):
        cells = list(obj.cells)
        for k in range(finest_level + 1):
            total = 0
            fine_ancestors = set()
            for c in cells:
                if c.level <= k:
                    total += 2 ** ((k - c.level) * c.dim)
                else:
                    fine_ancestors.add(c.ancestor(k))
            total += len(fine_ancestors)
            best = min(best, total * (2.0**-k) ** t)
        return best
    points = np.atleast_2d(np.asarray(obj, dtype=float))
    counts = _occupied_counts(points, range(finest_level + 1))
    for k, n_cells in counts.items():
        best = min(best, n_cells * (2.0**-k) ** t)
    return best


def _find_violation(cells: set[DyadicCube], s: float):
    """Smallest-level, lexicographically first ancestor violating (3)."""
    per_ancestor: dict[DyadicCube, dict[int, int]] = {}
    for c in cells:
        for lvl in range(c.level - 1, -1, -1):
            anc = c.ancestor(lvl)
            per_ancestor.setdefault(anc, {}).setdefault(c.level, 0)
            per_ancestor[anc][c.level] += 1
    worst = None
    for anc, level_counts in per_ancestor.items():
        if any(cnt > 2.0 ** ((k - anc.level) * s)
               for k, cnt in level_counts.items()):
            key = (anc.level, anc.coords)
            if worst is None or key < (worst.level, worst.coords):
                worst = anc
    return worst


def regularize_cover(cover: DyadicCover, s: float) -> DyadicCover:
    """Lemma-style exchange until the branching condition holds.

    Whenever some dyadic cell D at level l holds more than 2^((k-l)s)
    cover cells at a level k > l, all cells under D are replaced by D
    itself.  The removed budget exceeds the added r(D)^s, so the loop
    terminates; violations are processed coarsest-first with
    lexicographic tie-break, making the output deterministic.
    """
    cells = set(cover.cells)
    while True:
        bad = _find_violation(cells, s)
        if bad is None:
            break
        cells = {c for c in cells if not bad.contains_cube(c)}
        cells.add(bad)
    return DyadicCover(cells, s)


def check_branching_condition(cover: DyadicCover, s: float) -> bool:
    """Exhaustive check of condition (3) on a cover."""
    return _find_violation(set(cover.cells), s) is None


def rasterize_cover(cover: DyadicCover, level: int) -> set[tuple[int, ...]]:
    """Level-``level`` cells covered by the union of the cover."""
    out: set[tuple[int, ...]] = set()
    for c in cover.cells:
        if c.level >= level:
            out.add(c.ancestor(level).coords)
        else:
            span = 2 ** (level - c.level)
            base = tuple(v * span for v in c.coords)
            for off in itertools.product(range(span), repeat=c.dim):
                out.add(tuple(b + o for b, o in zip(base, off)))
    return out


def _quota_split(quota: int, counts: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Largest-remainder proportional split of ``quota``, then caps."""
    total = counts.sum()
    shares = quota * counts / total
    base = np.floor(shares).astype(np.int64)
    short = quota - int(base.sum())
    if short > 0:
        remainder = shares - base
        for i in np.argsort(-remainder, kind="stable")[:short]:
            base[i] += 1
    return np.minimum(base, caps)


def extract_delta_s_set(cells: Sequence[DyadicCube], delta: float,
                        s: float) -> DeltaSet:
    """Thin occupied delta-cells to a (delta, s)-set via a quota tree.

    The root receives quota ceil(delta^-s).  Each node splits its quota
    among nonempty dyadic children proportionally to their cell counts,
    capped at ceil(2^s) times the fair share, at the child's own cell
    count, and at the structural per-level bound ceil(2^((l_max-l)s));
    delta-cells that still hold quota contribute their centers.  The
    returned certificate is the worst dyadic-ball ratio measured by
    :func:`verify_delta_s`.
    """
    if not cells:
        raise ValueError("no occupied cells supplied")
    l_max = round(math.log2(1.0 / delta))
    if abs(2.0**-l_max - delta) > 1e-12:
        raise ValueError("delta must be a dyadic scale 2^-k")
    if any(c.level != l_max for c in cells):
        raise ValueError(f"all cells must sit at level {l_max}")
    coords = np.array(sorted({c.coords for c in cells}), dtype=np.int64)
    n = coords.shape[1]
    ceil_2s = math.ceil(2.0**s)
    selected: list[np.ndarray] = []

    def descend(level: int, block: np.ndarray, quota: int) -> None:
        if quota < 1:
            return
        if level == l_max:
            # block is a single delta-cell here
            selected.append((block[0] + 0.5) * delta)
            return
        child_keys = block >> (l_max - level - 1)
        keys, starts, counts = np.unique(child_keys, axis=0,
                                         return_index=True,
                                         return_counts=True)
        # np.unique sorts keys lexicographically, fixing a deterministic
        # child order; recover each child's cells from the sorted block.
        order = np.lexsort(child_keys.T[::-1])
        sorted_block = block[order]
        boundaries = np.concatenate([[0], np.cumsum(counts)])
        fair = quota / len(keys)
        structural = math.ceil(2.0 ** ((l_max - level - 1) * s))
        caps = np.minimum(counts, min(math.ceil(ceil_2s * fair), structural))
        quotas = _quota_split(quota, counts, caps)
        for i in range(len(keys)):
            if quotas[i] >= 1:
                descend(level + 1, sorted_block[boundaries[i]:boundaries[i + 1]],
                        int(quotas[i]))

    root_quota = math.ceil(delta**-s)
    descend(0, coords, root_quota)
    points = np.array(selected, dtype=float).reshape(-1, n)
    report = _ball_scan(points, delta, s)
    return DeltaSet(points=points, delta=delta, s=s,
                    certificate=report["worst_ratio"])


def _ball_scan(points: np.ndarray, delta: float, s: float) -> dict:
    """Worst ratio #(P in B_r) / (r/delta)^s over all dyadic balls.

    Balls sit at dyadic cube centers with radius equal to the cube
    circumradius; every scale r = 2^-m in [delta, 1] is scanned.  For a
    delta-separated P the intersection count equals the separated count.
    """
    l_max = round(math.log2(1.0 / delta))
    n = points.shape[1]
    worst = 0.0
    witness = None
    if len(points) == 0:
        return {"ok": True, "worst_ratio": 0.0, "witness_ball": None}
    tree = cKDTree(points)
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=n)))
    for m in range(l_max + 1):
        r = 2.0**-m
        radius = 0.5 * r * math.sqrt(n)
        occupied = np.unique(np.floor(points / r).astype(np.int64), axis=0)
        centers = np.unique((occupied[:, None, :] + offsets[None, :, :])
                            .reshape(-1, n), axis=0)
        center_pts = (centers + 0.5) * r
        counts = tree.query_ball_point(center_pts, radius + 1e-12,
                                       return_length=True)
        i = int(np.argmax(counts))
        ratio = counts[i] / (r / delta) ** s
        if ratio > worst:
            worst = float(ratio)
            witness = {"level": m, "coords": centers[i].tolist()}
    return {"ok": worst <= CERTIFICATE_THRESHOLD, "worst_ratio": worst,
            "witness_ball": witness}


def verify_delta_s(ds: DeltaSet) -> dict:
    """Exhaustive dyadic-ball certificate for a claimed (delta, s)-set."""
    return _ball_scan(np.atleast_2d(np.asarray(ds.points, dtype=float)),
                      ds.delta, ds.s)
