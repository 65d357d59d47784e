"""Seeded fractal test sets and Frostman-normalized dyadic measures.

``cantor_cloud`` grows a product of three randomized 1-D Cantor sets
whose combined branching factor per dyadic level is 2^alpha, then emits
one point per surviving delta-cube.  ``frostman_measure`` puts uniform
weights on the occupied cubes and rescales so the dyadic-cube proxy for
sup_Q mu(Q)/r(Q)^alpha equals 1 exactly; the true ball-based constant
differs by at most a fixed dimensional factor, which downstream
tolerances absorb.  Pushforwards under the plane projections of a curve
redistribute cube masses by center-point rasterization.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .curve import Curve, project


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    nominal_dimension: float
    generator: str
    seed: int
    resolution: float

    def __len__(self) -> int:
        return len(self.points)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.points, delimiter=",", header="x,y,z",
                   comments="")


@dataclass(frozen=True)
class DyadicMeasure:
    """Weights on occupied level-log2(1/delta) cells, any dimension."""

    delta: float
    coords: np.ndarray
    weights: np.ndarray
    alpha: float
    c_alpha_certificate: float

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def cell_centers(self) -> np.ndarray:
        return (self.coords + 0.5) * self.delta

    def to_json(self) -> dict:
        return {"delta": self.delta, "alpha": self.alpha,
                "cells": [{"coords": c.tolist(), "weight": float(w)}
                          for c, w in zip(self.coords, self.weights)]}

    @classmethod
    def from_json(cls, blob: dict) -> "DyadicMeasure":
        coords = np.array([c["coords"] for c in blob["cells"]], dtype=np.int64)
        weights = np.array([c["weight"] for c in blob["cells"]], dtype=float)
        alpha = float(blob["alpha"])
        m = cls(float(blob["delta"]), coords, weights, alpha, 0.0)
        return cls(m.delta, coords, weights, alpha, c_alpha(m, alpha))


def _branching_exponents(alpha: float, axis_aligned: bool) -> list[float]:
    if axis_aligned:
        exps = []
        rest = alpha
        for _ in range(3):
            take = min(1.0, rest)
            exps.append(take)
            rest -= take
        return exps
    return [alpha / 3.0] * 3


def _target_counts(alpha: float, levels: int,
                   axis_aligned: bool) -> list[list[int]]:
    """Per-axis survivor-count quotas whose product tracks 2^(alpha*l).

    Each axis may take the floor or ceiling of its own branching
    schedule b_i^l (clipped to the at-most-doubling range); the combo
    whose product count is closest to 2^(alpha*l) in log wins, so the
    box-counting slope of the assembled cloud stays tight even for
    small alpha.
    """
    exps = _branching_exponents(alpha, axis_aligned)
    n: list[list[int]] = [[1], [1], [1]]
    for lvl in range(1, levels + 1):
        options = []
        for i in range(3):
            lo, hi = n[i][-1], min(2 * n[i][-1], 2**lvl)
            raw = 2.0 ** (exps[i] * lvl)
            cand = {int(np.clip(np.floor(raw), lo, hi)),
                    int(np.clip(np.ceil(raw), lo, hi))}
            options.append(sorted(cand))
        best = min(itertools.product(*options),
                   key=lambda t: (abs(float(np.log2(np.prod(t, dtype=float)))
                                      - alpha * lvl), t))
        for i in range(3):
            n[i].append(best[i])
    return n


def _axis_survivors(targets: list[int],
                    rng: np.random.Generator) -> list[np.ndarray]:
    """1-D Cantor set hitting exact per-level counts, placement seeded.

    Parents chosen to double keep both dyadic children; every other
    survivor keeps one uniformly chosen child.  Returns surviving
    interval indices per level 0..len(targets)-1.
    """
    out = [np.array([0], dtype=np.int64)]
    for lvl in range(1, len(targets)):
        cur = out[-1]
        doubles = targets[lvl] - len(cur)
        doubled = np.zeros(len(cur), dtype=bool)
        if doubles > 0:
            doubled[rng.choice(len(cur), size=doubles, replace=False)] = True
        pick = rng.integers(0, 2, size=len(cur))
        children = []
        for i, c in enumerate(cur):
            if doubled[i]:
                children.extend((2 * c, 2 * c + 1))
            else:
                children.append(2 * c + int(pick[i]))
        out.append(np.array(sorted(children), dtype=np.int64))
    return out


def cantor_axis_counts(alpha: float, levels: int,
                       axis_aligned: bool = False) -> np.ndarray:
    """Occupied-cube counts of the product cloud per level 0..levels.

    Exact for the product construction: the level-m box count is the
    product of the per-axis survivor counts, which are quota-determined
    and independent of the seed.
    """
    targets = _target_counts(alpha, levels, axis_aligned)
    counts = np.ones(levels + 1)
    for seq in targets:
        counts *= np.array(seq, dtype=float)
    return counts


def _cantor_axes(alpha: float, levels: int, seed: int,
                 axis_aligned: bool) -> list[list[np.ndarray]]:
    if not 0.0 < alpha <= 3.0:
        raise ValueError("alpha must lie in (0, 3]")
    rng = np.random.default_rng(seed)
    targets = _target_counts(alpha, levels, axis_aligned)
    return [_axis_survivors(t, rng) for t in targets]


def cantor_cloud(alpha: float, delta: float, seed: int = 0,
                 axis_aligned: bool = False) -> PointCloud:
    """Product-Cantor cloud of nominal dimension alpha at resolution delta.

    One point (cube center) per surviving delta-cube.  With
    ``axis_aligned`` the dimension budget fills axes one at a time
    (alpha=1 yields a line-like set); otherwise it is spread evenly.
    """
    levels = round(np.log2(1.0 / delta))
    if abs(2.0**-levels - delta) > 1e-12:
        raise ValueError("delta must be a dyadic scale 2^-j")
    axes = _cantor_axes(alpha, levels, seed, axis_aligned)
    finals = [ax[-1] for ax in axes]
    gx, gy, gz = np.meshgrid(finals[0], finals[1], finals[2], indexing="ij")
    cells = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    points = (cells + 0.5) * delta
    mode = "axis" if axis_aligned else "even"
    return PointCloud(points=points, nominal_dimension=alpha,
                      generator=f"cantor-{mode}", seed=seed, resolution=delta)


def ball_cloud(delta: float, radius: float = 0.5,
               center: float = 0.5) -> PointCloud:
    """All delta-cube centers inside a ball; a full-dimensional control."""
    levels = round(np.log2(1.0 / delta))
    g = (np.arange(2**levels) + 0.5) * delta
    gx, gy, gz = np.meshgrid(g, g, g, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    keep = np.sum((pts - center) ** 2, axis=1) <= radius**2
    return PointCloud(points=pts[keep], nominal_dimension=3.0,
                      generator="ball", seed=0, resolution=delta)


def _level_max_masses(coords: np.ndarray, weights: np.ndarray,
                      levels: int) -> list[float]:
    """Max cell mass per level from finest (index levels) up to 0."""
    out = [0.0] * (levels + 1)
    cur_coords, cur_weights = coords, weights
    for lvl in range(levels, -1, -1):
        keys, inverse = np.unique(cur_coords, axis=0, return_inverse=True)
        masses = np.zeros(len(keys))
        np.add.at(masses, inverse, cur_weights)
        out[lvl] = float(masses.max())
        cur_coords, cur_weights = keys >> 1, masses
    return out


def c_alpha(mu: DyadicMeasure, alpha: float) -> float:
    """Dyadic-cube proxy for sup mu(B_r)/r^alpha, exhaustive over levels.

    The true ball-based supremum lies within a factor 3^alpha * 2^alpha
    of this value (a ball of radius r meets at most 3^n dyadic cubes of
    side between r and 2r), which downstream tolerances absorb.
    """
    levels = round(np.log2(1.0 / mu.delta))
    maxima = _level_max_masses(mu.coords, mu.weights, levels)
    return max(m / (2.0**-lvl) ** alpha for lvl, m in enumerate(maxima))


def frostman_measure(cloud: PointCloud, alpha: float) -> DyadicMeasure:
    """Uniform weights on occupied cubes, scaled so the certificate is 1."""
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    pts = np.asarray(cloud.points, dtype=float)
    delta = cloud.resolution
    coords = np.unique(np.floor(pts / delta).astype(np.int64), axis=0)
    weights = np.ones(len(coords))
    raw = DyadicMeasure(delta, coords, weights, alpha, 0.0)
    scale = c_alpha(raw, alpha)
    return DyadicMeasure(delta, coords, weights / scale, alpha, 1.0)


def measure_from_cells(delta: float, coords: np.ndarray, weights: np.ndarray,
                       alpha: float) -> DyadicMeasure:
    """Assemble a measure from explicit cells and certify it."""
    coords = np.asarray(coords, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    m = DyadicMeasure(delta, coords, weights, alpha, 0.0)
    return DyadicMeasure(delta, coords, weights, alpha, c_alpha(m, alpha))


def scale_measure(mu: DyadicMeasure, factor: float) -> DyadicMeasure:
    return DyadicMeasure(mu.delta, mu.coords, mu.weights * factor, mu.alpha,
                         mu.c_alpha_certificate * factor)


def pushforward(mu: DyadicMeasure, c: Curve, theta: float,
                out_resolution: float) -> DyadicMeasure:
    """Project cell centers onto gamma(theta)^perp and rebin the masses.

    The output is a 2-D dyadic measure in the (e2, e3) frame coordinates
    at ``out_resolution``; total mass is conserved.
    """
    if out_resolution < mu.delta - 1e-15:
        raise ValueError("output resolution must not be finer than delta")
    uv = project(c, theta, mu.cell_centers())
    cells = np.floor(uv / out_resolution).astype(np.int64)
    keys, inverse = np.unique(cells, axis=0, return_inverse=True)
    masses = np.zeros(len(keys))
    np.add.at(masses, inverse, mu.weights)
    out = DyadicMeasure(out_resolution, keys, masses, mu.alpha, 0.0)
    return DyadicMeasure(out_resolution, keys, masses, mu.alpha,
                         c_alpha(out, mu.alpha))
