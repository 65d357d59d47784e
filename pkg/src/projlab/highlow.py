"""Grid-sampled field synthesis and discrete-Fourier frequency splitting.

Everything is rescaled: tubes are 1 x 1 x 1/delta boxes living on a
periodic grid of physical size 2/delta, and each direction's spectrum
sits in the slab {|nu.e1| <= delta, |nu.e2| <= 1, |nu.e3| <= 1}.  Fields
are built analytically in frequency space (separable raised-cosine
transforms times lattice phase sums), so each direction's spectrum is a
sparse explicit set of modes and every support statement is exact.

Conventions: mode nu_k = k/(N h) cycles per unit, f(x) = sum_k c_k
e^(2 pi i nu_k . x), and the stored spectrum is fhat(nu_k) = c_k (Nh)^3,
which approximates the continuum Fourier transform of the bump sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import Curve, eval_frame
from .dyadic import DyadicCube, extract_delta_s_set
from .geometry import Plank, _dyadic_lambdas, tube
from .incidence import TubeFamily, _window_maxima, direction_set

TAPER_CELLS = 2
DEFAULT_H = 0.25
BASE_WINDOW = 0.5
DECOUPLING_GRIDS = {32: 96, 64: 160, 128: 288}


# ---------------------------------------------------------------------------
# grid functions


@dataclass(frozen=True)
class Grid:
    """Periodic sampling lattice: n points per axis, spacing h."""

    n: int
    h: float

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("grid size must be a positive even integer")

    @property
    def length(self) -> float:
        return self.n * self.h

    @property
    def dnu(self) -> float:
        return 1.0 / self.length

    def freqs(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, self.h)


@dataclass
class GridFunction:
    """Complex samples over the periodic lattice with a cached spectrum."""

    grid: Grid
    values: np.ndarray
    fourier_cache: np.ndarray | None = None

    def fourier(self) -> np.ndarray:
        if self.fourier_cache is None:
            self.fourier_cache = np.fft.fftn(self.values) * self.grid.h**3
        return self.fourier_cache

    @classmethod
    def from_fourier(cls, grid: Grid, fhat: np.ndarray) -> "GridFunction":
        values = np.fft.ifftn(fhat) / grid.h**3
        return cls(grid, values, fhat)

    def l2_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2)) * self.grid.h**3

    def parseval_gap(self) -> float:
        freq = float(np.sum(np.abs(self.fourier()) ** 2)) / self.grid.length**3
        spatial = self.l2_sq()
        return abs(spatial - freq) / max(spatial, 1e-300)


def lp_norm(g: GridFunction, p, region: np.ndarray | None = None) -> float:
    """Riemann-sum L^p norm, optionally restricted to a boolean cell mask."""
    vals = np.abs(g.values if region is None else g.values[region])
    if p == math.inf or p == "inf":
        return float(vals.max()) if vals.size else 0.0
    if p not in (1, 2, 6):
        raise ValueError("p must be 1, 2, 6 or inf")
    return float(np.sum(vals ** p) * g.grid.h**3) ** (1.0 / p)


# ---------------------------------------------------------------------------
# raised-cosine profiles and their transforms


def raised_cosine_profile(t: np.ndarray, core: float, ramp: float) -> np.ndarray:
    """1 on |t| <= core, cos^2 rolloff over ramp, exactly 0 beyond."""
    a = np.abs(np.asarray(t, dtype=float))
    if ramp == 0.0:
        return np.where(a <= core, 1.0, 0.0)
    inner = np.clip((a - core) / ramp, 0.0, 1.0)
    out = np.cos(0.5 * math.pi * inner) ** 2
    return np.where(a >= core + ramp, 0.0, np.where(a <= core, 1.0, out))


def raised_cosine_transform(nu: np.ndarray, core: float, ramp: float) -> np.ndarray:
    """Exact Fourier transform of :func:`raised_cosine_profile`.

    The profile equals the indicator of [-(core + ramp/2), core + ramp/2]
    convolved with a normalized cosine pulse of width ramp, so the
    transform is the product of the two closed forms.
    """
    nu = np.asarray(nu, dtype=float)
    half = core + 0.5 * ramp
    box = 2.0 * half * np.sinc(2.0 * half * nu)
    if ramp == 0.0:
        return box
    den = 1.0 - (2.0 * ramp * nu) ** 2
    pulse = np.where(np.abs(den) < 1e-8, math.pi / 4.0,
                     np.cos(math.pi * ramp * nu) / np.where(den == 0.0, 1.0, den))
    return box * pulse


def _ramp_up(t_abs: np.ndarray, edge: float, width: float) -> np.ndarray:
    """0 below edge - width/2, 1 above edge + width/2, sin^2 in between."""
    u = np.clip((t_abs - edge + 0.5 * width) / width, 0.0, 1.0)
    return np.sin(0.5 * math.pi * u) ** 2


# ---------------------------------------------------------------------------
# frequency masks


@dataclass(frozen=True)
class FrequencyMask:
    """Tapered indicator of a plank union in frequency space.

    Exactly 1 on each plank eroded by margin/2 per axis, exactly 0
    outside every plank dilated by margin/2, cos^2 profile in between.
    """

    planks: tuple
    margin: float

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for p in self.planks:
            rel = (pts - p.center) @ p.axes.T
            piece = np.ones(pts.shape[:-1])
            for i in range(3):
                piece = piece * (1.0 - _ramp_up(np.abs(rel[..., i]),
                                                float(p.half_lengths[i]),
                                                self.margin))
            out = np.maximum(out, piece)
        return out


@dataclass(frozen=True)
class SlabMasks:
    """Exact partition of unity over (nu2, nu3) mirroring the slab split.

    high: |nu2| >= 1/K; low: |nu2| <= 1/K and |nu3| <= 1/K; one angular
    piece per dyadic lam in (sqrt(delta), 1/K] plus the floor piece,
    each confined to |nu3| >= 1/K.  All edges use sin^2 ramps of one
    shared width, so the telescoping sum over parts is exactly 1.
    """

    delta: float
    K: float
    width: float
    lams: tuple
    floor_bound: float

    @classmethod
    def build(cls, delta: float, K: float, dnu: float) -> "SlabMasks":
        if K < 4 or abs(2.0 ** round(math.log2(K)) - K) > 1e-9 * K:
            raise ValueError("K must be a power of two >= 4")
        if math.sqrt(delta) > 1.0 / K + 1e-12:
            lams: tuple = ()
            fb = 1.0 / K
        else:
            lams = tuple(_dyadic_lambdas(delta, K))
            fb = lams[-1] / 2.0 if lams else math.sqrt(delta)
        if dnu > fb + 1e-12:
            raise ValueError("grid too coarse to resolve the mask bins")
        return cls(delta, K, min(TAPER_CELLS * dnu, fb), lams, fb)

    def part_names(self) -> list[str]:
        return (["high", "low"] + [f"lam_{lam:g}" for lam in self.lams]
                + ["floor"])

    def weight(self, name: str, nu2: np.ndarray, nu3: np.ndarray) -> np.ndarray:
        a2, a3 = np.abs(nu2), np.abs(nu3)
        inv_k = 1.0 / self.K
        if name == "high":
            return _ramp_up(a2, inv_k, self.width)
        if name == "low":
            return ((1.0 - _ramp_up(a2, inv_k, self.width))
                    * (1.0 - _ramp_up(a3, inv_k, self.width)))
        if name == "floor":
            return ((1.0 - _ramp_up(a2, self.floor_bound, self.width))
                    * _ramp_up(a3, inv_k, self.width))
        if name.startswith("lam_"):
            lam = float(name[4:])
            return ((_ramp_up(a2, lam / 2.0, self.width)
                     - _ramp_up(a2, lam, self.width))
                    * _ramp_up(a3, inv_k, self.width))
        raise ValueError(f"unknown part {name!r}")


# ---------------------------------------------------------------------------
# synthesis


@dataclass
class ThetaField:
    """One direction's contribution as a sparse explicit spectrum."""

    grid: Grid
    theta: float
    frame: np.ndarray
    mode_index: np.ndarray
    fhat: np.ndarray
    n_tubes: int

    def modes(self) -> np.ndarray:
        """World frequency coordinates of the active modes, shape (m, 3)."""
        n = self.grid.n
        k = np.stack(np.unravel_index(self.mode_index, (n, n, n)), axis=1)
        k = np.where(k >= n // 2, k - n, k)
        return k * self.grid.dnu

    def field(self) -> GridFunction:
        full = np.zeros(self.grid.n**3, dtype=complex)
        full[self.mode_index] = self.fhat
        return GridFunction.from_fourier(
            self.grid, full.reshape((self.grid.n,) * 3))

    def l2_sq(self) -> float:
        return float(np.sum(np.abs(self.fhat) ** 2)) / self.grid.length**3


def _phase_sum(nu1: np.ndarray, nu2: np.ndarray, nu3: np.ndarray,
               coords: np.ndarray, scale: float) -> np.ndarray:
    """sum_T exp(-2 pi i scale <T center, nu>) over frame coordinates.

    Factors into a column sum times a row sum whenever the centers form
    a product of (long offset, base1) columns with a common base2 set.
    """
    cols, inv1 = np.unique(coords[:, :2], axis=0, return_inverse=True)
    rows, inv2 = np.unique(coords[:, 2], return_inverse=True)
    filled = np.zeros((len(cols), len(rows)), dtype=bool)
    filled[inv1, inv2] = True
    if filled.all() and len(cols) * len(rows) == len(coords):
        p1 = np.zeros(nu1.shape, dtype=complex)
        for o, b1 in cols:
            p1 += np.exp(-2j * math.pi * scale * (o * nu1 + b1 * nu2))
        p2 = np.zeros(nu3.shape, dtype=complex)
        for b2 in rows:
            p2 += np.exp((-2j * math.pi * scale * b2) * nu3)
        return p1 * p2
    out = np.zeros(np.broadcast(nu1, nu2, nu3).shape, dtype=complex)
    for o, b1, b2 in coords:
        out += np.exp(-2j * math.pi * scale * (o * nu1 + b1 * nu2 + b2 * nu3))
    return out


def synthesize_field(curve: Curve, families, delta: float,
                     n: int | None = None, h: float = DEFAULT_H,
                     ) -> tuple[list[ThetaField], GridFunction]:
    """Build per-direction fields and their sum from tube families.

    Families carry ordinary width-delta tubes; synthesis rescales them by
    1/delta so each bump's flat part is exactly the rescaled tube.  The
    spectrum is assembled analytically and multiplied by the tapered slab
    mask, so every direction's spectrum vanishes identically outside the
    dilated slab.
    """
    if n is None:
        n = round(8.0 / delta)
    grid = Grid(n, h)
    if grid.length < 2.0 / delta - 1e-9 or 1.0 / delta > n / 4 + 1e-9:
        raise ValueError("grid does not contain the rescaled configuration")
    margin = TAPER_CELLS * grid.dnu
    freqs = grid.freqs()
    inv_d = 1.0 / delta
    long_core, long_ramp = 0.5 * inv_d, 0.125 * inv_d
    cross_core, cross_ramp = 0.5, 1.0
    half_box = 0.5 * grid.length
    fhat_full = np.zeros((n, n, n), dtype=complex)
    flat = fhat_full.ravel()
    out = []
    for fam in families:
        fr = eval_frame(curve, fam.theta)
        reach = ((long_core + long_ramp) * np.abs(fr.e1)
                 + (cross_core + cross_ramp) * (np.abs(fr.e2) + np.abs(fr.e3)))
        for t in fam.tubes:
            centered = inv_d * t.center
            if np.any(np.abs(centered) + reach > half_box + 1e-9):
                raise ValueError("a rescaled bump pokes outside the grid box")
        ext = (np.abs(fr.e1) * (delta + margin)
               + (np.abs(fr.e2) + np.abs(fr.e3)) * (1.0 + margin))
        idx = [np.nonzero(np.abs(freqs) <= e)[0] for e in ext]
        nu1 = (fr.e1[0] * freqs[idx[0]][:, None, None]
               + fr.e1[1] * freqs[idx[1]][None, :, None]
               + fr.e1[2] * freqs[idx[2]][None, None, :])
        thin = 1.0 - _ramp_up(np.abs(nu1), delta, margin)
        ii, jj, kk = np.nonzero(thin > 0.0)
        nu1 = nu1[ii, jj, kk]
        fx, fy, fz = freqs[idx[0]][ii], freqs[idx[1]][jj], freqs[idx[2]][kk]
        nu2 = fr.e2[0] * fx + fr.e2[1] * fy + fr.e2[2] * fz
        nu3 = fr.e3[0] * fx + fr.e3[1] * fy + fr.e3[2] * fz
        mask = (thin[ii, jj, kk]
                * (1.0 - _ramp_up(np.abs(nu2), 1.0, margin))
                * (1.0 - _ramp_up(np.abs(nu3), 1.0, margin)))
        profile = (raised_cosine_transform(nu1, long_core, long_ramp)
                   * raised_cosine_transform(nu2, cross_core, cross_ramp)
                   * raised_cosine_transform(nu3, cross_core, cross_ramp))
        coords = np.array([(t.center @ fr.e1, t.center @ fr.e2,
                            t.center @ fr.e3) for t in fam.tubes])
        phase = _phase_sum(nu1, nu2, nu3, coords, inv_d)
        parity = (idx[0][ii] + idx[1][jj] + idx[2][kk]) & 1
        vals = profile * mask * phase * (1.0 - 2.0 * parity)
        mode_index = (idx[0][ii] * n + idx[1][jj]) * n + idx[2][kk]
        keep = vals != 0.0
        tf = ThetaField(grid, fam.theta, fr.matrix(), mode_index[keep],
                        vals[keep], len(fam.tubes))
        flat[tf.mode_index] += tf.fhat
        out.append(tf)
    return out, GridFunction.from_fourier(grid, fhat_full)


def _quota_axis(delta: float, s_axis: float, rng) -> np.ndarray:
    """A 1-D (delta, s_axis)-set drawn from random grid columns."""
    l_max = round(math.log2(1.0 / delta))
    quota = min(2**l_max, 4 * math.ceil(2.0 ** (l_max * s_axis)))
    cols = np.sort(rng.choice(2**l_max, size=quota, replace=False))
    cells = [DyadicCube(l_max, (int(i),)) for i in cols]
    return extract_delta_s_set(cells, delta, s_axis).points[:, 0]


def rescaled_tube_families(curve: Curve, delta: float, s: float,
                           seed: int = 0) -> list[TubeFamily]:
    """Direction set with product-structured base sets of size ~delta^-s.

    The product structure keeps the synthesis phase sums separable; the
    spread audit multiplies per-axis dyadic window maxima, which bounds
    the base count of every aligned dyadic square exactly.  Each base
    column gets a random offset along the tube direction so distinct
    directions do not pile up on the base plane.
    """
    rng = np.random.default_rng(seed)
    l_max = round(math.log2(1.0 / delta))
    thetas = direction_set(delta, s).points[:, 0]
    out = []
    for t in thetas:
        fr = eval_frame(curve, float(t))
        axes = [_quota_axis(delta, s / 2.0, rng) for _ in range(2)]
        wins = [_window_maxima(np.rint(a / delta - 0.5).astype(np.int64), l_max)
                for a in axes]
        worst = max(wins[0][m] * wins[1][m] / 2.0 ** (m * s)
                    for m in range(l_max + 1))
        offsets = rng.uniform(-0.25, 0.25, size=len(axes[0]))
        tubes = []
        for a1, o in zip(axes[0], offsets):
            for a2 in axes[1]:
                base = (np.array([a1, a2]) - 0.5) * 2.0 * BASE_WINDOW
                p = tube(curve, float(t), base, delta)
                tubes.append(Plank(p.center + o * fr.e1, p.axes,
                                   p.half_lengths))
        out.append(TubeFamily(float(t), tuple(tubes), s, float(worst)))
    return out


# ---------------------------------------------------------------------------
# the high/low/angular split


@dataclass
class HighLowParts:
    """Split fields keyed by part name; lam keys carry the scale value."""

    delta: float
    K: float
    masks: SlabMasks
    parts: dict

    @property
    def low(self) -> GridFunction:
        return self.parts["low"]

    @property
    def high(self) -> GridFunction:
        return self.parts["high"]

    def lam_parts(self) -> dict[float, GridFunction]:
        out = {float(k[4:]): v for k, v in self.parts.items()
               if k.startswith("lam_")}
        out[self.masks.floor_bound] = self.parts["floor"]
        return out

    def reconstruction(self) -> GridFunction:
        grids = iter(self.parts.values())
        total = next(grids).values.copy()
        for g in grids:
            total += g.values
        return GridFunction(self.low.grid, total)


def highlow_split(theta_fields: list[ThetaField], delta: float,
                  K: float) -> HighLowParts:
    """Mask each direction's spectrum into high/low/angular parts and sum."""
    if not theta_fields:
        raise ValueError("no direction fields supplied")
    grid = theta_fields[0].grid
    masks = SlabMasks.build(delta, K, grid.dnu)
    coords = []
    for tf in theta_fields:
        nu = tf.modes()
        coords.append((nu @ tf.frame[1], nu @ tf.frame[2]))
    parts = {}
    for name in masks.part_names():
        acc = np.zeros(grid.n**3, dtype=complex)
        for tf, (nu2, nu3) in zip(theta_fields, coords):
            acc[tf.mode_index] += masks.weight(name, nu2, nu3) * tf.fhat
        vals = np.fft.ifftn(acc.reshape((grid.n,) * 3)) / grid.h**3
        parts[name] = GridFunction(grid, vals)
    return HighLowParts(delta, K, masks, parts)


def high_overlap(theta_fields: list[ThetaField], delta: float, K: float) -> int:
    """Max number of directions whose high-part spectra share one mode."""
    grid = theta_fields[0].grid
    masks = SlabMasks.build(delta, K, grid.dnu)
    counter = np.zeros(grid.n**3, dtype=np.int32)
    for tf in theta_fields:
        nu = tf.modes()
        w = masks.weight("high", nu @ tf.frame[1], nu @ tf.frame[2])
        counter[tf.mode_index[(w > 0.0) & (tf.fhat != 0.0)]] += 1
    return int(counter.max())


def high_l2_check(f_high: GridFunction, theta_fields: list[ThetaField],
                  K: float) -> float:
    """Energy ratio of the high part against K^2 times the direction sum."""
    den = K**2 * sum(tf.l2_sq() for tf in theta_fields)
    if den <= 0.0:
        raise ValueError("direction fields carry no energy")
    return f_high.l2_sq() / den


def energy_identity_check(f_high: GridFunction,
                          theta_fields: list[ThetaField], delta: float,
                          K: float) -> dict:
    """Exact Cauchy-Schwarz bound: |f_high|_2^2 <= overlap * sum |f_theta|_2^2."""
    overlap = high_overlap(theta_fields, delta, K)
    lhs = f_high.l2_sq()
    rhs = overlap * sum(tf.l2_sq() for tf in theta_fields)
    return {"lhs": lhs, "overlap": overlap, "rhs": rhs,
            "ok": lhs <= rhs * (1.0 + 1e-9) + 1e-30}


def support_vanishing_check(theta_fields: list[ThetaField],
                            delta: float) -> bool:
    """Every stored spectrum vanishes outside its dilated slab (exact)."""
    for tf in theta_fields:
        margin = TAPER_CELLS * tf.grid.dnu
        rel = np.abs(tf.modes() @ tf.frame.T)
        inside = ((rel[:, 0] <= delta + 0.5 * margin + 1e-12)
                  & (rel[:, 1] <= 1.0 + 0.5 * margin + 1e-12)
                  & (rel[:, 2] <= 1.0 + 0.5 * margin + 1e-12))
        if np.any(~inside & (tf.fhat != 0.0)):
            return False
    return True


def highlow_experiment(curve: Curve, delta: float, s: float, K: float,
                       seed: int = 0, return_field: bool = False) -> dict:
    """End-to-end synthesis, split and bound measurements for one config.

    Uses a box of size 2.5/delta so that full-spread base sets (and all
    bump supports) fit without periodic wrap.
    """
    families = rescaled_tube_families(curve, delta, s, seed)
    theta_fields, f = synthesize_field(curve, families, delta,
                                       n=round(10.0 / delta))
    f.fourier_cache = None
    parts = highlow_split(theta_fields, delta, K)
    recon = parts.reconstruction()
    sup = float(np.abs(f.values).max())
    recon_err = float(np.abs(recon.values - f.values).max()) / max(sup, 1e-300)
    n_theta = len(families)
    max_flow = lp_norm(parts.low, math.inf)
    bound = 8.0 * K ** (s - 2.0) * n_theta
    energy = energy_identity_check(parts.high, theta_fields, delta, K)
    l6_ratio = lp_norm(parts.high, 6) / max(lp_norm(f, 6), 1e-300)
    out = {"delta": delta, "K": K, "s": s, "n_theta": n_theta,
           "n_tubes": sum(len(fam.tubes) for fam in families),
           "max_flow": max_flow, "bound": bound,
           "low_ok": max_flow <= bound,
           "recon_error": recon_err,
           "support_ok": support_vanishing_check(theta_fields, delta),
           "l2_ratio": high_l2_check(parts.high, theta_fields, K),
           "l6_ratio": l6_ratio,
           "overlap": energy["overlap"], "energy_ok": energy["ok"],
           "seed": seed}
    if return_field:
        out["field"] = f
    return out


# ---------------------------------------------------------------------------
# L^6 decoupling


def decoupling_planks(curve: Curve, R: float, n_radial: int = 4,
                      r_span: tuple = (0.25, 1.0)) -> list[Plank]:
    """Thin planks covering angular sectors x radial shells of the cone.

    Each plank is 1/R thick along the cone normal e1, ~R^(-1/2) wide
    along the angular direction e2 and a radial shell long along e3.
    """
    if not curve.arclength_flag:
        raise ValueError("decoupling planks need an arclength curve")
    a = curve.domain[1]
    step = R**-0.5
    edges = np.linspace(r_span[0], r_span[1], n_radial + 1)
    planks = []
    for m in range(int(a / step + 1e-9)):
        fr = eval_frame(curve, (m + 0.5) * step)
        frame = fr.matrix()
        for lo, hi in zip(edges, edges[1:]):
            planks.append(Plank(0.5 * (lo + hi) * fr.e3, frame,
                                np.array([1.0 / R, 0.6 * hi * step,
                                          0.5 * (hi - lo)])))
    return planks


def plank_mode_assignment(grid: Grid, planks) -> np.ndarray:
    """First containing plank per lattice mode (-1 if none), flat array."""
    freqs = grid.freqs()
    nx, ny, nz = np.meshgrid(freqs, freqs, freqs, indexing="ij")
    pts = np.stack([nx.ravel(), ny.ravel(), nz.ravel()], axis=1)
    owner = np.full(len(pts), -1, dtype=np.int32)
    for i, p in enumerate(planks):
        rel = np.abs((pts - p.center) @ p.axes.T)
        inside = np.all(rel <= p.half_lengths + 1e-12, axis=1)
        owner[(owner == -1) & inside] = i
    return owner


def synthesize_plank_field(grid: Grid, planks, seed: int = 0,
                           owner: np.ndarray | None = None) -> GridFunction:
    """Random-phase spectrum smoothly windowed inside each plank."""
    if owner is None:
        owner = plank_mode_assignment(grid, planks)
    rng = np.random.default_rng(seed)
    freqs = grid.freqs()
    nx, ny, nz = np.meshgrid(freqs, freqs, freqs, indexing="ij")
    pts = np.stack([nx.ravel(), ny.ravel(), nz.ravel()], axis=1)
    fhat = np.zeros(len(pts), dtype=complex)
    for i, p in enumerate(planks):
        sel = np.nonzero(owner == i)[0]
        if not len(sel):
            continue
        rel = (pts[sel] - p.center) @ p.axes.T
        win = np.ones(len(sel))
        for ax in range(3):
            half = float(p.half_lengths[ax])
            win *= raised_cosine_profile(rel[:, ax], 0.5 * half, 0.5 * half)
        fhat[sel] = win * (rng.normal(size=len(sel))
                           + 1j * rng.normal(size=len(sel)))
    return GridFunction.from_fourier(grid, fhat.reshape((grid.n,) * 3))


def decoupling_ratio(f: GridFunction, planks, p: int = 6,
                     owner: np.ndarray | None = None) -> dict:
    """|f|_6 over the root-square-sum of the per-plank piece norms."""
    if p != 6:
        raise ValueError("only the L^6 ratio is supported")
    grid = f.grid
    if owner is None:
        owner = plank_mode_assignment(grid, planks)
    fhat = f.fourier().ravel()
    stray = np.abs(fhat[owner == -1])
    if stray.size and stray.max() > 1e-8 * max(np.abs(fhat).max(), 1e-300):
        raise ValueError("spectrum leaks outside the plank union")
    norms = []
    for i in range(len(planks)):
        piece = np.where(owner == i, fhat, 0.0).reshape((grid.n,) * 3)
        norms.append(lp_norm(GridFunction.from_fourier(grid, piece), 6))
    norms = np.array(norms)
    active = int(np.sum(norms > 1e-12 * max(norms.max(), 1e-300)))
    denom = math.sqrt(float(np.sum(norms**2)))
    ratio = lp_norm(f, 6) / denom if denom > 0 else 0.0
    return {"ratio": ratio, "sqrt_count_bound": math.sqrt(active),
            "plank_l6": norms}


def decoupling_experiment(curve: Curve, R: float, n_planks: int = 16,
                          seed: int = 0, n: int | None = None,
                          h: float = 0.5, return_field: bool = False) -> dict:
    """Random-phase decoupling ratio over a random plank subset."""
    if n is None:
        n = DECOUPLING_GRIDS.get(int(R), 16 * math.ceil(2.5 * R / 16.0))
    grid = Grid(n, h)
    all_planks = decoupling_planks(curve, R)
    if n_planks > len(all_planks):
        raise ValueError(f"only {len(all_planks)} planks available")
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(all_planks), size=n_planks, replace=False))
    planks = [all_planks[i] for i in pick]
    owner = plank_mode_assignment(grid, planks)
    f = synthesize_plank_field(grid, planks, seed=seed, owner=owner)
    res = decoupling_ratio(f, planks, owner=owner)
    out = {"R": R, "n_planks": n_planks, "seed": seed, "n": n,
           "ratio": res["ratio"],
           "sqrt_count_bound": res["sqrt_count_bound"]}
    if return_field:
        out["field"] = f
    return out
