"""Experiment runner: JSON configs in, CSV tables and JSON summaries out.

Binds the library modules into seven named experiments.  List-valued
config parameters sweep a Cartesian product; rows land in the merged CSV
in axis-enumeration order no matter which pool worker finished first.
Output files are written atomically (temp file + rename) and the CSV and
any field dumps are byte-identical across repeated runs with the same
config and seed; the summary JSON additionally records wall times.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import __version__, dimension, fractal, highlow, incidence
from .curve import curve_from_config, reparametrize_arclength

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_THRESHOLD = 2

#: Feasibility floor for the high-low experiment; a grid at delta costs
#: O((10/delta)^3) complex samples, so finer than 2^-5 wants > 4 GiB.
HIGHLOW_MIN_DELTA = 2.0**-5


class ConfigError(ValueError):
    """Configuration problem tied to a config-file key."""


# ---------------------------------------------------------------------------
# Parameter validators


def _dyadic_scale(x):
    v = float(x)
    if not 0.0 < v < 1.0 or math.frexp(v)[0] != 0.5:
        raise ConfigError("must be a dyadic scale 2^-k with k >= 1")
    return v


def _pow2_int(lo):
    def check(x):
        v = int(x)
        if v != x or v < lo or v & (v - 1):
            raise ConfigError(f"must be a power of two at least {lo}")
        return v

    return check


def _float_in(lo, hi):
    def check(x):
        v = float(x)
        if not lo < v <= hi:
            raise ConfigError(f"must lie in ({lo}, {hi}]")
        return v

    return check


def _pos_float(x):
    v = float(x)
    if not v > 0.0:
        raise ConfigError("must be positive")
    return v


def _any_float(x):
    return float(x)


def _pos_int(x):
    v = int(x)
    if v != x or v < 1:
        raise ConfigError("must be a positive integer")
    return v


def _choice(*options):
    def check(x):
        if x not in options:
            raise ConfigError(f"must be one of {', '.join(map(repr, options))}")
        return x

    return check


def _marstrand_exponent(x):
    v = float(x)
    if v == 2.0 or 0.0 < v <= 1.0:
        return v
    raise ConfigError("must lie in (0, 1] (Cantor set / segment) or equal 2 "
                      "(disk)")


# ---------------------------------------------------------------------------
# Experiment catalogue


@dataclass(frozen=True)
class ExperimentSpec:
    """Schema of one experiment: sweep axes, scalars and CSV layout.

    ``axes`` are list-valued (scalar configs are promoted to one-element
    lists) and sweep a Cartesian product in declaration order.  ``chain``
    names a delta list consumed whole as a halving chain instead of being
    swept.  ``scalars`` are single-valued thresholds and knobs.
    """

    title: str
    axes: tuple
    chain: tuple | None
    scalars: tuple
    columns: tuple
    spectral: bool
    notes: tuple


SPECS = {
    "exceptional": ExperimentSpec(
        title="per-direction projection slopes of a Cantor cloud and the "
              "box dimension of the exceptional direction set",
        axes=(("delta", _dyadic_scale, (2.0**-8,)),
              ("alpha", _float_in(0.0, 3.0), (1.5,)),
              ("s", _float_in(0.0, 2.0), (1.0,))),
        chain=None,
        scalars=(("theta_spacing", _dyadic_scale, 2.0**-5),
                 ("coarse_scale", _dyadic_scale, 2.0**-2),
                 ("slack", _pos_float, 0.2)),
        columns=("delta", "alpha", "s", "theta", "slope", "r2", "in_Es"),
        spectral=False,
        notes=("verdict: E_dim <= max(1 + s - alpha, 0) + slack",)),
    "positivity": ExperimentSpec(
        title="occupied-area stability of projections across a "
              "delta-halving chain (positivity proxy)",
        axes=(("alpha", _float_in(0.0, 3.0), (2.5,)),),
        chain=("delta", _dyadic_scale, (2.0**-5, 2.0**-6, 2.0**-7)),
        scalars=(("cloud", _choice("cantor", "ball"), "cantor"),
                 ("theta_spacing", _dyadic_scale, 2.0**-5),
                 ("ratio_floor", _float_in(0.0, 1.0), 0.6),
                 ("min_fraction", _float_in(0.0, 1.0), 0.9)),
        columns=("alpha", "cloud", "theta", "min_ratio", "passes"),
        spectral=False,
        notes=("delta is a halving chain (finest last), not a sweep axis",
               "cloud='ball' replaces the Cantor cloud by a sphere net "
               "whose projections match the solid ball's",
               "alpha must exceed 2; the proxy refuses flatter clouds")),
    "incidence": ExperimentSpec(
        title="heavy-cell incidence ratio of the bush tube configuration",
        axes=(("delta", _dyadic_scale, (2.0**-5,)),
              ("s", _float_in(0.0, 2.0), (1.0,))),
        chain=None,
        scalars=(("threshold_constant", _pos_float,
                  incidence.HEAVY_CONSTANT),
                 ("max_ratio", _pos_float, 16.0)),
        columns=("delta", "s", "seed", "n_theta", "n_tubes", "n_heavy",
                 "ratio"),
        spectral=False,
        notes=("wall times are reported in the summary JSON, not the CSV, "
               "to keep repeated runs byte-identical",)),
    "covering": ExperimentSpec(
        title="direction-covering count and greedy heaviest-cell mass "
              "decay on a Frostman measure",
        axes=(("alpha", _float_in(0.0, 3.0), (2.0,)),),
        chain=("delta", _dyadic_scale, (2.0**-5, 2.0**-6)),
        scalars=(("eps", _float_in(0.0, 1.0), 0.25),
                 ("decay_floor", _pos_float, 1.2),
                 ("ball_exponent", _pos_float, 1.5),
                 ("rect_exponent", _pos_float, 1.0)),
        columns=("delta", "alpha", "eps", "W_size", "W_bound", "W_ratio",
                 "ball_mass", "ball_decay", "rect_mass", "rect_decay"),
        spectral=False,
        notes=("delta is a halving chain; decay columns compare "
               "consecutive chain entries and are empty on the first row",)),
    "highlow": ExperimentSpec(
        title="tube-field synthesis with high/low frequency split and "
              "low-part sup bound",
        axes=(("delta", _dyadic_scale, (2.0**-4,)),
              ("s", _float_in(0.0, 2.0), (1.0,)),
              ("K", _pow2_int(4), (8,))),
        chain=None,
        scalars=(("min_delta", _dyadic_scale, HIGHLOW_MIN_DELTA),
                 ("recon_tol", _pos_float, 1e-8)),
        columns=("delta", "K", "s", "n_theta", "max_flow", "bound",
                 "l2_ratio", "l6_ratio"),
        spectral=True,
        notes=("l6_ratio = L6 norm of the high part / L6 norm of the "
               "full field",
               "delta below min_delta is refused; lower min_delta "
               "explicitly to accept the memory cost",
               "--dump-field writes the synthesized field per combination "
               "as raw little-endian complex64 plus a JSON sidecar")),
    "decoupling": ExperimentSpec(
        title="random-phase L6 decoupling ratio over cone planks",
        axes=(("R", _pow2_int(8), (32,)),),
        chain=None,
        scalars=(("n_planks", _pos_int, 16),
                 ("n_seeds", _pos_int, 5),
                 ("ratio_factor", _pos_float, 0.5)),
        columns=("R", "n_planks", "n", "seed", "ratio", "sqrt_count_bound"),
        spectral=True,
        notes=("one row per seed (seed, seed+1, ...); the verdict compares "
               "the median ratio with ratio_factor * sqrt(n_planks)",
               "--dump-field writes the first seed's plank sum field")),
    "marstrand2d": ExperimentSpec(
        title="planar projection-counting check (dyadic window maxima "
              "against r^s growth)",
        axes=(("delta", _dyadic_scale, (2.0**-5,)),
              ("a", _marstrand_exponent, (1.0,))),
        chain=None,
        scalars=(("gap_floor", _any_float, -0.35),
                 ("condition_constant", _pos_float,
                  incidence.MARSTRAND_CONSTANT)),
        columns=("delta", "a", "a_meas", "s_min", "gap", "all_failed"),
        spectral=False,
        notes=("a=1 projects a segment, a=2 a disk, a in (0,1) a random "
               "Cantor set of that exponent",
               "the verdict compares s_min with min(a_meas, 1) since "
               "projections live on a line; the gap column stays "
               "s_min - a_meas",
               "gap_floor is lax to absorb coarse-delta box-count bias; "
               "tighten it (e.g. -0.15) at delta <= 2^-8")),
}

_TOP_KEYS = ("experiment", "curve", "seed", "threads", "out")


# ---------------------------------------------------------------------------
# Config parsing


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment request: normalized parameters plus plumbing."""

    experiment: str
    curve: dict
    params: dict
    seed: int
    threads: int
    out: str

    @property
    def echo(self) -> dict:
        return {"experiment": self.experiment, "curve": self.curve,
                "seed": self.seed, "params": self.params}

    @property
    def sha256(self) -> str:
        blob = json.dumps(self.echo, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return 1


def parse_config(raw, text: str = "", *, seed=None, threads=None,
                 env_threads=None, out=None) -> ExperimentConfig:
    """Validate a decoded JSON config against the experiment schema.

    Keyword arguments override config-file values (command-line flags
    beat the file; the environment only fills a missing thread budget).
    Raises ConfigError with a line-numbered message on any problem.
    """
    if not isinstance(raw, dict):
        raise ConfigError("line 1: config must be a JSON object")

    def fail(key, msg):
        raise ConfigError(f"line {_line_of(text, key)}: {key!r} {msg}")

    name = raw.get("experiment")
    if name is None:
        fail("experiment", "is required")
    if name not in SPECS:
        fail("experiment", f"must be one of: {', '.join(SPECS)}")
    spec = SPECS[name]

    allowed = set(_TOP_KEYS)
    allowed.update(key for key, _, _ in spec.axes)
    allowed.update(key for key, _, _ in spec.scalars)
    if spec.chain is not None:
        allowed.add(spec.chain[0])
    for key in raw:
        if key not in allowed:
            fail(key, "is not a recognized key for this experiment")

    params = {}
    for key, validator, default in spec.axes:
        vals = raw.get(key, list(default))
        if not isinstance(vals, list):
            vals = [vals]
        try:
            params[key] = [validator(v) for v in vals]
        except ConfigError as err:
            fail(key, str(err))
    if spec.chain is not None:
        key, validator, default = spec.chain
        vals = raw.get(key, list(default))
        if not isinstance(vals, list):
            vals = [vals]
        try:
            chain = [validator(v) for v in vals]
        except ConfigError as err:
            fail(key, str(err))
        for big, small in zip(chain, chain[1:]):
            if big != 2.0 * small:
                fail(key, "must be a halving chain, each entry half the "
                          "previous one")
        params[key] = chain
    for key, validator, default in spec.scalars:
        val = raw.get(key, default)
        if isinstance(val, list):
            fail(key, "is not sweepable; a single value is expected")
        try:
            params[key] = validator(val)
        except ConfigError as err:
            fail(key, str(err))

    if name == "highlow" and any(d < params["min_delta"]
                                 for d in params["delta"]):
        fail("delta", f"is finer than the feasibility floor "
             f"{params['min_delta']!r}; set 'min_delta' lower only if the "
             "machine can afford the grid")

    if seed is None:
        seed = raw.get("seed", 0)
    if (not isinstance(seed, int) or isinstance(seed, bool)
            or not 0 <= seed < 2**64):
        fail("seed", "must be a non-negative integer below 2^64")

    if threads is None:
        threads = raw.get("threads")
    if threads is None and env_threads is not None:
        try:
            threads = int(env_threads)
        except ValueError:
            raise ConfigError(
                f"line 1: PROJLAB_THREADS={env_threads!r} is not an integer")
    if threads is None:
        threads = 1
    try:
        threads = _pos_int(threads)
    except ConfigError:
        fail("threads", "must be a positive integer")

    if out is None:
        out = raw.get("out", ".")
    if not isinstance(out, str) or not out:
        fail("out", "must be a non-empty path string")

    curve_cfg = raw.get("curve", {"kind": "model"})
    if isinstance(curve_cfg, str):
        curve_cfg = {"kind": curve_cfg}
    if not isinstance(curve_cfg, dict):
        fail("curve", "must be a curve spec object or a kind string")

    return ExperimentConfig(experiment=name, curve=curve_cfg, params=params,
                            seed=seed, threads=threads, out=out)


# ---------------------------------------------------------------------------
# Experiment runners.  Each returns (csv rows, verdict, optional field).


def _run_exceptional(curve, combo, p, seed, dump):
    delta, alpha, s = combo["delta"], combo["alpha"], combo["s"]
    cloud = fractal.cantor_cloud(alpha, delta, seed=seed)
    scales = dimension.dyadic_scales(p["coarse_scale"], delta)
    profile = dimension.projection_profile(cloud, curve, p["theta_spacing"],
                                           scales)
    est = dimension.exceptional_dim_estimate(profile, s, alpha)
    slopes = profile.slopes()
    rows = [{"delta": delta, "alpha": alpha, "s": s, "theta": float(t),
             "slope": float(sl), "r2": float(fit.r2),
             "in_Es": int(sl < s)}
            for t, fit, sl in zip(profile.thetas, profile.fits, slopes)]
    ok = est["E_dim"] <= est["bound"] + p["slack"]
    verdict = {**combo, "E_dim": float(est["E_dim"]),
               "bound": float(est["bound"]),
               "n_exceptional": int(est["n_exceptional"]),
               "median_slope": float(profile.median_slope()),
               "pass": bool(ok)}
    return rows, verdict, None


def _run_positivity(curve, combo, p, seed, dump):
    chain, alpha = p["delta"], combo["alpha"]
    if p["cloud"] == "ball":
        cloud = dimension.ball_cover_cloud(chain[-1])
    else:
        cloud = fractal.cantor_cloud(alpha, chain[-1], seed=seed)
    res = dimension.area_positivity_proxy(cloud, curve, chain,
                                          theta_spacing=p["theta_spacing"],
                                          ratio_floor=p["ratio_floor"])
    ratios = np.asarray(res["ratios"])
    rows = [{"alpha": float(cloud.nominal_dimension), "cloud": p["cloud"],
             "theta": float(t), "min_ratio": float(ratios[i].min()),
             "passes": int(res["theta_pass"][i])}
            for i, t in enumerate(res["thetas"])]
    frac = float(res["fraction_pass"])
    verdict = {**combo, "cloud": p["cloud"], "fraction_pass": frac,
               "min_fraction": p["min_fraction"],
               "pass": bool(frac >= p["min_fraction"])}
    return rows, verdict, None


def _run_incidence(curve, combo, p, seed, dump):
    delta, s = combo["delta"], combo["s"]
    res = incidence.bush_experiment(curve, delta, s,
                                    threshold_constant=p["threshold_constant"])
    row = {"delta": delta, "s": s, "seed": seed,
           "n_theta": int(res["n_theta"]), "n_tubes": int(res["n_tubes"]),
           "n_heavy": int(res["n_heavy"]), "ratio": float(res["ratio"])}
    verdict = {**combo, "ratio": float(res["ratio"]),
               "threshold": float(res["threshold"]),
               "condition_max": float(res["condition_max"]),
               "pass": bool(res["ratio"] <= p["max_ratio"])}
    return [row], verdict, None


def _run_covering(curve, combo, p, seed, dump):
    alpha, eps = combo["alpha"], p["eps"]
    shapes = (("ball", p["ball_exponent"]), ("rect", p["rect_exponent"]))
    rows, prev, decays = [], None, []
    for delta in p["delta"]:
        cloud = fractal.cantor_cloud(alpha, delta, seed=seed,
                                     axis_aligned=True)
        mu = fractal.frostman_measure(cloud, alpha)
        cov = incidence.tube_covering_experiment(mu, curve, delta, eps)
        row = {"delta": delta, "alpha": alpha, "eps": eps,
               "W_size": int(cov["W_size"]), "W_bound": float(cov["bound"]),
               "W_ratio": float(cov["ratio"])}
        masses = {}
        for shape, exponent in shapes:
            cap = mu.total_mass * delta**-exponent
            fams = incidence.greedy_cell_families(mu, curve, delta, shape,
                                                  cap)
            masses[shape] = float(incidence.projection_mass_sum(
                mu, curve, fams, delta, shape, cap))
            row[f"{shape}_mass"] = masses[shape]
            if prev is None:
                row[f"{shape}_decay"] = ""
            else:
                decay = (prev[shape] / masses[shape] if masses[shape] > 0
                         else float("inf"))
                row[f"{shape}_decay"] = float(decay)
                decays.append(decay)
        rows.append(row)
        prev = masses
    verdict = {**combo, "eps": eps,
               "min_decay": (float(min(decays)) if decays else None),
               "decay_floor": p["decay_floor"],
               "pass": bool(all(d >= p["decay_floor"] for d in decays))}
    return rows, verdict, None


def _run_highlow(curve, combo, p, seed, dump):
    delta, s, K = combo["delta"], combo["s"], combo["K"]
    res = highlow.highlow_experiment(curve, delta, s, K, seed=seed,
                                     return_field=dump)
    row = {key: res[key] for key in
           ("delta", "K", "s", "n_theta", "max_flow", "bound", "l2_ratio",
            "l6_ratio")}
    row.update(n_theta=int(row["n_theta"]), max_flow=float(row["max_flow"]),
               bound=float(row["bound"]), l2_ratio=float(row["l2_ratio"]),
               l6_ratio=float(row["l6_ratio"]))
    ok = (res["low_ok"] and res["support_ok"] and res["energy_ok"]
          and res["recon_error"] <= p["recon_tol"])
    verdict = {**combo, "max_flow": float(res["max_flow"]),
               "bound": float(res["bound"]),
               "recon_error": float(res["recon_error"]),
               "overlap": int(res["overlap"]), "pass": bool(ok)}
    return [row], verdict, res.get("field")


def _run_decoupling(curve, combo, p, seed, dump):
    R = combo["R"]
    arc = reparametrize_arclength(curve)
    rows, ratios, field = [], [], None
    for i in range(p["n_seeds"]):
        res = highlow.decoupling_experiment(arc, float(R),
                                            n_planks=p["n_planks"],
                                            seed=seed + i,
                                            return_field=dump and i == 0)
        if i == 0:
            field = res.get("field")
        rows.append({"R": int(R), "n_planks": p["n_planks"],
                     "n": int(res["n"]), "seed": int(res["seed"]),
                     "ratio": float(res["ratio"]),
                     "sqrt_count_bound": float(res["sqrt_count_bound"])})
        ratios.append(res["ratio"])
    median = float(np.median(ratios))
    threshold = p["ratio_factor"] * math.sqrt(p["n_planks"])
    verdict = {**combo, "n_seeds": p["n_seeds"], "median_ratio": median,
               "threshold": float(threshold),
               "pass": bool(median <= threshold)}
    return rows, verdict, field


def _run_marstrand2d(curve, combo, p, seed, dump):
    delta, a = combo["delta"], combo["a"]
    if a == 2.0:
        points = incidence.disk_points_2d(delta)
    elif a == 1.0:
        points = incidence.segment_points_2d(delta)
    else:
        points = incidence.cantor_points_2d(a, delta, seed=seed)
    res = incidence.marstrand_2d_experiment(
        points, delta, condition_constant=p["condition_constant"])
    row = {"delta": delta, "a": a, "a_meas": float(res["a_meas"]),
           "s_min": float(res["s_min"]), "gap": float(res["gap"]),
           "all_failed": int(res["all_failed"])}
    capped_gap = res["s_min"] - min(res["a_meas"], 1.0)
    ok = capped_gap >= p["gap_floor"] and not res["all_failed"]
    verdict = {**combo, "a_meas": float(res["a_meas"]),
               "s_min": float(res["s_min"]), "gap": float(res["gap"]),
               "capped_gap": float(capped_gap), "pass": bool(ok)}
    return [row], verdict, None


_RUNNERS = {
    "exceptional": _run_exceptional,
    "positivity": _run_positivity,
    "incidence": _run_incidence,
    "covering": _run_covering,
    "highlow": _run_highlow,
    "decoupling": _run_decoupling,
    "marstrand2d": _run_marstrand2d,
}


# ---------------------------------------------------------------------------
# Execution and output


@dataclass(frozen=True)
class ExperimentResult:
    """Everything one run produced, before any file is written."""

    experiment: str
    columns: tuple
    rows: list
    verdicts: list
    wall_times: list
    fields: list
    thresholds: dict
    config_echo: dict
    config_sha256: str
    overall_pass: bool


def _run_pool(jobs, threads):
    """Run the combination jobs, returning results in submission order."""
    if threads <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def execute(cfg: ExperimentConfig, dump_field: bool = False,
            ) -> ExperimentResult:
    """Sweep the config's Cartesian product and collect rows and verdicts."""
    spec = SPECS[cfg.experiment]
    curve = curve_from_config(cfg.curve)
    runner = _RUNNERS[cfg.experiment]
    axis_keys = [key for key, _, _ in spec.axes]
    combos = [dict(zip(axis_keys, values)) for values in
              itertools.product(*(cfg.params[key] for key in axis_keys))]
    if spec.chain is not None and not cfg.params[spec.chain[0]]:
        combos = []

    def make_job(combo):
        def job():
            start = time.perf_counter()
            rows, verdict, field = runner(curve, combo, cfg.params, cfg.seed,
                                          dump_field and spec.spectral)
            return rows, verdict, field, time.perf_counter() - start

        return job

    outputs = _run_pool([make_job(c) for c in combos], cfg.threads)
    rows, verdicts, walls, fields = [], [], [], []
    for i, (combo_rows, verdict, field, wall) in enumerate(outputs):
        rows.extend(combo_rows)
        verdicts.append(verdict)
        walls.append(wall)
        if field is not None:
            fields.append((f"{cfg.experiment}_field_{i:03d}", field,
                           dict(combos[i])))
    thresholds = {key: cfg.params[key] for key, _, _ in spec.scalars}
    return ExperimentResult(
        experiment=cfg.experiment, columns=spec.columns, rows=rows,
        verdicts=verdicts, wall_times=walls, fields=fields,
        thresholds=thresholds, config_echo=cfg.echo,
        config_sha256=cfg.sha256,
        overall_pass=all(v["pass"] for v in verdicts))


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_bytes(columns, rows) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row[c]) for c in columns])
    return buffer.getvalue().encode()


def write_outputs(result: ExperimentResult, out_dir: str) -> str:
    """Write CSV, summary JSON and any field dumps; returns the CSV path."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{result.experiment}.csv")
    _atomic_write(csv_path, _csv_bytes(result.columns, result.rows))
    for stem, field, meta in result.fields:
        values = np.ascontiguousarray(field.values).astype("<c8")
        _atomic_write(os.path.join(out_dir, f"{stem}.c64"), values.tobytes())
        sidecar = {"N": field.grid.n, "h": field.grid.h, "dtype": "<c8",
                   "order": "C", **meta}
        _atomic_write(os.path.join(out_dir, f"{stem}.json"),
                      json.dumps(sidecar, sort_keys=True, indent=2).encode()
                      + b"\n")
    summary = {
        "experiment": result.experiment,
        "tool_version": __version__,
        "config": result.config_echo,
        "config_sha256": result.config_sha256,
        "columns": list(result.columns),
        "n_rows": len(result.rows),
        "thresholds": result.thresholds,
        "verdicts": result.verdicts,
        "wall_times_s": [round(w, 6) for w in result.wall_times],
        "wall_time_total_s": round(sum(result.wall_times), 6),
        "pass": result.overall_pass,
    }
    _atomic_write(os.path.join(out_dir, f"{result.experiment}_summary.json"),
                  json.dumps(summary, sort_keys=True, indent=2).encode()
                  + b"\n")
    return csv_path


# ---------------------------------------------------------------------------
# Command line


def catalogue() -> str:
    """Human-readable experiment list with CSV columns and defaults."""
    lines = []
    for name, spec in SPECS.items():
        lines.append(f"{name}: {spec.title}")
        axes = ", ".join(f"{key}={list(default)!r}"
                         for key, _, default in spec.axes)
        lines.append(f"  sweep axes (list-valued): {axes}")
        if spec.chain is not None:
            key, _, default = spec.chain
            lines.append(f"  halving chain: {key}={list(default)!r}")
        scalars = ", ".join(f"{key}={default!r}"
                            for key, _, default in spec.scalars)
        if scalars:
            lines.append(f"  scalars: {scalars}")
        lines.append(f"  csv columns: {', '.join(spec.columns)}")
        for note in spec.notes:
            lines.append(f"  note: {note}")
        lines.append("")
    return "\n".join(lines).rstrip()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projlab",
        description="Run restricted-projection experiments from a JSON "
                    "config; emits a CSV table and a JSON summary.")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON experiment config")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default: config 'out' "
                             "or the working directory)")
    parser.add_argument("--threads", type=int, metavar="N",
                        help="worker threads (default: config, then "
                             "PROJLAB_THREADS, then 1)")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="override the config seed")
    parser.add_argument("--dump-field", action="store_true",
                        help="write synthesized fields (spectral "
                             "experiments) as raw complex64 + JSON sidecar")
    parser.add_argument("--list-experiments", action="store_true",
                        help="describe the experiments and their CSV "
                             "columns, then exit")
    return parser


def _brief(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.list_experiments:
        print(catalogue())
        return EXIT_PASS
    if args.config is None:
        print("error: --config is required (or use --list-experiments)",
              file=sys.stderr)
        return EXIT_ERROR
    try:
        with open(args.config, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return EXIT_ERROR
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        print(f"config error: line {err.lineno} column {err.colno}: "
              f"{err.msg}", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = parse_config(raw, text, seed=args.seed, threads=args.threads,
                           env_threads=os.environ.get("PROJLAB_THREADS"),
                           out=args.out)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_ERROR
    if args.dump_field and not SPECS[cfg.experiment].spectral:
        print(f"config error: --dump-field applies to spectral experiments "
              f"only, not {cfg.experiment!r}", file=sys.stderr)
        return EXIT_ERROR
    try:
        result = execute(cfg, dump_field=args.dump_field)
        csv_path = write_outputs(result, cfg.out)
    except Exception as err:  # library validation errors become exit 1
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR
    for verdict in result.verdicts:
        detail = " ".join(f"{k}={_brief(v)}" for k, v in verdict.items()
                          if k != "pass")
        print(("PASS " if verdict["pass"] else "FAIL ") + detail)
    status = "PASS" if result.overall_pass else "FAIL"
    print(f"{cfg.experiment}: {len(result.verdicts)} combination(s) -> "
          f"{csv_path} [{status}]")
    return EXIT_PASS if result.overall_pass else EXIT_THRESHOLD


if __name__ == "__main__":
    sys.exit(main())
