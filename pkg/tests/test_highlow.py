"""Tests for field synthesis, the frequency split and L^6 decoupling."""
import math

import numpy as np
import pytest

from projlab import highlow as hl
from projlab.curve import eval_frame, model_curve, reparametrize_arclength
from projlab.geometry import tube
from projlab.incidence import TubeFamily


@pytest.fixture(scope="module")
def curve():
    return model_curve()


@pytest.fixture(scope="module")
def arc(curve):
    return reparametrize_arclength(curve)


@pytest.fixture(scope="module")
def single(curve):
    """One tube at theta=0.3, base 0, delta=2^-4, on the experiment box."""
    delta = 2.0**-4
    theta = 0.3
    p = tube(curve, theta, np.zeros(2), delta)
    fam = TubeFamily(theta=theta, tubes=(p,), s=1.0, condition_constant=1.0)
    tfs, f = hl.synthesize_field(curve, [fam], delta, n=round(10 / delta))
    return {"delta": delta, "frame": eval_frame(curve, theta), "tube": p,
            "tfs": tfs, "f": f}


@pytest.fixture(scope="module")
def synth(curve):
    """A full multi-direction synthesis plus its frequency split."""
    delta = 2.0**-4
    fams = hl.rescaled_tube_families(curve, delta, 1.0, seed=0)
    tfs, f = hl.synthesize_field(curve, fams, delta, n=round(10 / delta))
    parts = hl.highlow_split(tfs, delta, 8.0)
    return {"delta": delta, "fams": fams, "tfs": tfs, "f": f, "parts": parts}


class TestGrid:
    def test_properties(self):
        g = hl.Grid(160, 0.25)
        assert g.length == 40.0
        assert g.dnu == 1.0 / 40.0
        assert np.array_equal(g.freqs(), np.fft.fftfreq(160, 0.25))

    def test_rejects_odd_or_tiny(self):
        with pytest.raises(ValueError):
            hl.Grid(33, 0.5)
        with pytest.raises(ValueError):
            hl.Grid(0, 0.5)


class TestGridFunction:
    def test_fourier_round_trip(self):
        rng = np.random.default_rng(0)
        g = hl.Grid(16, 0.5)
        vals = rng.normal(size=(16, 16, 16)) + 1j * rng.normal(size=(16,) * 3)
        f = hl.GridFunction(g, vals)
        back = hl.GridFunction.from_fourier(g, f.fourier())
        assert np.allclose(back.values, vals, atol=1e-12)

    def test_parseval_identity(self):
        rng = np.random.default_rng(1)
        g = hl.Grid(12, 0.25)
        f = hl.GridFunction(g, rng.normal(size=(12, 12, 12)))
        assert f.parseval_gap() < 1e-13

    def test_l2_sq_is_riemann_sum(self):
        g = hl.Grid(4, 2.0)
        f = hl.GridFunction(g, np.ones((4, 4, 4)))
        assert np.isclose(f.l2_sq(), 64 * 8.0)

    def test_lp_norms(self):
        g = hl.Grid(4, 1.0)
        vals = np.zeros((4, 4, 4))
        vals[0, 0, 0] = 2.0
        f = hl.GridFunction(g, vals)
        assert hl.lp_norm(f, math.inf) == 2.0
        assert hl.lp_norm(f, "inf") == 2.0
        assert np.isclose(hl.lp_norm(f, 1), 2.0)
        assert np.isclose(hl.lp_norm(f, 2), 2.0)
        assert np.isclose(hl.lp_norm(f, 6), 2.0)

    def test_lp_norm_region_and_validation(self):
        g = hl.Grid(4, 1.0)
        rng = np.random.default_rng(2)
        f = hl.GridFunction(g, rng.normal(size=(4, 4, 4)))
        region = np.zeros((4, 4, 4), dtype=bool)
        region[:2] = True
        assert hl.lp_norm(f, 2, region) <= hl.lp_norm(f, 2)
        assert hl.lp_norm(f, math.inf, region) == np.abs(f.values[:2]).max()
        with pytest.raises(ValueError):
            hl.lp_norm(f, 3)


class TestRaisedCosine:
    def test_profile_plateau_and_support(self):
        t = np.array([0.0, 0.49, 0.5, 0.75, 1.0, 1.5, 2.0])
        v = hl.raised_cosine_profile(t, 0.5, 1.0)
        assert v[0] == 1.0 and v[1] == 1.0 and v[2] == 1.0
        assert np.isclose(v[3], math.cos(math.pi / 8) ** 2)
        assert np.isclose(v[4], 0.5)
        assert v[5] == 0.0 and v[6] == 0.0

    def test_profile_zero_ramp_is_indicator(self):
        t = np.array([0.0, 0.3, 0.30001])
        assert np.array_equal(hl.raised_cosine_profile(t, 0.3, 0.0),
                              [1.0, 1.0, 0.0])

    def test_transform_mass(self):
        # value at zero frequency is the integral 2*core + ramp
        assert np.isclose(hl.raised_cosine_transform(np.zeros(1), 0.5, 1.0)[0],
                          2.0)
        assert np.isclose(hl.raised_cosine_transform(np.zeros(1), 2.0, 0.5)[0],
                          4.5)

    def test_transform_matches_quadrature(self):
        core, ramp = 0.5, 1.0
        t = np.linspace(-(core + ramp), core + ramp, 60001)
        w = hl.raised_cosine_profile(t, core, ramp)
        for nu in (0.0, 0.3, 1.0 / (2.0 * ramp), 2.7):
            direct = np.trapezoid(w * np.exp(-2j * math.pi * nu * t), t)
            closed = hl.raised_cosine_transform(np.array([nu]), core, ramp)[0]
            assert abs(direct - closed) < 1e-7

    def test_transform_zero_ramp_is_sinc(self):
        nu = np.linspace(-3, 3, 11)
        assert np.allclose(hl.raised_cosine_transform(nu, 0.25, 0.0),
                           0.5 * np.sinc(0.5 * nu))


class TestFrequencyMask:
    def test_erode_dilate_invariants(self):
        from projlab.geometry import Plank
        p = Plank(np.zeros(3), np.eye(3), np.array([1.0, 2.0, 3.0]))
        m = hl.FrequencyMask((p,), margin=0.2)
        inner = np.array([[0.85, -1.8, 2.8], [0.0, 0.0, 0.0]])
        outer = np.array([[1.15, 0.0, 0.0], [0.0, 2.2, 0.0]])
        edge = np.array([[1.0, 0.0, 0.0]])
        assert np.array_equal(m(inner), [1.0, 1.0])
        assert np.array_equal(m(outer), [0.0, 0.0])
        assert np.isclose(m(edge)[0], 0.5)

    def test_union_takes_max(self):
        from projlab.geometry import Plank
        a = Plank(np.zeros(3), np.eye(3), np.ones(3))
        b = Plank(np.array([1.0, 0.0, 0.0]), np.eye(3), np.ones(3))
        m = hl.FrequencyMask((a, b), margin=0.5)
        assert m(np.array([0.9, 0.0, 0.0])) == 1.0


class TestSlabMasks:
    def grid(self):
        u = np.linspace(-1.3, 1.3, 57)
        return np.meshgrid(u, u, indexing="ij")

    def test_partition_of_unity_with_middle_scales(self):
        m = hl.SlabMasks.build(2.0**-8, 8.0, dnu=2.0**-6)
        assert m.lams == (0.125,)
        assert np.isclose(m.floor_bound, 0.0625)
        assert m.part_names() == ["high", "low", "lam_0.125", "floor"]
        nu2, nu3 = self.grid()
        total = sum(m.weight(name, nu2, nu3) for name in m.part_names())
        assert np.abs(total - 1.0).max() < 1e-14

    def test_partition_of_unity_degenerate_regime(self):
        # sqrt(delta) > 1/K leaves no room for middle scales
        m = hl.SlabMasks.build(2.0**-4, 8.0, dnu=0.025)
        assert m.lams == ()
        assert np.isclose(m.floor_bound, 0.125)
        assert m.part_names() == ["high", "low", "floor"]
        nu2, nu3 = self.grid()
        total = sum(m.weight(name, nu2, nu3) for name in m.part_names())
        assert np.abs(total - 1.0).max() < 1e-14

    def test_deep_scale_ladder(self):
        m = hl.SlabMasks.build(2.0**-10, 8.0, dnu=2.0**-8)
        assert m.lams == (0.125, 0.0625)
        assert np.isclose(m.floor_bound, 0.03125)

    def test_weights_between_zero_and_one(self):
        m = hl.SlabMasks.build(2.0**-8, 16.0, dnu=2.0**-7)
        rng = np.random.default_rng(3)
        nu2, nu3 = rng.uniform(-1.5, 1.5, size=(2, 4000))
        for name in m.part_names():
            w = m.weight(name, nu2, nu3)
            assert np.all(w >= 0.0) and np.all(w <= 1.0)

    def test_build_validation(self):
        with pytest.raises(ValueError):
            hl.SlabMasks.build(2.0**-8, 12.0, dnu=0.01)
        with pytest.raises(ValueError):
            hl.SlabMasks.build(2.0**-8, 2.0, dnu=0.01)
        with pytest.raises(ValueError):
            hl.SlabMasks.build(2.0**-8, 8.0, dnu=0.2)

    def test_unknown_part_name(self):
        m = hl.SlabMasks.build(2.0**-8, 8.0, dnu=0.01)
        with pytest.raises(ValueError):
            m.weight("mid", np.zeros(1), np.zeros(1))


class TestPhaseSum:
    def test_product_factorization_matches_brute_force(self):
        rng = np.random.default_rng(4)
        cols = rng.uniform(-0.5, 0.5, size=(3, 2))
        rows = rng.uniform(-0.5, 0.5, size=4)
        coords = np.array([[o, b1, b2] for o, b1 in cols for b2 in rows])
        nu = rng.uniform(-1, 1, size=(3, 50))
        got = hl._phase_sum(nu[0], nu[1], nu[2], coords, 16.0)
        want = np.zeros(50, dtype=complex)
        for o, b1, b2 in coords:
            want += np.exp(-2j * math.pi * 16.0
                           * (o * nu[0] + b1 * nu[1] + b2 * nu[2]))
        assert np.allclose(got, want, atol=1e-10)

    def test_non_product_fallback(self):
        rng = np.random.default_rng(5)
        coords = rng.uniform(-0.5, 0.5, size=(7, 3))
        nu = rng.uniform(-1, 1, size=(3, 20))
        got = hl._phase_sum(nu[0], nu[1], nu[2], coords, 8.0)
        want = sum(np.exp(-2j * math.pi * 8.0
                          * (o * nu[0] + b1 * nu[1] + b2 * nu[2]))
                   for o, b1, b2 in coords)
        assert np.allclose(got, want, atol=1e-10)


class TestSynthesis:
    def test_field_is_real(self, single):
        vals = single["f"].values
        assert np.abs(vals.imag).max() < 1e-12 * np.abs(vals.real).max()

    def test_bump_core_near_one(self, single):
        f, fr = single["f"], single["frame"]
        g = f.grid
        shift = 0.5 * g.length
        center = shift + single["tube"].center / single["delta"]
        idx = np.round(center / g.h).astype(int) % g.n
        assert 0.9 < f.values.real[idx[0], idx[1], idx[2]] < 1.2
        ts = np.linspace(-0.45, 0.45, 13) / single["delta"]
        us = np.array([-0.4, 0.0, 0.4])
        pts = (center[None, None, :] + ts[:, None, None] * fr.e1
               + us[None, :, None] * fr.e2).reshape(-1, 3)
        ii = np.round(pts / g.h).astype(int) % g.n
        core = f.values.real[ii[:, 0], ii[:, 1], ii[:, 2]]
        assert core.min() > 0.6
        assert np.abs(f.values).max() < 1.5

    def test_bump_tails_small(self, single):
        f, fr = single["f"], single["frame"]
        g = f.grid
        center = 0.5 * g.length + single["tube"].center / single["delta"]
        side = center + 4.0 * fr.e3
        ii = np.round(side / g.h).astype(int) % g.n
        assert abs(f.values[ii[0], ii[1], ii[2]]) < 0.01
        beyond = center + 1.5 / single["delta"] * fr.e1
        jj = np.round(beyond / g.h).astype(int) % g.n
        assert abs(f.values[jj[0], jj[1], jj[2]]) < 0.05

    def test_support_vanishes_outside_slab(self, single):
        assert hl.support_vanishing_check(single["tfs"], single["delta"])
        tf = single["tfs"][0]
        rel = np.abs(tf.modes() @ tf.frame.T)
        margin = hl.TAPER_CELLS * tf.grid.dnu
        assert rel[:, 0].max() <= single["delta"] + margin
        assert rel[:, 1:].max() <= 1.0 + margin

    def test_theta_field_parseval(self, single):
        tf = single["tfs"][0]
        assert np.isclose(tf.l2_sq(), tf.field().l2_sq(), rtol=1e-10)

    def test_sum_of_direction_fields(self, synth):
        total = sum(tf.field().values for tf in synth["tfs"])
        scale = np.abs(synth["f"].values).max()
        assert np.abs(total - synth["f"].values).max() < 1e-10 * scale

    def test_box_too_small_raises(self, curve):
        p = tube(curve, 0.3, np.zeros(2), 2.0**-4)
        fam = TubeFamily(0.3, (p,), 1.0, 1.0)
        with pytest.raises(ValueError):
            hl.synthesize_field(curve, [fam], 2.0**-4, n=64)

    def test_far_base_pokes_outside(self, curve):
        p = tube(curve, 0.3, np.array([1.2, 0.0]), 2.0**-4)
        fam = TubeFamily(0.3, (p,), 1.0, 1.0)
        with pytest.raises(ValueError, match="pokes outside"):
            hl.synthesize_field(curve, [fam], 2.0**-4)

    def test_empty_family_rejected_upstream(self):
        with pytest.raises(ValueError):
            TubeFamily(0.3, (), 1.0, 1.0)


class TestRescaledFamilies:
    def test_counts_and_shapes(self, curve, synth):
        fams = synth["fams"]
        assert len(fams) == 16
        for fam in fams:
            assert fam.s == 1.0
            assert fam.passes()
            hl_ = fam.tubes[0].half_lengths
            assert np.allclose(hl_, [0.5, 2.0**-5, 2.0**-5])

    def test_bases_span_full_window(self, synth):
        fam = synth["fams"][0]
        fr = eval_frame(model_curve(), fam.theta)
        b1 = np.array([t.center @ fr.e2 for t in fam.tubes])
        assert b1.min() < -0.25 and b1.max() > 0.25
        assert np.abs(b1).max() <= hl.BASE_WINDOW

    def test_seed_determinism(self, curve):
        a = hl.rescaled_tube_families(curve, 2.0**-4, 1.0, seed=7)
        b = hl.rescaled_tube_families(curve, 2.0**-4, 1.0, seed=7)
        for fa, fb in zip(a, b):
            assert np.array_equal(
                np.stack([t.center for t in fa.tubes]),
                np.stack([t.center for t in fb.tubes]))


class TestSplit:
    def test_part_names(self, synth):
        parts = synth["parts"]
        assert set(parts.parts) == {"high", "low", "floor"}
        assert parts.low is parts.parts["low"]
        assert parts.high is parts.parts["high"]
        assert list(parts.lam_parts()) == [parts.masks.floor_bound]

    def test_reconstruction_exact(self, synth):
        recon = synth["parts"].reconstruction()
        scale = np.abs(synth["f"].values).max()
        err = np.abs(recon.values - synth["f"].values).max() / scale
        assert err < 1e-10

    def test_empty_input_raises(self):
        with pytest.raises(ValueError):
            hl.highlow_split([], 2.0**-4, 8.0)

    def test_overlap_counts_directions(self, synth):
        ov = hl.high_overlap(synth["tfs"], synth["delta"], 8.0)
        assert 1 <= ov <= len(synth["tfs"])

    def test_energy_identity(self, synth):
        res = hl.energy_identity_check(synth["parts"].high, synth["tfs"],
                                       synth["delta"], 8.0)
        assert res["ok"]
        assert res["lhs"] <= res["rhs"] * (1 + 1e-9)

    def test_high_l2_far_below_trivial_bound(self, synth):
        ratio = hl.high_l2_check(synth["parts"].high, synth["tfs"], 8.0)
        assert 0.0 < ratio < 0.5

    def test_high_l2_rejects_zero_energy(self, synth):
        tf = synth["tfs"][0]
        dead = hl.ThetaField(tf.grid, tf.theta, tf.frame,
                             np.array([], dtype=int), np.array([], dtype=complex), 0)
        with pytest.raises(ValueError):
            hl.high_l2_check(synth["parts"].high, [dead], 8.0)

    def test_support_check_detects_tampering(self, synth):
        tf = synth["tfs"][0]
        n = tf.grid.n
        # plant energy on a mode far outside the dilated slab
        rogue = hl.ThetaField(tf.grid, tf.theta, tf.frame,
                              np.array([(n // 2 - 1) * n * n]),
                              np.array([1.0 + 0j]), 1)
        assert not hl.support_vanishing_check([rogue], synth["delta"])


@pytest.fixture(scope="module")
def result(curve):
    return hl.highlow_experiment(curve, 2.0**-4, 1.0, 8.0, seed=0)


class TestExperiment:
    def test_low_bound_holds(self, result):
        assert result["low_ok"]
        assert result["max_flow"] <= result["bound"]
        assert result["bound"] == 8.0 * 8.0 ** (1.0 - 2.0) * result["n_theta"]

    def test_reconstruction_and_support(self, result):
        assert result["recon_error"] < 1e-8
        assert result["support_ok"]
        assert result["energy_ok"]

    def test_sizes(self, result):
        assert result["n_theta"] == 16
        assert result["n_tubes"] == sum(
            len(f.tubes)
            for f in hl.rescaled_tube_families(model_curve(), 2.0**-4, 1.0, 0))
        assert 1 <= result["overlap"] <= result["n_theta"]

    def test_determinism(self, curve, result):
        again = hl.highlow_experiment(curve, 2.0**-4, 1.0, 8.0, seed=0)
        assert again == result


class TestDecouplingGeometry:
    def test_plank_counts(self, arc):
        for R, count in ((32.0, 16), (64.0, 20), (128.0, 32)):
            assert len(hl.decoupling_planks(arc, R)) == count

    def test_requires_arclength(self, curve):
        with pytest.raises(ValueError):
            hl.decoupling_planks(curve, 64.0)

    def test_thickness_scaling(self, arc):
        p = hl.decoupling_planks(arc, 64.0)[0]
        assert np.isclose(p.half_lengths[0], 1.0 / 64.0)
        assert np.isclose(p.half_lengths[1], 0.6 * 0.4375 * 64.0**-0.5)

    def test_mode_assignment_disjoint(self, arc):
        grid = hl.Grid(64, 0.5)
        planks = hl.decoupling_planks(arc, 32.0)
        owner = hl.plank_mode_assignment(grid, planks)
        assert owner.shape == (64**3,)
        assert owner.min() >= -1 and owner.max() < len(planks)
        # every claimed mode really lies in its plank
        freqs = grid.freqs()
        nx, ny, nz = np.meshgrid(freqs, freqs, freqs, indexing="ij")
        pts = np.stack([nx.ravel(), ny.ravel(), nz.ravel()], axis=1)
        for i in (0, len(planks) // 2):
            sel = owner == i
            if sel.any():
                assert planks[i].contains(pts[sel]).all()


@pytest.fixture(scope="module")
def pair(arc):
    """Two same-shape planks from far-apart sectors at R=64."""
    all_planks = hl.decoupling_planks(arc, 64.0)
    planks = [all_planks[3], all_planks[19]]
    grid = hl.Grid(hl.DECOUPLING_GRIDS[64], 0.5)
    owner = hl.plank_mode_assignment(grid, planks)
    freqs = grid.freqs()
    nx, ny, nz = np.meshgrid(freqs, freqs, freqs, indexing="ij")
    pts = np.stack([nx.ravel(), ny.ravel(), nz.ravel()], axis=1)
    return grid, planks, owner, pts


def _bumps(pair, centers):
    grid, planks, owner, pts = pair
    fhat = np.zeros(len(pts), dtype=complex)
    for i, p in enumerate(planks):
        sel = np.nonzero(owner == i)[0]
        rel = (pts[sel] - p.center) @ p.axes.T
        win = np.ones(len(sel))
        for ax in range(3):
            half = float(p.half_lengths[ax])
            win *= hl.raised_cosine_profile(rel[:, ax], 0.5 * half,
                                            0.5 * half)
        phase = np.exp(-2j * math.pi * pts[sel] @ np.asarray(centers[i]))
        fhat[sel] = win * phase
    return hl.GridFunction.from_fourier(grid, fhat.reshape((grid.n,) * 3))


class TestDecouplingRatio:
    def test_separated_bumps_hit_disjoint_support_value(self, pair):
        f = _bumps(pair, [(-20.0, -20.0, -20.0), (20.0, 20.0, 20.0)])
        res = hl.decoupling_ratio(f, pair[1], owner=pair[2])
        assert abs(res["ratio"] - 2.0 ** (-1.0 / 3.0)) < 0.01
        assert np.isclose(res["sqrt_count_bound"], math.sqrt(2.0))

    def test_stacked_bumps_interfere_constructively(self, pair):
        f = _bumps(pair, [(0.0, 0.0, 0.0), (0.0, 0.0, 0.0)])
        res = hl.decoupling_ratio(f, pair[1], owner=pair[2])
        assert 1.02 < res["ratio"] < math.sqrt(2.0) * 1.01

    def test_stray_spectrum_raises(self, pair):
        grid, planks, owner, _ = pair
        fhat = np.zeros(grid.n**3, dtype=complex)
        fhat[owner == 0] = 1.0
        fhat[np.nonzero(owner == -1)[0][0]] = 1.0
        f = hl.GridFunction.from_fourier(grid, fhat.reshape((grid.n,) * 3))
        with pytest.raises(ValueError, match="leaks"):
            hl.decoupling_ratio(f, planks, owner=owner)

    def test_only_l6_supported(self, pair):
        grid = pair[0]
        f = hl.GridFunction(grid, np.zeros((grid.n,) * 3, dtype=complex))
        with pytest.raises(ValueError):
            hl.decoupling_ratio(f, pair[1], p=2)


class TestDecouplingExperiment:
    def test_single_plank_ratio_is_one(self, arc):
        res = hl.decoupling_experiment(arc, 64.0, n_planks=1, seed=0)
        assert abs(res["ratio"] - 1.0) < 1e-6

    def test_random_phase_ratios_stay_small(self, arc):
        for seed in range(3):
            res = hl.decoupling_experiment(arc, 32.0, n_planks=16, seed=seed)
            assert res["ratio"] < 2.0
            assert res["sqrt_count_bound"] == 4.0

    def test_grid_fallback_for_unlisted_r(self, arc):
        res = hl.decoupling_experiment(arc, 48.0, n_planks=1, seed=0)
        assert res["n"] == 128

    def test_too_many_planks(self, arc):
        with pytest.raises(ValueError):
            hl.decoupling_experiment(arc, 32.0, n_planks=17)

    def test_determinism(self, arc):
        a = hl.decoupling_experiment(arc, 32.0, n_planks=8, seed=5)
        b = hl.decoupling_experiment(arc, 32.0, n_planks=8, seed=5)
        assert a == b
