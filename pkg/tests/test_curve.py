import math

import numpy as np
import pytest

from projlab import curve as cv

SQRT2 = math.sqrt(2.0)


def great_circle() -> cv.Curve:
    return cv.Curve(
        (0.0, 1.0),
        lambda t: np.array([math.cos(t), math.sin(t), 0.0]),
        lambda t: np.array([-math.sin(t), math.cos(t), 0.0]),
        lambda t: np.array([-math.cos(t), -math.sin(t), 0.0]),
    )


class TestModelCurve:
    def test_point_at_zero(self):
        c = cv.model_curve()
        np.testing.assert_allclose(c.point(0.0),
                                   [1 / SQRT2, 0.0, 1 / SQRT2], atol=1e-12)

    def test_frame_at_zero(self):
        f = cv.eval_frame(cv.model_curve(), 0.0)
        np.testing.assert_allclose(f.e1, [1 / SQRT2, 0.0, 1 / SQRT2], atol=1e-12)
        np.testing.assert_allclose(f.e2, [0.0, 1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(f.e3, [-1 / SQRT2, 0.0, 1 / SQRT2], atol=1e-12)

    def test_determinant_constant(self):
        c = cv.model_curve()
        for t in (0.0, 0.25, 0.99):
            assert cv.frame_determinant(c, t) == pytest.approx(1 / (2 * SQRT2),
                                                               abs=1e-12)

    def test_on_sphere_and_speed(self):
        c = cv.model_curve()
        for t in np.linspace(0.0, 1.0, 17):
            assert np.linalg.norm(c.point(t)) == pytest.approx(1.0, abs=1e-9)
            assert np.linalg.norm(c.velocity(t)) == pytest.approx(1 / SQRT2,
                                                                  abs=1e-12)
        assert not c.arclength_flag


class TestEvalFrame:
    def test_orthonormal_right_handed_random(self):
        c = cv.model_curve()
        rng = np.random.default_rng(7)
        for t in rng.uniform(0.0, 1.0, size=1000):
            m = cv.eval_frame(c, float(t)).matrix()
            np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-9)
            assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-9)

    def test_e1_e2_orthogonal_table_curve(self):
        c = cv.model_curve()
        ts = np.linspace(0.0, 1.0, 64)
        tc = cv.table_curve(ts, np.stack([c.point(t) for t in ts]))
        for t in (0.1, 0.5, 0.9):
            f = cv.eval_frame(tc, t)
            assert abs(f.e1 @ f.e2) < 1e-7

    def test_domain_error(self):
        with pytest.raises(ValueError):
            cv.eval_frame(cv.model_curve(), 1.5)


class TestNondegeneracy:
    def test_model_curve(self):
        rep = cv.check_nondegenerate(cv.model_curve(), 1000)
        assert rep.ok
        assert rep.min_abs_det == pytest.approx(1 / (2 * SQRT2), abs=1e-9)

    def test_great_circle_fails(self):
        rep = cv.check_nondegenerate(great_circle(), 200)
        assert not rep.ok
        assert rep.min_abs_det == pytest.approx(0.0, abs=1e-12)

    def test_perturbed_model_curve(self):
        # 1e-3 bump, derivatives recovered by finite differences only.
        c = cv.model_curve()
        ts = np.linspace(0.0, 1.0, 256)
        bump = 1e-3 * np.sin(np.pi * ts)
        pts = np.stack([c.point(t) for t in ts])
        pts[:, 2] += bump
        rep = cv.check_nondegenerate(cv.table_curve(ts, pts), 300)
        assert rep.ok
        assert rep.min_abs_det == pytest.approx(1 / (2 * SQRT2), abs=1e-2)

    def test_sample_count_validation(self):
        with pytest.raises(ValueError):
            cv.check_nondegenerate(cv.model_curve(), 1)


class TestCurvature:
    def test_model_value(self):
        c = cv.model_curve()
        assert cv.curvature(c, 0.5) == pytest.approx(1 / SQRT2, abs=1e-4)

    def test_rotational_symmetry(self):
        c = cv.model_curve()
        assert abs(cv.curvature(c, 1e-4) - cv.curvature(c, 0.5)) <= 1e-4

    def test_arclength_constant(self):
        arc = cv.reparametrize_arclength(cv.model_curve())
        lo, hi = arc.domain
        vals = [cv.curvature(arc, t)
                for t in np.linspace(lo + 0.01, hi - 0.01, 9)]
        assert max(vals) - min(vals) <= 1e-3

    def test_boundary_error(self):
        with pytest.raises(ValueError):
            cv.curvature(cv.model_curve(), 0.0)


class TestArclength:
    def test_total_length(self):
        arc = cv.reparametrize_arclength(cv.model_curve())
        assert arc.domain[1] == pytest.approx(1 / SQRT2, abs=1e-6)
        assert arc.arclength_flag

    def test_unit_speed_and_acceleration_identity(self):
        arc = cv.reparametrize_arclength(cv.model_curve())
        for s in np.linspace(0.0, arc.domain[1], 21):
            assert np.linalg.norm(arc.velocity(s)) == pytest.approx(1.0,
                                                                    abs=1e-7)
            assert arc.point(s) @ arc.acceleration(s) == pytest.approx(-1.0,
                                                                       abs=1e-3)

    def test_fixed_point(self):
        arc = cv.reparametrize_arclength(cv.model_curve())
        again = cv.reparametrize_arclength(arc)
        assert again.domain[1] == pytest.approx(arc.domain[1], abs=1e-8)
        for s in np.linspace(0.0, arc.domain[1], 7):
            np.testing.assert_allclose(again.point(s), arc.point(s), atol=1e-8)

    def test_frenet_system(self):
        arc = cv.reparametrize_arclength(cv.model_curve())
        lo, hi = arc.domain
        for t in np.linspace(lo + 0.02, hi - 0.02, 25):
            k = cv.curvature(arc, t)
            f = cv.eval_frame(arc, t)
            de1 = cv._frame_derivative(arc, t, "e1")
            de2 = cv._frame_derivative(arc, t, "e2")
            de3 = cv._frame_derivative(arc, t, "e3")
            assert np.abs(de1 - f.e2).max() <= 1e-3
            assert np.abs(de2 + f.e1 - k * f.e3).max() <= 1e-3
            assert np.abs(de3 + k * f.e2).max() <= 1e-3


class TestFlatCurve:
    def test_stays_on_sphere(self):
        fl = cv.flat_curve(cv.model_curve())
        for s in np.linspace(0.0, fl.domain[1], 33):
            assert np.linalg.norm(fl.point(s)) == pytest.approx(1.0, abs=1e-9)

    def test_derivative_is_minus_e2(self):
        c = cv.model_curve()
        fl = cv.flat_curve(c)
        h = 1e-5
        for s in np.linspace(0.05, fl.domain[1] - 0.05, 9):
            fd = (fl.point(s + h) - fl.point(s - h)) / (2 * h)
            np.testing.assert_allclose(fd, fl.velocity(s), atol=1e-3)
            # velocity handle itself is -e2 of the source curve
            assert np.linalg.norm(fl.velocity(s)) == pytest.approx(1.0,
                                                                   abs=1e-9)

    def test_nondegenerate(self):
        rep = cv.check_nondegenerate(cv.flat_curve(cv.model_curve()), 200)
        assert rep.ok
        assert rep.min_abs_det > 0.1


class TestProject:
    def test_kernel(self):
        c = cv.model_curve()
        np.testing.assert_allclose(cv.project(c, 0.3, c.point(0.3)),
                                   [0.0, 0.0], atol=1e-12)

    def test_basis_vector(self):
        c = cv.model_curve()
        f = cv.eval_frame(c, 0.7)
        np.testing.assert_allclose(cv.project(c, 0.7, f.e2), [1.0, 0.0],
                                   atol=1e-12)

    def test_known_value(self):
        got = cv.project(cv.model_curve(), 0.0, np.array([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(got, [0.0, 1 / SQRT2], atol=1e-12)

    def test_linear_and_contractive(self):
        c = cv.model_curve()
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=(2, 3))
        lhs = cv.project(c, 0.4, 2.0 * x - 3.0 * y)
        rhs = 2.0 * cv.project(c, 0.4, x) - 3.0 * cv.project(c, 0.4, y)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
        assert np.linalg.norm(cv.project(c, 0.4, x)) <= np.linalg.norm(x) + 1e-12

    def test_batch_shape(self):
        c = cv.model_curve()
        pts = np.random.default_rng(5).normal(size=(40, 3))
        batch = cv.project(c, 0.2, pts)
        assert batch.shape == (40, 2)
        np.testing.assert_allclose(batch[7], cv.project(c, 0.2, pts[7]),
                                   atol=1e-14)


class TestJacobianIdentity:
    def test_max_relative_error(self):
        arc = cv.reparametrize_arclength(cv.model_curve())
        assert cv.jacobian_identity_check(arc, 100) <= 1e-3

    def test_rank_deficient_at_eta1_zero(self):
        arc = cv.reparametrize_arclength(cv.model_curve())
        v = arc.velocity(0.3)
        g = arc.point(0.3)
        cols = np.stack([v, np.cross(g, v), 0.0 * v + 0.5 * np.cross(g, v)],
                        axis=1)
        # with eta1 = 0 the xi map loses rank: columns 2, 3 are parallel
        assert abs(np.linalg.det(cols)) < 1e-12

    def test_linearity_in_eta1(self):
        arc = cv.reparametrize_arclength(cv.model_curve())
        g, v = arc.point(0.2), arc.velocity(0.2)
        a = arc.acceleration(0.2)
        base = np.stack([v, np.cross(g, v), 1.0 * a + 0.5 * np.cross(g, a)],
                        axis=1)
        double = np.stack([v, np.cross(g, v), 2.0 * a + 0.5 * np.cross(g, a)],
                          axis=1)
        assert np.linalg.det(double) == pytest.approx(
            2.0 * np.linalg.det(base), rel=1e-3)

    def test_requires_arclength(self):
        with pytest.raises(ValueError):
            cv.jacobian_identity_check(cv.model_curve(), 10)


class TestConfig:
    def test_model_kind(self):
        c = cv.curve_from_config({"kind": "model"})
        np.testing.assert_allclose(c.point(0.0), [1 / SQRT2, 0.0, 1 / SQRT2],
                                   atol=1e-12)

    def test_table_round_trip(self):
        c = cv.model_curve()
        ts = np.linspace(0.0, 1.0, 64)
        tc = cv.curve_from_config({
            "kind": "table",
            "thetas": ts.tolist(),
            "points": np.stack([c.point(t) for t in ts]).tolist(),
        })
        assert np.abs(cv.eval_frame(tc, 0.4).matrix()
                      - cv.eval_frame(c, 0.4).matrix()).max() < 1e-6
        assert cv.frame_determinant(tc, 0.4) == pytest.approx(1 / (2 * SQRT2),
                                                              abs=1e-4)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            cv.curve_from_config({"kind": "helix"})

    def test_table_validation(self):
        with pytest.raises(ValueError):
            cv.table_curve([0.0, 0.1, 0.2], [[1, 0, 0]] * 3)


class TestConeModel:
    def test_points_on_cone(self):
        cone = cv.ConeModel(cv.model_curve(), r_min=0.125)
        p = cone.point(0.5, 0.3)
        e3 = cv.eval_frame(cv.model_curve(), 0.3).e3
        np.testing.assert_allclose(p, 0.5 * e3, atol=1e-12)

    def test_sample_radii(self):
        cone = cv.ConeModel(cv.model_curve(), r_min=0.25)
        pts = cone.sample(5, 11)
        assert pts.shape == (55, 3)
        radii = np.linalg.norm(pts, axis=1)
        assert radii.min() == pytest.approx(0.25, abs=1e-9)
        assert radii.max() == pytest.approx(1.0, abs=1e-9)

    def test_radius_validation(self):
        cone = cv.ConeModel(cv.model_curve(), r_min=0.5)
        with pytest.raises(ValueError):
            cone.point(0.25, 0.1)
