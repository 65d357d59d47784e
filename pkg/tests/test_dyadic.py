import math

import numpy as np
import pytest

from projlab import dyadic as dy


def random_cells(rng, n_dim, level, count):
    grid = 2**level
    flat = rng.choice(grid**n_dim, size=min(count, grid**n_dim), replace=False)
    cells = []
    for f in flat:
        coords = []
        for _ in range(n_dim):
            coords.append(int(f % grid))
            f //= grid
        cells.append(dy.DyadicCube(level, tuple(coords)))
    return cells


class TestDyadicCube:
    def test_half_open_membership(self):
        c = dy.DyadicCube(2, (1, 1))
        assert c.contains_point([0.25, 0.25])
        assert not c.contains_point([0.5, 0.25])  # top/right face removed
        assert not c.contains_point([0.25, 0.5])

    def test_same_level_disjoint(self):
        a = dy.DyadicCube(3, (2,))
        b = dy.DyadicCube(3, (3,))
        x = 3 * a.side  # boundary point belongs to b only
        assert not a.contains_point([x]) and b.contains_point([x])

    def test_containment(self):
        top = dy.DyadicCube(1, (0, 1))
        assert top.contains_cube(dy.DyadicCube(3, (1, 5)))
        assert not top.contains_cube(dy.DyadicCube(3, (1, 3)))
        assert not dy.DyadicCube(3, (1, 5)).contains_cube(top)

    def test_cover_rejects_nesting(self):
        with pytest.raises(ValueError):
            dy.DyadicCover([dy.DyadicCube(1, (0,)), dy.DyadicCube(2, (1,))], 1.0)


class TestSeparatedCount:
    def test_three_points_on_line(self):
        assert dy.separated_count(np.array([[0.0], [0.05], [0.1]]), 0.1) == 2

    def test_exact_grid(self):
        pts = np.arange(16)[:, None] * 0.1
        assert dy.separated_count(pts, 0.1) == 16

    def test_empty(self):
        assert dy.separated_count(np.empty((0, 2)), 0.1) == 0

    def test_factor_two_of_exhaustive_1d(self):
        # in 1-D the left-to-right greedy sweep attains the maximum
        rng = np.random.default_rng(11)
        for _ in range(20):
            xs = rng.uniform(0.0, 1.0, 100)
            best, last = 0, -math.inf
            for x in np.sort(xs):
                if x - last >= 0.1:
                    best, last = best + 1, x
            got = dy.separated_count(xs[:, None], 0.1)
            assert best / 2 <= got <= 2 * best

    def test_occupied_cube_sandwich(self):
        rng = np.random.default_rng(3)
        for n in (1, 2, 3):
            pts = rng.uniform(0.0, 1.0, size=(200, n))
            delta = 2.0**-4
            occ = len(np.unique(np.floor(pts / delta).astype(int), axis=0))
            cnt = dy.separated_count(pts, delta)
            assert cnt <= occ <= 2**n * cnt


class TestHausdorffContent:
    def test_full_interval(self):
        pts = (np.arange(256)[:, None] + 0.5) / 256
        assert dy.hausdorff_content_upper(pts, 1.0, 8) == pytest.approx(1.0)

    def test_single_point(self):
        val = dy.hausdorff_content_upper(np.array([[0.3, 0.4]]), 0.7, 10)
        assert val <= (2.0**-10) ** 0.7 + 1e-15

    def test_full_square_t2(self):
        g = (np.arange(32) + 0.5) / 32
        pts = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
        assert dy.hausdorff_content_upper(pts, 2.0, 5) == pytest.approx(1.0)

    def test_cantor_middle_thirds(self):
        xs = np.array([0.0])
        for _ in range(7):
            xs = np.concatenate([xs / 3, 2 / 3 + xs / 3])
        t = math.log(2) / math.log(3)
        val = dy.hausdorff_content_upper(xs[:, None], t, 10)
        assert 0.3 <= val <= 3.0

    def test_cover_input_matches_points(self):
        # scanning no finer than the cell level, a cover and its cell
        # centers occupy identical cubes at every level
        cells = [dy.DyadicCube(4, (i,)) for i in range(0, 16, 3)]
        cover = dy.DyadicCover(cells, 0.5)
        pts = np.stack([c.center() for c in cells])
        a = dy.hausdorff_content_upper(cover, 0.5, 4)
        b = dy.hausdorff_content_upper(pts, 0.5, 4)
        assert a == pytest.approx(b)


class TestRegularize:
    def test_already_regular_unchanged(self):
        cover = dy.DyadicCover([dy.DyadicCube(4, (i,)) for i in range(16)], 1.0)
        out = dy.regularize_cover(cover, 1.0)
        assert out.cells == cover.cells

    def test_mixed_levels_satisfy_condition_s1(self):
        # 15 level-4 intervals plus a level-5 pair: every ancestor is
        # within the per-level branching bounds, so nothing is exchanged.
        cells = [dy.DyadicCube(4, (i,)) for i in range(1, 16)]
        cells += [dy.DyadicCube(5, (0,)), dy.DyadicCube(5, (1,))]
        cover = dy.DyadicCover(cells, 1.0)
        assert dy.check_branching_condition(cover, 1.0)
        assert dy.regularize_cover(cover, 1.0).cells == cover.cells

    def test_four_squares_collapse(self):
        cover = dy.DyadicCover(
            [dy.DyadicCube(2, (i, j)) for i in (0, 1) for j in (0, 1)], 0.5)
        assert cover.budget == pytest.approx(2.0)
        out = dy.regularize_cover(cover, 0.5)
        assert out.cells == {dy.DyadicCube(0, (0, 0))}
        assert out.budget == pytest.approx(1.0)

    def test_random_instances(self):
        rng = np.random.default_rng(42)
        for trial in range(40):
            n = int(rng.integers(1, 4))
            s = float(rng.uniform(0.3, 0.9 * n))
            cells = {}
            for _ in range(int(rng.integers(10, 80))):
                lvl = int(rng.integers(2, 7))
                coord = tuple(int(v) for v in rng.integers(0, 2**lvl, size=n))
                cells[(lvl, coord)] = dy.DyadicCube(lvl, coord)
            pool = list(cells.values())
            keep = []
            for c in pool:  # drop nested cells to get a valid cover
                if not any(o.contains_cube(c) or c.contains_cube(o)
                           for o in keep):
                    keep.append(c)
            cover = dy.DyadicCover(keep, s)
            out = dy.regularize_cover(cover, s)
            assert dy.check_branching_condition(out, s)
            assert out.budget <= cover.budget + 1e-12
            finest = max(c.level for c in cover.cells)
            assert dy.rasterize_cover(out, finest) >= dy.rasterize_cover(
                cover, finest)


class TestExtractVerify:
    def test_full_grid_s1(self):
        cells = [dy.DyadicCube(8, (i,)) for i in range(256)]
        ds = dy.extract_delta_s_set(cells, 2.0**-8, 1.0)
        assert len(ds) == 256
        assert ds.certificate <= 4.0

    def test_full_grid_s_half(self):
        cells = [dy.DyadicCube(8, (i,)) for i in range(256)]
        ds = dy.extract_delta_s_set(cells, 2.0**-8, 0.5)
        assert 2**4 / 4 <= len(ds) <= 4 * 2**4
        assert ds.certificate <= 4.0

    def test_single_cell(self):
        ds = dy.extract_delta_s_set([dy.DyadicCube(8, (7,))], 2.0**-8, 0.5)
        assert len(ds) == 1
        np.testing.assert_allclose(ds.points[0], [7.5 / 256])

    def test_empty_error(self):
        with pytest.raises(ValueError):
            dy.extract_delta_s_set([], 2.0**-8, 1.0)

    def test_full_grid_is_not_a_half_set(self):
        cells = [dy.DyadicCube(8, (i,)) for i in range(256)]
        all_points = dy.extract_delta_s_set(cells, 2.0**-8, 1.0).points
        claimed = dy.DeltaSet(all_points, 2.0**-8, 0.5, 0.0)
        rep = dy.verify_delta_s(claimed)
        assert not rep["ok"]
        assert rep["worst_ratio"] > 8.0
        assert rep["witness_ball"]["level"] == 0

    def test_uniform_grid_full_dimension_ok(self):
        g = (np.arange(16) + 0.5) / 16
        pts = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
        rep = dy.verify_delta_s(dy.DeltaSet(pts, 1 / 16, 2.0, 0.0))
        assert rep["ok"]

    def test_random_instances_verify(self):
        rng = np.random.default_rng(7)
        for trial in range(40):
            n = int(rng.integers(1, 4))
            level = int(rng.integers(4, 9 - n))
            s = float(rng.uniform(0.4, min(n, 1.6)))
            count = int(rng.integers(4, 2 ** min(level * n, 9)))
            cells = random_cells(rng, n, level, count)
            ds = dy.extract_delta_s_set(cells, 2.0**-level, s)
            rep = dy.verify_delta_s(ds)
            assert rep["ok"], (trial, rep)
            assert rep["worst_ratio"] == pytest.approx(ds.certificate)


class TestSerialization:
    def test_cover_round_trip(self):
        cover = dy.DyadicCover([dy.DyadicCube(2, (0, 1)),
                                dy.DyadicCube(3, (7, 7))], 0.7)
        again = dy.DyadicCover.from_json(cover.to_json(), 0.7)
        assert again.cells == cover.cells

    def test_delta_set_json(self):
        ds = dy.extract_delta_s_set([dy.DyadicCube(4, (3,))], 2.0**-4, 1.0)
        blob = ds.to_json()
        assert blob["delta"] == 2.0**-4
        assert blob["points"] == [[3.5 / 16]]
