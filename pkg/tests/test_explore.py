import json

import numpy as np
import pytest
from scipy import stats

from voronoiperc import Configuration, Rect, has_blue_horizontal_crossing
from voronoiperc import sample_configuration
from voronoiperc.explore import (MesoGrid, estimate_revealment, mesh_of,
                                 run_algorithm, run_algorithm_colors)
from voronoiperc.perturb import TwoStageSample, two_stage_sample

UNIT = Rect.unit()


def rng(seed=0):
    return np.random.default_rng(seed)


class TestMesh:
    def test_fourth_power(self):
        assert mesh_of(16) == pytest.approx(0.5)

    def test_just_above_fourth_power(self):
        assert mesh_of(17) == pytest.approx(1.0 / 3.0)

    def test_unit_intensity(self):
        assert mesh_of(1) == 1.0

    def test_mesh_divides_one_exactly(self):
        for n in (3, 81, 500, 4000):
            grid = MesoGrid.for_intensity(n)
            assert grid.g * grid.mesh == pytest.approx(1.0)
            assert grid.g ** 4 >= n > (grid.g - 1) ** 4


class TestRunAlgorithm:
    def test_single_blue_present_point_outputs_one(self):
        dense = Configuration(xy=np.array([[0.5, 0.5]]), colors=np.array([1]),
                              intensity_used=1.0, blue_prob_used=1.0)
        ts = TwoStageSample(dense=dense, mask=np.array([True]), k=2.0, n=1.0)
        for x0 in (0.35, 0.5, 0.65):
            tr = run_algorithm(ts, UNIT, x0=x0)
            assert tr.output == 1

    def test_empty_masked_configuration_full_reveals(self):
        dense = sample_configuration(50, 0.5, rng(1))
        ts = TwoStageSample(dense=dense, mask=np.zeros(len(dense), bool),
                            k=4.0, n=12.5)
        tr = run_algorithm(ts, UNIT, rng=rng(2))
        assert tr.full_reveal
        assert tr.output == 0
        assert len(tr.queried) == len(dense)

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_ground_truth(self, seed):
        g = rng(seed)
        for _ in range(60):
            ts = two_stage_sample(500, 4.0, 0.5, g)
            tr = run_algorithm(ts, UNIT, g)
            truth = has_blue_horizontal_crossing(ts.masked(), UNIT)
            assert tr.output == int(truth)

    def test_matches_ground_truth_without_full_reveal(self):
        g = rng(5)
        seen_exploring = 0
        for _ in range(25):
            ts = two_stage_sample(4000, 4.0, 0.5, g)
            tr = run_algorithm(ts, UNIT, g)
            truth = has_blue_horizontal_crossing(ts.masked(), UNIT)
            assert tr.output == int(truth)
            seen_exploring += (not tr.full_reveal)
        assert seen_exploring > 0

    def test_trace_invariants(self):
        g = rng(6)
        grid = MesoGrid.for_intensity(500)
        for _ in range(40):
            ts = two_stage_sample(500, 4.0, 0.5, g)
            tr = run_algorithm(ts, UNIT, g)
            assert tr.safe_cells <= tr.explored_cells
            assert 1.0 / 3.0 <= tr.x0 <= 2.0 / 3.0
            if not tr.full_reveal:
                cells = grid.cell_of(ts.dense.xy[tr.queried])
                assert set(int(c) for c in cells) <= tr.explored_cells

    def test_safety_discipline(self):
        g = rng(7)
        ts = two_stage_sample(4000, 4.0, 0.5, g)
        tr = run_algorithm(ts, UNIT, g)
        grid = MesoGrid.for_intensity(4000)
        for c in tr.safe_cells:
            cx, cy = divmod(c, grid.g)
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    nx, ny = cx + dx, cy + dy
                    if 0 <= nx < grid.g and 0 <= ny < grid.g:
                        assert nx * grid.g + ny in tr.explored_cells

    def test_query_soundness(self):
        # flipping bits the algorithm never read cannot change its path
        g = rng(8)
        checked = 0
        for _ in range(30):
            ts = two_stage_sample(4000, 4.0, 0.5, g)
            tr = run_algorithm(ts, UNIT, g)
            if tr.full_reveal:
                continue
            flipped = ts.mask.copy()
            unread = np.ones(len(flipped), bool)
            unread[tr.queried] = False
            flipped[unread] = ~flipped[unread]
            ts2 = TwoStageSample(dense=ts.dense, mask=flipped, k=ts.k, n=ts.n)
            tr2 = run_algorithm(ts2, UNIT, x0=tr.x0)
            assert tr2.output == tr.output
            assert np.array_equal(np.sort(tr2.queried), np.sort(tr.queried))
            checked += 1
            if checked >= 5:
                break
        assert checked > 0

    def test_mid_third_law(self):
        g = rng(9)
        ts = two_stage_sample(200, 3.0, 0.5, g)
        xs = [run_algorithm(ts, UNIT, g).x0 for _ in range(400)]
        _, pval = stats.kstest(xs, stats.uniform(1 / 3, 1 / 3).cdf)
        assert pval > 0.01

    def test_rejects_empty_dense(self):
        dense = sample_configuration(0.0, 0.5, rng(10))
        ts = TwoStageSample(dense=dense, mask=np.zeros(0, bool), k=2.0, n=1.0)
        with pytest.raises(ValueError):
            run_algorithm(ts, UNIT, rng=rng(11))

    def test_trace_json(self):
        g = rng(12)
        ts = two_stage_sample(300, 4.0, 0.5, g)
        tr = run_algorithm(ts, UNIT, g)
        payload = json.loads(tr.to_json(xy=ts.dense.xy))
        assert payload["grid"] == MesoGrid.for_intensity(300).g
        assert payload["output"] in (0, 1)
        assert len(payload["queried_xy"]) == len(payload["queried"])


class TestColorVariant:
    def test_all_blue_outputs_one(self):
        g = rng(13)
        xy = g.random((50, 2))
        cfg = Configuration(xy=xy, colors=np.ones(50, dtype=np.uint8),
                            intensity_used=50.0, blue_prob_used=1.0)
        tr = run_algorithm_colors(cfg, UNIT, g)
        assert tr.output == 1

    def test_all_red_outputs_zero(self):
        g = rng(14)
        xy = g.random((50, 2))
        cfg = Configuration(xy=xy, colors=np.zeros(50, dtype=np.uint8),
                            intensity_used=50.0, blue_prob_used=0.0)
        tr = run_algorithm_colors(cfg, UNIT, g)
        assert tr.output == 0

    @pytest.mark.parametrize("n", [500, 4000])
    def test_matches_ground_truth(self, n):
        g = rng(n)
        reps = 40 if n == 500 else 15
        for _ in range(reps):
            cfg = sample_configuration(n, 0.5, g)
            if cfg.is_empty:
                continue
            tr = run_algorithm_colors(cfg, UNIT, g)
            truth = has_blue_horizontal_crossing(cfg, UNIT)
            assert tr.output == int(truth)

    def test_query_soundness_colors(self):
        g = rng(15)
        checked = 0
        for _ in range(30):
            cfg = sample_configuration(4000, 0.5, g)
            tr = run_algorithm_colors(cfg, UNIT, g)
            if tr.full_reveal:
                continue
            colors = cfg.colors.copy()
            unread = np.ones(len(colors), bool)
            unread[tr.queried] = False
            colors[unread] = 1 - colors[unread]
            tr2 = run_algorithm_colors(cfg.replace(colors=colors), UNIT, x0=tr.x0)
            assert tr2.output == tr.output
            assert np.array_equal(np.sort(tr2.queried), np.sort(tr.queried))
            checked += 1
            if checked >= 5:
                break
        assert checked > 0


class TestRevealment:
    def test_single_rep_gives_indicators(self):
        g = rng(16)
        ts = two_stage_sample(300, 4.0, 0.5, g)
        est = estimate_revealment(ts, UNIT, 1, g)
        assert set(np.unique(est.frequencies)) <= {0.0, 1.0}

    def test_single_dense_point_always_queried(self):
        dense = Configuration(xy=np.array([[0.9, 0.9]]), colors=np.array([0]),
                              intensity_used=1.0, blue_prob_used=0.5)
        ts = TwoStageSample(dense=dense, mask=np.array([False]), k=4.0, n=1.0)
        est = estimate_revealment(ts, UNIT, 8, rng(17))
        assert est.maximum == 1.0

    def test_color_variant_revealment(self):
        g = rng(18)
        cfg = sample_configuration(300, 0.5, g)
        est = estimate_revealment(cfg, UNIT, 5, g)
        assert est.frequencies.shape == (len(cfg),)
        assert 0.0 <= est.maximum <= 1.0

    def test_saturated_at_small_intensity(self):
        # grids with at most 7 columns explore some column for every line
        # position, so the max revealment is exactly 1 at n <= 2401
        g = rng(19)
        ts = two_stage_sample(250, 4.0, 0.5, g)
        est = estimate_revealment(ts, UNIT, 6, g)
        assert est.maximum == 1.0
