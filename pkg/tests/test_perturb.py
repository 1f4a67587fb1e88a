import numpy as np
import pytest
from scipy import stats

from voronoiperc import Rect, has_blue_horizontal_crossing, sample_configuration
from voronoiperc.perturb import (CoupledTriple, coupled_triple, discrete_noise,
                                 eps_map, epsilon_noise, resample_colors,
                                 resample_positions, sprinkle, thin,
                                 two_stage_sample)

UNIT = Rect.unit()


def rng(seed=0):
    return np.random.default_rng(seed)


class TestThin:
    def test_keep_all(self):
        cfg = sample_configuration(200, 0.5, rng(1))
        out = thin(cfg, 1.0, rng(2))
        assert np.array_equal(out.xy, cfg.xy)
        assert np.array_equal(out.colors, cfg.colors)

    def test_keep_none(self):
        cfg = sample_configuration(200, 0.5, rng(1))
        assert thin(cfg, 0.0, rng(2)).is_empty

    def test_binomial_mean(self):
        cfg = sample_configuration(1000, 0.5, rng(3))
        n = len(cfg)
        g = rng(4)
        kept = np.array([len(thin(cfg, 0.5, g)) for _ in range(10_000)])
        sigma = np.sqrt(n * 0.25)
        assert abs(kept.mean() - n / 2) < 3.0 * sigma / np.sqrt(10_000)

    def test_preserves_order_and_colors(self):
        cfg = sample_configuration(300, 0.3, rng(5))
        g = rng(6)
        out = thin(cfg, 0.7, g)
        # kept points appear in original order: their rows form a subsequence
        it = iter(map(tuple, cfg.xy))
        assert all(any(row == kept for kept in it) for row in map(tuple, out.xy))


class TestSprinkle:
    def test_zero_addition(self):
        cfg = sample_configuration(100, 0.5, rng(7))
        out = sprinkle(cfg, 0.0, 0.5, rng(8))
        assert np.array_equal(out.xy, cfg.xy)

    def test_added_count_is_poisson(self):
        cfg = sample_configuration(100, 0.5, rng(9))
        g = rng(10)
        added = np.array([len(sprinkle(cfg, 40.0, 0.5, g)) - len(cfg)
                          for _ in range(4000)])
        assert abs(added.mean() - 40.0) < 3.0 * np.sqrt(40.0 / 4000)
        assert abs(added.var(ddof=1) - 40.0) < 4.0 * 40.0 * np.sqrt(2.0 / 4000)

    def test_originals_unchanged(self):
        cfg = sample_configuration(100, 0.5, rng(11))
        out = sprinkle(cfg, 30.0, 0.5, rng(12))
        assert np.array_equal(out.xy[:len(cfg)], cfg.xy)
        assert np.array_equal(out.colors[:len(cfg)], cfg.colors)


class TestEpsilonNoise:
    def test_eps_zero_identity(self):
        cfg = sample_configuration(300, 0.5, rng(13))
        out = epsilon_noise(cfg, 0.0, 300, 0.5, rng(14))
        assert np.array_equal(out.xy, cfg.xy)

    def test_eps_one_fresh_sample(self):
        cfg = sample_configuration(300, 0.5, rng(15))
        out = epsilon_noise(cfg, 1.0, 300, 0.5, rng(16))
        shared = set(map(tuple, cfg.xy)) & set(map(tuple, out.xy))
        assert not shared

    def test_shared_count(self):
        g = rng(17)
        shared = []
        for _ in range(2000):
            cfg = sample_configuration(1000, 0.5, g)
            out = epsilon_noise(cfg, 0.1, 1000, 0.5, g)
            shared.append(len(set(map(tuple, cfg.xy)) & set(map(tuple, out.xy))))
        # kept count is Binomial(N, 0.9) mixed over N ~ Poisson(1000)
        mean = np.mean(shared)
        sigma = np.sqrt(0.9 * 1000 + 0.81 * 1000) / np.sqrt(2000)
        assert abs(mean - 900.0) < 3.5 * sigma

    def test_marginal_law_preserved(self):
        g = rng(18)
        counts_noise, counts_fresh = [], []
        for _ in range(1500):
            cfg = sample_configuration(400, 0.5, g)
            counts_noise.append(len(epsilon_noise(cfg, 0.1, 400, 0.5, g)))
            counts_fresh.append(len(sample_configuration(400, 0.5, g)))
        _, pval = stats.mannwhitneyu(counts_noise, counts_fresh)
        assert pval > 0.001


class TestResampleColors:
    def test_eps_zero_identity(self):
        cfg = sample_configuration(300, 0.5, rng(19))
        out = resample_colors(cfg, 0.0, rng(20))
        assert np.array_equal(out.colors, cfg.colors)

    def test_positions_always_conserved(self):
        cfg = sample_configuration(300, 0.5, rng(21))
        for eps in (0.2, 0.7, 1.0):
            out = resample_colors(cfg, eps, rng(22))
            assert np.array_equal(out.xy, cfg.xy)
            assert len(out) == len(cfg)

    def test_agreement_rate_at_full_resample(self):
        # oracle: a point keeps its color iff the fresh Bernoulli(1/2) draw
        # repeats it, so the per-point agreement rate at eps=1 is 1/2
        cfg = sample_configuration(1000, 0.5, rng(23))
        g = rng(24)
        agree = total = 0
        for _ in range(300):
            out = resample_colors(cfg, 1.0, g)
            agree += int((out.colors == cfg.colors).sum())
            total += len(cfg)
        sigma = np.sqrt(0.25 / total)
        assert abs(agree / total - 0.5) < 3.0 * sigma

    def test_agreement_rate_partial(self):
        # agreement = (1-eps) + eps*(p^2+(1-p)^2)
        cfg = sample_configuration(1000, 0.3, rng(25))
        g = rng(26)
        agree = total = 0
        for _ in range(300):
            out = resample_colors(cfg, 0.4, g)
            agree += int((out.colors == cfg.colors).sum())
            total += len(cfg)
        expect = 0.6 + 0.4 * (0.09 + 0.49)
        assert abs(agree / total - expect) < 3.0 * np.sqrt(expect * (1 - expect) / total)


class TestResamplePositions:
    def test_eps_zero_identity(self):
        cfg = sample_configuration(300, 0.5, rng(27))
        out = resample_positions(cfg, 0.0, rng(28))
        assert np.array_equal(out.xy, cfg.xy)

    def test_color_multiset_conserved(self):
        cfg = sample_configuration(300, 0.5, rng(29))
        out = resample_positions(cfg, 0.6, rng(30))
        assert np.array_equal(out.colors, cfg.colors)
        assert len(out) == len(cfg)

    def test_moved_count(self):
        cfg = sample_configuration(1000, 0.5, rng(31))
        n = len(cfg)
        g = rng(32)
        moved = np.array([(resample_positions(cfg, 0.2, g).xy != cfg.xy).any(axis=1).sum()
                          for _ in range(5000)])
        sigma = np.sqrt(n * 0.2 * 0.8)
        assert abs(moved.mean() - 0.2 * n) < 3.0 * sigma / np.sqrt(5000)


class TestTwoStage:
    def test_masked_count_mean(self):
        g = rng(33)
        counts = [len(two_stage_sample(500, 16.0, 0.5, g).masked())
                  for _ in range(2000)]
        assert abs(np.mean(counts) - 500.0) < 3.0 * np.sqrt(500.0 / 2000)

    def test_mask_nearly_all_ones_at_k_near_one(self):
        ts = two_stage_sample(500, 1.0 + 1e-12, 0.5, rng(34))
        assert ts.mask.all()

    def test_masked_crossing_matches_direct_law(self):
        g = rng(35)
        a = [float(has_blue_horizontal_crossing(
            two_stage_sample(150, 4.0, 0.5, g).masked(), UNIT))
            for _ in range(600)]
        b = [float(has_blue_horizontal_crossing(
            sample_configuration(150, 0.5, g), UNIT)) for _ in range(600)]
        za, zb = np.mean(a), np.mean(b)
        se = np.sqrt(za * (1 - za) / 600 + zb * (1 - zb) / 600)
        assert abs(za - zb) < 3.0 * max(se, 1e-9)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            two_stage_sample(100, 1.0, 0.5, rng(36))


class TestDiscreteNoise:
    def test_eps_zero_identity(self):
        ts = two_stage_sample(200, 4.0, 0.5, rng(37))
        out = discrete_noise(ts, 0.0, rng(38))
        assert np.array_equal(out, ts.mask)

    def test_eps_one_mean_matches_bernoulli(self):
        ts = two_stage_sample(200, 4.0, 0.5, rng(39))
        g = rng(40)
        means = [discrete_noise(ts, 1.0, g).mean() for _ in range(400)]
        m = len(ts.dense)
        assert abs(np.mean(means) - 0.25) < 3.0 * np.sqrt(0.25 * 0.75 / (400 * m))

    def test_joint_law_matches_continuum_pair(self):
        # pair statistics of (masked, noised-masked) at bit noise
        # eps = eps'/(1-1/k) match those of (sample, eps'-noise sample)
        g = rng(41)
        k, eps_prime = 4.0, 0.375
        eps_bit = eps_map(eps_prime, k)
        prods_bits, prods_cont = [], []
        for _ in range(900):
            ts = two_stage_sample(150, k, 0.5, g)
            m2 = discrete_noise(ts, eps_bit, g)
            prods_bits.append(
                float(has_blue_horizontal_crossing(ts.masked(), UNIT))
                * float(has_blue_horizontal_crossing(ts.masked(m2), UNIT)))
            cfg = sample_configuration(150, 0.5, g)
            other = epsilon_noise(cfg, eps_prime, 150, 0.5, g)
            prods_cont.append(
                float(has_blue_horizontal_crossing(cfg, UNIT))
                * float(has_blue_horizontal_crossing(other, UNIT)))
        za, zb = np.mean(prods_bits), np.mean(prods_cont)
        se = np.sqrt(np.var(prods_bits) / 900 + np.var(prods_cont) / 900)
        assert abs(za - zb) < 3.0 * se


class TestEpsMap:
    def test_paper_value(self):
        assert eps_map(0.25, 2.0) == pytest.approx(0.5)

    def test_zero(self):
        assert eps_map(0.0, 7.3) == 0.0

    def test_boundary(self):
        assert eps_map(1.0 - 1.0 / 5.0, 5.0) == pytest.approx(1.0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            eps_map(0.6, 2.0)


class TestCoupledTriple:
    def test_eps_zero_all_equal(self):
        tri = coupled_triple(300, 0.0, rng(42))
        assert np.array_equal(tri.eta1.xy, tri.eta2.xy)
        assert np.array_equal(tri.eta1.xy, tri.eta3.xy)

    def test_counts_match_law(self):
        g = rng(43)
        ours = [len(coupled_triple(400, 0.1, g).eta2) for _ in range(2000)]
        fresh = [len(sample_configuration(400, 0.5, g)) for _ in range(2000)]
        _, pval = stats.mannwhitneyu(ours, fresh)
        assert pval > 0.001

    def test_eta2_eta3_share_retained_points(self):
        tri = coupled_triple(400, 0.3, rng(44))
        shared = set(map(tuple, tri.eta2.xy)) & set(map(tuple, tri.eta3.xy))
        # shared points include the retained X prefix and the common Y prefix
        assert len(shared) >= min(len(tri.eta2), len(tri.eta3)) * 0.5

    def test_symmetric_difference_chebyshev(self):
        # P(|M - N| > C sqrt(n)) <= eps / C^2 with M, N Poisson(eps n / 2)
        g = rng(45)
        n, eps, C = 400.0, 0.2, 1.5
        excess = 0
        reps = 3000
        for _ in range(reps):
            M = g.poisson(eps * n / 2)
            N = g.poisson(eps * n / 2)
            excess += (abs(M - N) > C * np.sqrt(n))
        bound = eps / C ** 2
        se = np.sqrt(bound * (1 - bound) / reps)
        assert excess / reps <= bound + 3.0 * se

    def test_determinism(self):
        a = coupled_triple(200, 0.2, rng(46))
        b = coupled_triple(200, 0.2, rng(46))
        assert np.array_equal(a.eta3.xy, b.eta3.xy)
