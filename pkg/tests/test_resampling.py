import math

import numpy as np
import pytest

from bestofn import (
    CIMethod,
    Direction,
    EstimatorKind,
    GaussianParams,
    InsufficientDataError,
    ResamplingConfig,
    ResamplingDegenerateError,
    ResultPool,
    best_of_m_curve,
    best_single_model,
    bootstrap_ci,
    boon_nonparametric,
    compare_architectures,
    monte_carlo_ci_gaussian,
    smoothed_bootstrap_ci,
)

import helpers
import oracles


def mean_test_score(pool):
    return float(pool.test_scores.mean())


def boon5(pool):
    return boon_nonparametric(pool, 5).value


class TestResamplingConfig:
    def test_defaults_are_valid(self):
        cfg = ResamplingConfig()
        assert cfg.replicates == 10_000 and cfg.level == 0.95 and cfg.bandwidth == "auto"

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(replicates=99),
            dict(level=0.0),
            dict(level=1.0),
            dict(seed=-1),
            dict(bandwidth=-0.5),
            dict(bandwidth="wide"),
            dict(bandwidth=math.inf),
        ],
    )
    def test_invalid_values_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ResamplingConfig(**kwargs)


class TestBootstrapCI:
    def test_identical_records_give_zero_width(self):
        pool = ResultPool.from_pairs([(0.5, 2.0)] * 6)
        ci = bootstrap_ci(pool, boon5, ResamplingConfig(replicates=500, seed=1))
        assert ci.lo == ci.hi == 2.0
        assert ci.method is CIMethod.BOOTSTRAP

    def test_width_matches_normal_theory_for_the_mean(self):
        rng = np.random.default_rng(31)
        pool = ResultPool.from_arrays(rng.standard_normal(400), rng.standard_normal(400))
        ci = bootstrap_ci(pool, mean_test_score, ResamplingConfig(replicates=20_000, seed=3))
        # normal-theory width for the mean of 400 unit-variance scores
        assert ci.width == pytest.approx(2 * 1.96 / math.sqrt(400), rel=0.15)

    def test_boon_interval_stays_inside_test_range(self):
        pool = ResultPool.from_pairs([(0.1, 10.0), (0.2, 20.0), (0.3, 30.0)])
        stat = lambda p: boon_nonparametric(p, 2).value  # noqa: E731
        ci = bootstrap_ci(pool, stat, ResamplingConfig(replicates=100_000, seed=4))
        assert 10.0 <= ci.lo <= ci.hi <= 30.0

    def test_deterministic_for_fixed_seed(self):
        pool = helpers.bivariate_normal_pool(m=30, seed=6)
        cfg = ResamplingConfig(replicates=300, seed=9)
        assert bootstrap_ci(pool, mean_test_score, cfg) == bootstrap_ci(pool, mean_test_score, cfg)

    def test_seed_changes_the_interval(self):
        pool = helpers.bivariate_normal_pool(m=30, seed=6)
        a = bootstrap_ci(pool, mean_test_score, ResamplingConfig(replicates=300, seed=9))
        b = bootstrap_ci(pool, mean_test_score, ResamplingConfig(replicates=300, seed=10))
        assert a != b

    def test_parallel_equals_serial(self):
        pool = helpers.bivariate_normal_pool(m=30, seed=6)
        cfg = ResamplingConfig(replicates=500, seed=9)
        assert bootstrap_ci(pool, mean_test_score, cfg, workers=1) == bootstrap_ci(
            pool, mean_test_score, cfg, workers=4
        )

    def test_higher_level_widens_the_interval(self):
        pool = helpers.bivariate_normal_pool(m=50, seed=12)
        intervals = [
            bootstrap_ci(pool, mean_test_score, ResamplingConfig(replicates=2000, seed=5, level=lvl))
            for lvl in (0.8, 0.95, 0.99)
        ]
        assert intervals[0].lo >= intervals[1].lo >= intervals[2].lo
        assert intervals[0].hi <= intervals[1].hi <= intervals[2].hi

    def test_needs_two_records(self):
        pool = ResultPool.from_pairs([(1.0, 2.0)])
        with pytest.raises(InsufficientDataError):
            bootstrap_ci(pool, mean_test_score, ResamplingConfig(replicates=200, seed=0))

    def test_always_failing_statistic_raises_degenerate(self):
        pool = helpers.bivariate_normal_pool(m=10, seed=1)

        def broken(pool):
            raise ValueError("cannot be computed")

        with pytest.raises(ResamplingDegenerateError):
            bootstrap_ci(pool, broken, ResamplingConfig(replicates=200, seed=0))

    def test_rare_failures_are_retried(self):
        # fails only when a resample repeats one record five times:
        # probability 5 * (1/5)^5 = 0.16%, inside the 1% retry budget
        pool = ResultPool.from_pairs([(float(i), float(i)) for i in range(5)])

        def picky(pool):
            if len(set(pool.records)) == 1:
                raise ValueError("degenerate resample")
            return float(pool.test_scores.mean())

        cfg = ResamplingConfig(replicates=3000, seed=21)
        ci = bootstrap_ci(pool, picky, cfg)
        assert ci.lo <= ci.hi
        assert bootstrap_ci(pool, picky, cfg, workers=3) == ci


class TestSmoothedBootstrapCI:
    def test_zero_bandwidth_equals_vanilla(self):
        pool = helpers.bivariate_normal_pool(m=25, seed=14)
        cfg = ResamplingConfig(replicates=1500, seed=8, bandwidth=0.0)
        plain = bootstrap_ci(pool, boon5, cfg)
        smooth = smoothed_bootstrap_ci(pool, boon5, cfg)
        assert (smooth.lo, smooth.hi) == (plain.lo, plain.hi)
        assert smooth.method is CIMethod.SMOOTHED_BOOTSTRAP

    def test_identical_records_get_positive_width_from_smoothing(self):
        pool = ResultPool.from_pairs([(0.5, 2.0)] * 16)
        widths = {}
        for h in (1.0, 0.25, 0.0625):
            cfg = ResamplingConfig(replicates=4000, seed=2, bandwidth=h)
            widths[h] = smoothed_bootstrap_ci(pool, mean_test_score, cfg).width
            # normal-theory width for the mean of m noisy copies
            assert widths[h] == pytest.approx(2 * 1.96 * h / math.sqrt(16), rel=0.25)
        assert widths[1.0] > widths[0.25] > widths[0.0625] > 0.0

    def test_best_single_model_band_wider_than_boon5(self):
        pool = helpers.bivariate_normal_pool(m=75, rho=0.2, seed=33)
        cfg = ResamplingConfig(replicates=4000, seed=11)
        bsm = smoothed_bootstrap_ci(pool, best_single_model, cfg)
        boo = smoothed_bootstrap_ci(pool, boon5, cfg)
        assert bsm.width > boo.width
        # same comparison at a reduced resample size (pool-size-m bands)
        bsm20 = smoothed_bootstrap_ci(pool, best_single_model, cfg, resample_size=20)
        boo20 = smoothed_bootstrap_ci(pool, boon5, cfg, resample_size=20)
        assert bsm20.width > boo20.width

    def test_auto_bandwidth_follows_pool_scale(self):
        # same shape, 10x the spread: the smoothed interval scales along
        pool1 = helpers.bivariate_normal_pool(m=40, sigma_test=1.0, seed=3)
        pool10 = ResultPool.from_arrays(pool1.validation_scores, 10.0 * pool1.test_scores)
        cfg = ResamplingConfig(replicates=3000, seed=17)
        w1 = smoothed_bootstrap_ci(pool1, mean_test_score, cfg).width
        w10 = smoothed_bootstrap_ci(pool10, mean_test_score, cfg).width
        assert w10 == pytest.approx(10.0 * w1, rel=1e-9)


class TestMonteCarloCI:
    def test_vanishing_spread_collapses_to_the_mean(self):
        params = GaussianParams(mu_val=0.0, mu_test=5.0, sigma_val=1e-9, sigma_test=1e-9, rho=0.3)
        ci = monte_carlo_ci_gaussian(
            params, m=10, n=4, estimator_kind=EstimatorKind.NONPARAMETRIC,
            config=ResamplingConfig(replicates=500, seed=5),
        )
        assert ci.lo == pytest.approx(5.0, abs=1e-6)
        assert ci.hi == pytest.approx(5.0, abs=1e-6)

    def test_interval_contains_true_value_under_perfect_correlation(self):
        params = GaussianParams(mu_val=0.0, mu_test=0.0, sigma_val=1.0, sigma_test=1.0, rho=1.0)
        ci = monte_carlo_ci_gaussian(
            params, m=200, n=5, estimator_kind=EstimatorKind.NONPARAMETRIC,
            config=ResamplingConfig(replicates=2000, seed=29),
        )
        assert ci.contains(1.163)

    def test_smaller_pools_give_wider_intervals(self):
        params = GaussianParams(mu_val=0.0, mu_test=0.0, sigma_val=1.0, sigma_test=1.0, rho=0.5)
        widths_20 = []
        widths_200 = []
        for seed in range(50):
            cfg = ResamplingConfig(replicates=400, seed=seed)
            widths_20.append(
                monte_carlo_ci_gaussian(params, 20, 5, EstimatorKind.NONPARAMETRIC, cfg).width
            )
            widths_200.append(
                monte_carlo_ci_gaussian(params, 200, 5, EstimatorKind.NONPARAMETRIC, cfg).width
            )
        assert np.mean(widths_20) > np.mean(widths_200)

    def test_parametric_kind_matches_nonparametric_roughly(self):
        params = GaussianParams(mu_val=0.0, mu_test=0.0, sigma_val=1.0, sigma_test=1.0, rho=0.4)
        cfg = ResamplingConfig(replicates=2000, seed=3)
        np_ci = monte_carlo_ci_gaussian(params, 80, 5, EstimatorKind.NONPARAMETRIC, cfg)
        pa_ci = monte_carlo_ci_gaussian(params, 80, 5, EstimatorKind.GAUSSIAN_PARAMETRIC, cfg)
        # same target quantity; centers should agree within interval scale
        assert abs((np_ci.lo + np_ci.hi) / 2 - (pa_ci.lo + pa_ci.hi) / 2) < np_ci.width

    def test_parametric_kind_needs_three_records(self):
        params = GaussianParams(0.0, 0.0, 1.0, 1.0, 0.0)
        with pytest.raises(InsufficientDataError):
            monte_carlo_ci_gaussian(
                params, 2, 5, EstimatorKind.GAUSSIAN_PARAMETRIC,
                ResamplingConfig(replicates=200, seed=0),
            )

    def test_deterministic_and_parallel_safe(self):
        params = GaussianParams(0.0, 0.0, 1.0, 1.0, 0.5)
        cfg = ResamplingConfig(replicates=600, seed=44)
        a = monte_carlo_ci_gaussian(params, 30, 5, EstimatorKind.NONPARAMETRIC, cfg, workers=1)
        b = monte_carlo_ci_gaussian(params, 30, 5, EstimatorKind.NONPARAMETRIC, cfg, workers=4)
        assert a == b


class TestBestOfMCurve:
    def test_m1_recovers_the_test_mean(self):
        pool = helpers.bivariate_normal_pool(m=60, rho=0.5, seed=18)
        (point,) = best_of_m_curve(
            pool, [1], 40_000, ResamplingConfig(replicates=500, seed=2), with_ci=False
        )
        assert abs(point.expected_best_test - float(pool.test_scores.mean())) <= 3 * point.mc_se

    def test_toy_pool_matches_enumeration(self):
        records = [(0.1, 10.0), (0.2, 20.0), (0.3, 30.0)]
        pool = ResultPool.from_pairs(records)
        (point,) = best_of_m_curve(
            pool, [2], 200_000, ResamplingConfig(replicates=500, seed=7), with_ci=False
        )
        assert point.expected_best_test == pytest.approx(oracles.enumerate_boon(records, 2), abs=0.05)
        assert point.expected_best_test == pytest.approx(220 / 9, abs=0.05)

    def test_perfect_correlation_curve_is_nondecreasing(self):
        rng = np.random.default_rng(40)
        scores = rng.normal(size=80)
        pool = ResultPool.from_pairs(list(zip(scores, scores)))
        points = best_of_m_curve(
            pool, list(range(1, 11)), 30_000, ResamplingConfig(replicates=500, seed=3),
            with_ci=False,
        )
        values = [p.expected_best_test for p in points]
        assert all(b >= a - 3 * (points[0].mc_se or 0) for a, b in zip(values, values[1:]))

    def test_agrees_with_rank_weighted_estimator(self):
        pool = helpers.bivariate_normal_pool(m=50, rho=0.4, seed=51)
        points = best_of_m_curve(
            pool, [1, 3, 7, 10], 20_000, ResamplingConfig(replicates=500, seed=13),
            with_ci=False,
        )
        for p in points:
            exact = boon_nonparametric(pool, p.m).value
            assert abs(p.expected_best_test - exact) <= 4 * p.mc_se

    def test_curve_points_carry_bands_when_requested(self):
        pool = helpers.bivariate_normal_pool(m=40, rho=0.3, seed=66)
        points = best_of_m_curve(pool, [2, 5], 2000, ResamplingConfig(replicates=800, seed=4))
        for p in points:
            assert p.ci is not None
            assert p.ci.lo <= p.expected_best_test <= p.ci.hi or p.ci.width > 0

    def test_deterministic_and_parallel_safe(self):
        pool = helpers.bivariate_normal_pool(m=25, rho=0.2, seed=55)
        cfg = ResamplingConfig(replicates=400, seed=1)
        a = best_of_m_curve(pool, [1, 4, 6], 3000, cfg, workers=1)
        b = best_of_m_curve(pool, [1, 4, 6], 3000, cfg, workers=3)
        assert a == b

    def test_per_m_streams_do_not_depend_on_list_order(self):
        pool = helpers.bivariate_normal_pool(m=25, rho=0.2, seed=55)
        cfg = ResamplingConfig(replicates=400, seed=1)
        forward = best_of_m_curve(pool, [2, 5], 2000, cfg, with_ci=False)
        backward = best_of_m_curve(pool, [5, 2], 2000, cfg, with_ci=False)
        assert forward[0] == backward[1] and forward[1] == backward[0]

    def test_without_replacement_full_pool_is_best_single_model(self):
        pool = helpers.bivariate_normal_pool(m=12, rho=0.7, seed=23)
        (point,) = best_of_m_curve(
            pool, [12], 500, ResamplingConfig(replicates=500, seed=6),
            with_ci=False, replace=False,
        )
        assert point.expected_best_test == pytest.approx(best_single_model(pool), abs=1e-12)

    def test_without_replacement_rejects_oversized_m(self):
        pool = helpers.bivariate_normal_pool(m=5, seed=2)
        with pytest.raises(ValueError):
            best_of_m_curve(
                pool, [6], 100, ResamplingConfig(replicates=500, seed=0), replace=False
            )

    def test_empty_m_values_rejected(self):
        pool = helpers.bivariate_normal_pool(m=5, seed=2)
        with pytest.raises(ValueError):
            best_of_m_curve(pool, [], 100, ResamplingConfig(replicates=500, seed=0))


class TestCompareArchitectures:
    def test_identical_pools_are_not_significant(self):
        pool = helpers.bivariate_normal_pool(m=30, rho=0.4, seed=3)
        result = compare_architectures(pool, pool, 5, ResamplingConfig(replicates=2000, seed=8))
        assert result.delta == 0.0
        assert not result.significant
        assert result.ci.lo <= 0.0 <= result.ci.hi

    def test_shifted_pool_recovers_the_shift(self):
        delta = 1.75
        pool_a = helpers.bivariate_normal_pool(m=40, rho=0.5, seed=19)
        pool_b = ResultPool.from_arrays(
            pool_a.validation_scores + delta, pool_a.test_scores + delta
        )
        result = compare_architectures(
            pool_a, pool_b, 5, ResamplingConfig(replicates=2000, seed=9)
        )
        assert result.delta == pytest.approx(delta, abs=1e-9)
        assert result.ci.contains(delta)

    def test_single_record_pools_give_zero_width(self):
        pool_a = ResultPool.from_pairs([(1.0, 2.0)])
        pool_b = ResultPool.from_pairs([(1.0, 4.5)])
        result = compare_architectures(
            pool_a, pool_b, 3, ResamplingConfig(replicates=500, seed=0)
        )
        assert result.delta == pytest.approx(2.5, abs=1e-12)
        assert result.ci.lo == result.ci.hi == result.delta

    def test_direction_mismatch_rejected(self):
        pool_a = helpers.bivariate_normal_pool(m=5, seed=1)
        pool_b = helpers.bivariate_normal_pool(m=5, seed=2, direction=Direction.MINIMIZE)
        with pytest.raises(ValueError):
            compare_architectures(pool_a, pool_b, 5, ResamplingConfig(replicates=500, seed=0))

    def test_deterministic_and_parallel_safe(self):
        pool_a = helpers.bivariate_normal_pool(m=20, seed=1)
        pool_b = helpers.bivariate_normal_pool(m=25, seed=2)
        cfg = ResamplingConfig(replicates=800, seed=31)
        assert compare_architectures(pool_a, pool_b, 5, cfg, workers=1) == (
            compare_architectures(pool_a, pool_b, 5, cfg, workers=4)
        )

    def test_minimize_direction_duality(self):
        pool_a = helpers.bivariate_normal_pool(m=15, rho=0.3, seed=4)
        pool_b = helpers.bivariate_normal_pool(m=18, rho=0.3, seed=5)
        neg_a = ResultPool.from_arrays(
            -pool_a.validation_scores, -pool_a.test_scores, Direction.MINIMIZE
        )
        neg_b = ResultPool.from_arrays(
            -pool_b.validation_scores, -pool_b.test_scores, Direction.MINIMIZE
        )
        cfg = ResamplingConfig(replicates=600, seed=12)
        result = compare_architectures(pool_a, pool_b, 4, cfg)
        dual = compare_architectures(neg_a, neg_b, 4, cfg)
        assert dual.delta == pytest.approx(-result.delta, abs=1e-12)
        assert dual.ci.lo == pytest.approx(-result.ci.hi, rel=1e-12)
        assert dual.ci.hi == pytest.approx(-result.ci.lo, rel=1e-12)
