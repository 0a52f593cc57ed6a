"""Resampling-based uncertainty for best-out-of-n estimates.

Percentile bootstrap, Gaussian-kernel smoothed bootstrap, parametric Monte
Carlo intervals, expected-best curves over the number of experiments, and
two-pool comparison through the interval on the estimate difference.

Determinism contract: replicate r draws from a dedicated stream derived
from (seed, r) by a counter-style split (numpy SeedSequence spawn keys),
and results are aggregated into indexed slots. Output is therefore
bit-identical for a given seed no matter how replicates are scheduled,
including under thread parallelism (``workers > 1``).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .distributions import GaussianParams
from .errors import (
    BestOfNError,
    InsufficientDataError,
    ResamplingDegenerateError,
)
from .estimators import (
    EstimatorKind,
    ResultPool,
    _boon_weighted_average,
    _check_spread,
    _oriented_scores,
    _parametric_value,
)

__all__ = [
    "ResamplingConfig",
    "CIMethod",
    "ConfidenceInterval",
    "CurvePoint",
    "ComparisonResult",
    "bootstrap_ci",
    "smoothed_bootstrap_ci",
    "monte_carlo_ci_gaussian",
    "best_of_m_curve",
    "compare_architectures",
]

# Retries are tolerated for up to this fraction of all statistic
# evaluations before a resampling run is declared degenerate.
_FAILURE_BUDGET = 0.01
_MAX_ATTEMPTS_PER_REPLICATE = 100

# Fixed chunk length for vectorized curve sampling. Part of the output
# contract: chunking follows sample count only, never worker count.
_CURVE_CHUNK = 65536


@dataclass(frozen=True)
class ResamplingConfig:
    """Knobs shared by every resampling routine.

    ``bandwidth`` only matters for the smoothed bootstrap: "auto" selects
    the per-axis rule sigma_hat * m**(-1/6); an explicit value is used for
    both axes as given.
    """

    replicates: int = 10_000
    level: float = 0.95
    seed: int = 0
    bandwidth: float | str = "auto"

    def __post_init__(self):
        if self.replicates < 100:
            raise ValueError(f"replicates must be >= 100, got {self.replicates}")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit an unsigned 64-bit integer")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "auto":
                raise ValueError(f'bandwidth must be "auto" or a number, got {self.bandwidth!r}')
        elif not (math.isfinite(self.bandwidth) and self.bandwidth >= 0.0):
            raise ValueError(f"bandwidth must be non-negative, got {self.bandwidth}")


class CIMethod(str, enum.Enum):
    BOOTSTRAP = "bootstrap"
    SMOOTHED_BOOTSTRAP = "smoothed_bootstrap"
    MONTE_CARLO_GAUSSIAN = "monte_carlo_gaussian"


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float
    method: CIMethod
    replicates: int

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class CurvePoint:
    """Expected best-validation test score at pool size m, with the
    sampling interval of that best-single-model statistic when requested."""

    m: int
    expected_best_test: float
    ci: ConfidenceInterval | None = None
    mc_se: float | None = None


class ComparisonResult(NamedTuple):
    delta: float
    ci: ConfidenceInterval
    significant: bool


def _replicate_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one replicate (or one sub-task)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def _map_indexed(count: int, fn: Callable[[int], object], workers: int) -> list:
    """Evaluate fn(0..count-1) into index-ordered slots, optionally threaded."""
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        chunksize = max(1, count // (workers * 8))
        return list(ex.map(fn, range(count), chunksize=chunksize))


def _percentile_interval(
    values: np.ndarray, level: float, method: CIMethod, replicates: int
) -> ConfidenceInterval:
    lo, hi = np.quantile(values, [(1.0 - level) / 2.0, (1.0 + level) / 2.0])
    return ConfidenceInterval(
        lo=float(lo), hi=float(hi), level=level, method=method, replicates=replicates
    )


def _replicate_with_retry(
    index: int,
    seed: int,
    draw: Callable[[np.random.Generator], object],
    evaluate: Callable[[object], float],
) -> tuple[float, int]:
    """One replicate value plus the number of failed attempts it took.

    Retries draw fresh resamples from the replicate's own stream, so the
    result stays independent of every other replicate.
    """
    rng = _replicate_rng(seed, index)
    failures = 0
    for _ in range(_MAX_ATTEMPTS_PER_REPLICATE):
        sample = draw(rng)
        try:
            value = float(evaluate(sample))
        except (BestOfNError, ValueError, ZeroDivisionError, FloatingPointError):
            failures += 1
            continue
        if math.isfinite(value):
            return value, failures
        failures += 1
    return math.nan, failures


def _collect_replicates(
    count: int,
    seed: int,
    draw: Callable[[np.random.Generator], object],
    evaluate: Callable[[object], float],
    workers: int,
) -> np.ndarray:
    pairs = _map_indexed(
        count, lambda i: _replicate_with_retry(i, seed, draw, evaluate), workers
    )
    values = np.array([v for v, _ in pairs], dtype=float)
    failures = sum(f for _, f in pairs)
    attempts = count + failures
    if np.isnan(values).any() or failures / attempts > _FAILURE_BUDGET:
        raise ResamplingDegenerateError(failures / attempts)
    return values


def _auto_bandwidths(pool: ResultPool) -> tuple[float, float]:
    # Scott-style rule for bivariate data: sigma_hat * m**(-1/6) per axis.
    factor = pool.m ** (-1.0 / 6.0)
    sd_val = float(pool.validation_scores.std(ddof=1)) if pool.m >= 2 else 0.0
    sd_test = float(pool.test_scores.std(ddof=1)) if pool.m >= 2 else 0.0
    return sd_val * factor, sd_test * factor


def _resolve_bandwidths(pool: ResultPool, bandwidth: float | str) -> tuple[float, float]:
    if bandwidth == "auto":
        return _auto_bandwidths(pool)
    return float(bandwidth), float(bandwidth)


def _bootstrap_interval(
    pool: ResultPool,
    statistic: Callable[[ResultPool], float],
    config: ResamplingConfig,
    h_val: float,
    h_test: float,
    method: CIMethod,
    resample_size: int | None,
    workers: int,
) -> ConfidenceInterval:
    if pool.m < 2:
        raise InsufficientDataError(f"bootstrap needs m >= 2 records, got m={pool.m}")
    size = pool.m if resample_size is None else int(resample_size)
    if size < 1:
        raise ValueError(f"resample_size must be >= 1, got {size}")
    vals = pool.validation_scores
    tests = pool.test_scores
    smoothing = h_val > 0.0 or h_test > 0.0

    def draw(rng: np.random.Generator) -> ResultPool:
        idx = rng.integers(0, pool.m, size=size)
        v = vals[idx]
        t = tests[idx]
        if smoothing:
            noise = rng.standard_normal((size, 2))
            v = v + h_val * noise[:, 0]
            t = t + h_test * noise[:, 1]
        return ResultPool.from_arrays(v, t, pool.direction, pool.metric_name)

    values = _collect_replicates(config.replicates, config.seed, draw, statistic, workers)
    return _percentile_interval(values, config.level, method, config.replicates)


def bootstrap_ci(
    pool: ResultPool,
    statistic: Callable[[ResultPool], float],
    config: ResamplingConfig,
    *,
    resample_size: int | None = None,
    workers: int = 1,
) -> ConfidenceInterval:
    """Percentile bootstrap interval for any pool statistic.

    Draws ``config.replicates`` with-replacement resamples (of the pool's
    own size unless ``resample_size`` narrows them), evaluates the
    statistic on each, and takes the (1-level)/2 and (1+level)/2 quantiles
    of the replicate values. A statistic may fail on the odd degenerate
    resample; such replicates are redrawn, and the run aborts with
    :class:`ResamplingDegenerateError` if more than 1% of evaluations fail.
    """
    return _bootstrap_interval(
        pool, statistic, config, 0.0, 0.0, CIMethod.BOOTSTRAP, resample_size, workers
    )


def smoothed_bootstrap_ci(
    pool: ResultPool,
    statistic: Callable[[ResultPool], float],
    config: ResamplingConfig,
    *,
    resample_size: int | None = None,
    workers: int = 1,
) -> ConfidenceInterval:
    """Bootstrap with additive bivariate Gaussian noise on each resampled
    (validation, test) pair.

    Smoothing effectively expands a small pool: statistics that react to
    few order statistics (like the best-validation test score) get a
    usable replicate distribution instead of a handful of repeated values.
    With bandwidth 0 the output is replicate-for-replicate identical to
    :func:`bootstrap_ci` under the same seed.
    """
    h_val, h_test = _resolve_bandwidths(pool, config.bandwidth)
    return _bootstrap_interval(
        pool, statistic, config, h_val, h_test, CIMethod.SMOOTHED_BOOTSTRAP,
        resample_size, workers,
    )


def _simulate_scores(
    params: GaussianParams, m: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    z = rng.standard_normal((m, 2))
    vals = params.mu_val + params.sigma_val * z[:, 0]
    tests = params.mu_test + params.sigma_test * (
        params.rho * z[:, 0] + math.sqrt(1.0 - params.rho**2) * z[:, 1]
    )
    return vals, tests


def monte_carlo_ci_gaussian(
    params: GaussianParams,
    m: int,
    n: int,
    estimator_kind: EstimatorKind,
    config: ResamplingConfig,
    *,
    workers: int = 1,
) -> ConfidenceInterval:
    """Sampling interval of a best-out-of-n estimator at pool size m under
    a known bivariate-normal performance distribution.

    Each replicate simulates a fresh pool of m draws from ``params`` and
    re-evaluates the chosen estimator; the percentile interval of those
    replicate values captures how much the estimator moves from one
    m-experiment study to the next.
    """
    estimator_kind = EstimatorKind(estimator_kind)
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    if estimator_kind is EstimatorKind.GAUSSIAN_PARAMETRIC and m < 3:
        raise InsufficientDataError("parametric estimation needs m >= 3 simulated records")

    def draw(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        return _simulate_scores(params, m, rng)

    if estimator_kind is EstimatorKind.NONPARAMETRIC:
        def evaluate(sample: tuple[np.ndarray, np.ndarray]) -> float:
            vals, tests = sample
            return _boon_weighted_average(vals, tests, n)
    else:
        def evaluate(sample: tuple[np.ndarray, np.ndarray]) -> float:
            vals, tests = sample
            _check_spread(vals, tests)
            return _parametric_value(vals, tests, n)

    values = _collect_replicates(config.replicates, config.seed, draw, evaluate, workers)
    return _percentile_interval(
        values, config.level, CIMethod.MONTE_CARLO_GAUSSIAN, config.replicates
    )


def _best_test_draws(
    vals: np.ndarray,
    tests: np.ndarray,
    m: int,
    count: int,
    rng: np.random.Generator,
    h_val: float,
    h_test: float,
    replace: bool,
) -> np.ndarray:
    """Test scores of the best-validation record across ``count`` samples
    of size m, vectorized in fixed-size chunks.

    ``vals`` must already be oriented so best means maximal. Validation
    ties are resolved uniformly at random, which keeps the sample mean an
    unbiased Monte Carlo image of the rank-weighted estimator.
    """
    pool_size = vals.size
    smoothing = h_val > 0.0 or h_test > 0.0
    chunk = _CURVE_CHUNK if replace else max(1, (1 << 21) // max(pool_size, 1))
    out = np.empty(count, dtype=float)
    pos = 0
    while pos < count:
        c = min(chunk, count - pos)
        if replace:
            idx = rng.integers(0, pool_size, size=(c, m))
        else:
            keys = rng.random((c, pool_size))
            idx = np.argpartition(keys, m - 1, axis=1)[:, :m]
        v = vals[idx]
        t = tests[idx]
        if smoothing:
            noise = rng.standard_normal((c, m, 2))
            v = v + h_val * noise[:, :, 0]
            t = t + h_test * noise[:, :, 1]
        tie_break = rng.random((c, m))
        best = v.max(axis=1, keepdims=True)
        pick = np.where(v == best, tie_break, -1.0).argmax(axis=1)
        out[pos : pos + c] = t[np.arange(c), pick]
        pos += c
    return out


def best_of_m_curve(
    pool: ResultPool,
    m_values: Sequence[int],
    samples_per_m: int,
    config: ResamplingConfig,
    *,
    with_ci: bool = True,
    replace: bool = True,
    workers: int = 1,
) -> list[CurvePoint]:
    """Expected best-validation test score as a function of pool size m.

    For each m, draws ``samples_per_m`` with-replacement samples of size m
    from the pool, takes each sample's best-validation record, and averages
    the test scores: the Monte Carlo counterpart of the rank-weighted
    estimator at n = m. With ``with_ci`` the smoothed-bootstrap percentile
    band of the best-single-model statistic at that pool size is attached
    (``config.replicates`` smoothed draws).

    ``replace=False`` switches to without-replacement samples (requires
    m <= pool.m) for sensitivity analysis; the default matches the
    with-replacement reading used by the estimator cross-check.
    """
    m_values = list(m_values)
    if len(m_values) == 0:
        raise ValueError("m_values must not be empty")
    if samples_per_m < 1:
        raise ValueError(f"samples_per_m must be >= 1, got {samples_per_m}")
    for m in m_values:
        if m < 1:
            raise ValueError(f"pool sizes must be >= 1, got {m}")
        if not replace and m > pool.m:
            raise ValueError(
                f"without-replacement samples of size {m} exceed the pool (m={pool.m})"
            )
    vals, tests, sign = _oriented_scores(pool)
    h_val, h_test = _resolve_bandwidths(pool, config.bandwidth)

    def one_point(task_index: int) -> CurvePoint:
        m = m_values[task_index]
        point_rng = _replicate_rng(config.seed, m, 0)
        draws = _best_test_draws(vals, tests, m, samples_per_m, point_rng, 0.0, 0.0, replace)
        expected = sign * float(draws.mean())
        mc_se = float(draws.std(ddof=1) / math.sqrt(samples_per_m)) if samples_per_m > 1 else None
        ci = None
        if with_ci:
            band_rng = _replicate_rng(config.seed, m, 1)
            band = sign * _best_test_draws(
                vals, tests, m, config.replicates, band_rng, h_val, h_test, replace
            )
            ci = _percentile_interval(
                band, config.level, CIMethod.SMOOTHED_BOOTSTRAP, config.replicates
            )
        return CurvePoint(m=m, expected_best_test=expected, ci=ci, mc_se=mc_se)

    return list(_map_indexed(len(m_values), one_point, workers))


def compare_architectures(
    pool_a: ResultPool,
    pool_b: ResultPool,
    n: int,
    config: ResamplingConfig,
    *,
    workers: int = 1,
) -> ComparisonResult:
    """Difference in non-parametric best-out-of-n between two pools, with a
    bootstrap interval on the difference.

    Each replicate resamples both pools independently and recomputes the
    difference (pool_b minus pool_a). The improvement is called significant
    when zero lies outside the interval.
    """
    if pool_a.direction is not pool_b.direction:
        raise ValueError(
            f"pools disagree on direction: {pool_a.direction.value} vs {pool_b.direction.value}"
        )
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    vals_a, tests_a, sign = _oriented_scores(pool_a)
    vals_b, tests_b, _ = _oriented_scores(pool_b)
    m_a, m_b = pool_a.m, pool_b.m

    delta = sign * (
        _boon_weighted_average(vals_b, tests_b, n)
        - _boon_weighted_average(vals_a, tests_a, n)
    )

    def draw(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        return rng.integers(0, m_a, size=m_a), rng.integers(0, m_b, size=m_b)

    def evaluate(sample: tuple[np.ndarray, np.ndarray]) -> float:
        idx_a, idx_b = sample
        return sign * (
            _boon_weighted_average(vals_b[idx_b], tests_b[idx_b], n)
            - _boon_weighted_average(vals_a[idx_a], tests_a[idx_a], n)
        )

    values = _collect_replicates(config.replicates, config.seed, draw, evaluate, workers)
    ci = _percentile_interval(values, config.level, CIMethod.BOOTSTRAP, config.replicates)
    significant = not ci.contains(0.0)
    return ComparisonResult(delta=delta, ci=ci, significant=significant)
