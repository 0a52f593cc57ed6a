"""Empirical best-out-of-n estimation from pools of (validation, test) runs.

Two estimators are provided. The non-parametric one plugs the empirical
distribution into the discrete expected-maximum formula, which reduces to a
rank-weighted average of test scores: the j-th worst-validation record gets
weight (j/m)^n - ((j-1)/m)^n, and records tied on validation split their
combined weight equally. The parametric one assumes a bivariate-normal
performance distribution and evaluates mu_test + rho * sigma_test * E_n
with standard sample estimates (Bessel-corrected standard deviations,
Pearson correlation).

Descriptive statistics used in result reporting (mean, std, IQR, range,
Spearman/Pearson validation-test correlation, Anderson-Darling normality
check) live here too.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .distributions import GaussianParams, std_normal_expected_max
from .errors import DegeneratePoolError, InsufficientDataError, InvalidDataError

__all__ = [
    "Direction",
    "RunRecord",
    "ResultPool",
    "EstimatorKind",
    "BoonEstimate",
    "PoolSummary",
    "NormalityResult",
    "boon_nonparametric",
    "boon_parametric_gaussian",
    "fit_gaussian_params",
    "summarize",
    "anderson_darling_normality",
    "best_single_model",
]

# 5% critical value for the Anderson-Darling statistic when mean and
# variance are estimated from the data, applied to the corrected statistic
# A2 * (1 + 4/m - 25/m^2).
_AD_CRITICAL_5PCT = 0.752


class Direction(str, enum.Enum):
    """Whether a better score is a larger one (accuracy) or smaller (loss)."""

    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


class EstimatorKind(str, enum.Enum):
    NONPARAMETRIC = "nonparametric"
    GAUSSIAN_PARAMETRIC = "gaussian_parametric"


class RunRecord(NamedTuple):
    """One training run: validation score and the matching test score."""

    validation: float
    test: float


@dataclass(frozen=True)
class ResultPool:
    """The m (validation, test) pairs collected for one architecture.

    Record order carries no meaning; every estimator in this package is
    permutation-invariant. Scores must be finite.
    """

    records: tuple[RunRecord, ...]
    direction: Direction = Direction.MAXIMIZE
    metric_name: str = "score"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(RunRecord(*r) for r in self.records))
        object.__setattr__(self, "direction", Direction(self.direction))
        if len(self.records) == 0:
            raise InvalidDataError("result pool must contain at least one record")
        for rec in self.records:
            if not (math.isfinite(rec.validation) and math.isfinite(rec.test)):
                raise InvalidDataError(f"non-finite score in record {rec!r}")

    @property
    def m(self) -> int:
        return len(self.records)

    @cached_property
    def validation_scores(self) -> np.ndarray:
        a = np.array([r.validation for r in self.records], dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def test_scores(self) -> np.ndarray:
        a = np.array([r.test for r in self.records], dtype=float)
        a.flags.writeable = False
        return a

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[tuple[float, float]],
        direction: Direction | str = Direction.MAXIMIZE,
        metric_name: str = "score",
    ) -> "ResultPool":
        return cls(
            records=tuple(RunRecord(float(v), float(t)) for v, t in pairs),
            direction=Direction(direction),
            metric_name=metric_name,
        )

    @classmethod
    def from_arrays(
        cls,
        validation: np.ndarray,
        test: np.ndarray,
        direction: Direction | str = Direction.MAXIMIZE,
        metric_name: str = "score",
    ) -> "ResultPool":
        """Build a pool from two equal-length arrays.

        Fast path for resampling loops: scores are validated vectorized and
        the per-record checks of the regular constructor are skipped.
        """
        validation = np.asarray(validation, dtype=float)
        test = np.asarray(test, dtype=float)
        if validation.shape != test.shape or validation.ndim != 1:
            raise InvalidDataError("validation and test must be equal-length 1-d arrays")
        if validation.size == 0:
            raise InvalidDataError("result pool must contain at least one record")
        if not (np.isfinite(validation).all() and np.isfinite(test).all()):
            raise InvalidDataError("non-finite score in input arrays")
        pool = object.__new__(cls)
        object.__setattr__(
            pool, "records", tuple(map(RunRecord, validation.tolist(), test.tolist()))
        )
        object.__setattr__(pool, "direction", Direction(direction))
        object.__setattr__(pool, "metric_name", metric_name)
        v = validation.copy()
        t = test.copy()
        v.flags.writeable = False
        t.flags.writeable = False
        pool.__dict__["validation_scores"] = v
        pool.__dict__["test_scores"] = t
        return pool


@dataclass(frozen=True)
class BoonEstimate:
    """One best-out-of-n estimate, tagged with what produced it.

    ``extrapolative`` marks estimates where n exceeds the pool size m; the
    formula stays well defined but the estimate leans on the empirical
    tail beyond what the sample supports.
    """

    n: int
    m: int
    value: float
    estimator_kind: EstimatorKind
    extrapolative: bool = False


@dataclass(frozen=True)
class PoolSummary:
    """Descriptive statistics of a pool; entries are None below their
    minimum sample size (std/IQR need m >= 2, correlations m >= 3)."""

    m: int
    mean_test: float
    std_test: float | None
    iqr_test: float | None
    range_test: tuple[float, float]
    spearman_val_test: float | None
    pearson_val_test: float | None


class NormalityResult(NamedTuple):
    statistic: float
    reject_at_5pct: bool


def _oriented_scores(pool: ResultPool) -> tuple[np.ndarray, np.ndarray, float]:
    """Scores negated, if needed, so "best" always means maximal.

    Returns (validation, test, sign); multiply maximize-convention results
    by sign to return to the pool's own convention.
    """
    if pool.direction is Direction.MINIMIZE:
        return -pool.validation_scores, -pool.test_scores, -1.0
    return pool.validation_scores, pool.test_scores, 1.0


def _boon_weighted_average(vals: np.ndarray, tests: np.ndarray, n: int) -> float:
    """Rank-weighted test average over validation order (maximize convention).

    Sorting is by (validation, test) so tied-validation groups are summed in
    a canonical order and the result is bit-identical under record shuffles.
    """
    m = vals.size
    order = np.lexsort((tests, vals))
    sv = vals[order]
    st = tests[order]
    # Boundaries of tied-validation groups in the sorted array.
    group_start = np.flatnonzero(np.concatenate(([True], sv[1:] != sv[:-1])))
    group_end = np.concatenate((group_start[1:], [m]))
    upper = (group_end / m) ** n
    lower = (group_start / m) ** n
    group_mean_test = np.add.reduceat(st, group_start) / (group_end - group_start)
    return float(np.dot(upper - lower, group_mean_test))


def boon_nonparametric(pool: ResultPool, n: int) -> BoonEstimate:
    """Plug-in best-out-of-n estimate from the empirical distribution.

    The result is a convex combination of the pool's test scores: weights
    are non-negative and sum to one, so the value always lies between the
    pool's extreme test scores. n = 1 gives the plain test mean.

    A pool smaller than n is allowed but flagged extrapolative (and a
    warning is emitted): estimating best-of-n from fewer than n runs relies
    on the empirical tail more than the data supports.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    vals, tests, sign = _oriented_scores(pool)
    value = sign * _boon_weighted_average(vals, tests, n)
    extrapolative = pool.m < n
    if extrapolative:
        warnings.warn(
            f"best-out-of-{n} estimated from only m={pool.m} runs; "
            "treat the estimate as extrapolative",
            stacklevel=2,
        )
    return BoonEstimate(
        n=n,
        m=pool.m,
        value=value,
        estimator_kind=EstimatorKind.NONPARAMETRIC,
        extrapolative=extrapolative,
    )


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(np.dot(xc, xc)) * float(np.dot(yc, yc)))
    if denom == 0.0:
        raise DegeneratePoolError("zero variance makes the correlation undefined")
    return float(np.dot(xc, yc) / denom)


def _check_spread(vals: np.ndarray, tests: np.ndarray) -> None:
    if float(np.std(vals)) == 0.0:
        raise DegeneratePoolError("validation scores have zero variance")
    if float(np.std(tests)) == 0.0:
        raise DegeneratePoolError("test scores have zero variance")


def fit_gaussian_params(pool: ResultPool) -> GaussianParams:
    """Fit bivariate-normal parameters to a pool as given (no direction
    handling): sample means, Bessel-corrected stds, Pearson correlation."""
    if pool.m < 3:
        raise InsufficientDataError(f"need at least 3 records to fit, got m={pool.m}")
    vals = pool.validation_scores
    tests = pool.test_scores
    _check_spread(vals, tests)
    return GaussianParams(
        mu_val=float(vals.mean()),
        mu_test=float(tests.mean()),
        sigma_val=float(vals.std(ddof=1)),
        sigma_test=float(tests.std(ddof=1)),
        rho=max(-1.0, min(1.0, _pearson(vals, tests))),
    )


def boon_parametric_gaussian(pool: ResultPool, n: int) -> BoonEstimate:
    """Best-out-of-n estimate assuming a bivariate-normal performance
    distribution: mu_test + rho * sigma_test * E_n(N(0,1)) with the
    parameters replaced by their standard sample estimates.

    Lower variance than the non-parametric estimator when the Gaussian
    assumption holds; biased when it does not.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if pool.m < 3:
        raise InsufficientDataError(
            f"parametric estimation needs m >= 3 records, got m={pool.m}"
        )
    vals, tests, sign = _oriented_scores(pool)
    _check_spread(vals, tests)
    value = sign * _parametric_value(vals, tests, n)
    return BoonEstimate(
        n=n,
        m=pool.m,
        value=value,
        estimator_kind=EstimatorKind.GAUSSIAN_PARAMETRIC,
        extrapolative=pool.m < n,
    )


def _parametric_value(vals: np.ndarray, tests: np.ndarray, n: int) -> float:
    rho = _pearson(vals, tests)
    return float(tests.mean()) + rho * float(tests.std(ddof=1)) * std_normal_expected_max(n)


def summarize(pool: ResultPool) -> PoolSummary:
    """Descriptive statistics of a pool's test scores plus the
    validation-test association.

    IQR uses linear-interpolation quantiles; Spearman uses average ranks
    for ties. Statistics below their minimum sample size (or undefined for
    zero-variance data) come back as None rather than failing.
    """
    tests = pool.test_scores
    vals = pool.validation_scores
    m = pool.m
    mean_test = float(tests.mean())
    std_test = float(tests.std(ddof=1)) if m >= 2 else None
    iqr_test = float(np.quantile(tests, 0.75) - np.quantile(tests, 0.25)) if m >= 2 else None
    range_test = (float(tests.min()), float(tests.max()))

    spearman = pearson = None
    if m >= 3 and np.std(vals) > 0.0 and np.std(tests) > 0.0:
        spearman = float(scipy_stats.spearmanr(vals, tests).statistic)
        pearson = _pearson(vals, tests)
    return PoolSummary(
        m=m,
        mean_test=mean_test,
        std_test=std_test,
        iqr_test=iqr_test,
        range_test=range_test,
        spearman_val_test=spearman,
        pearson_val_test=pearson,
    )


def anderson_darling_normality(values: Sequence[float]) -> NormalityResult:
    """Anderson-Darling check that a sample is consistent with a Gaussian.

    Mean and variance are estimated from the data; the returned statistic
    is A2 * (1 + 4/m - 25/m^2) and is compared against the 5% critical
    value 0.752 for this composite case.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("values must be one-dimensional")
    m = x.size
    if m < 8:
        raise InsufficientDataError(f"need at least 8 values, got {m}")
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise InsufficientDataError("zero variance; normality check is undefined")
    z = np.sort((x - x.mean()) / sd)
    i = np.arange(1, m + 1)
    # logcdf/logsf keep the tail terms finite for extreme standardized values.
    log_cdf = scipy_stats.norm.logcdf(z)
    log_sf = scipy_stats.norm.logsf(z)
    a2 = -m - float(np.mean((2 * i - 1) * (log_cdf + log_sf[::-1])))
    corrected = a2 * (1.0 + 4.0 / m - 25.0 / (m * m))
    return NormalityResult(statistic=corrected, reject_at_5pct=corrected > _AD_CRITICAL_5PCT)


def best_single_model(pool: ResultPool) -> float:
    """Test score of the pool's best-validation record.

    This is the statistic behind conventional "best single model"
    reporting. Validation ties are broken toward the better test score so
    the statistic is a deterministic function of the pool.
    """
    vals, tests, sign = _oriented_scores(pool)
    best_val = vals.max()
    return sign * float(tests[vals == best_val].max())
