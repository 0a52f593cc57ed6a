"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary argument validation (negative
sigma, n = 0, and so on); the classes here mark domain conditions a caller
may want to handle separately.
"""

from __future__ import annotations


class BestOfNError(Exception):
    """Base class for all package-specific errors."""


class InvalidDistributionError(BestOfNError, ValueError):
    """A distribution violates its contract (e.g. CDF not normalized)."""


class InvalidDataError(BestOfNError, ValueError):
    """Input scores are unusable (non-finite values, empty pool)."""


class InsufficientDataError(BestOfNError, ValueError):
    """Too few observations for the requested statistic."""


class DegeneratePoolError(BestOfNError, ValueError):
    """A pool has zero variance on an axis a statistic needs.

    The message names the degenerate axis ("validation" or "test").
    """


class ResamplingDegenerateError(BestOfNError, RuntimeError):
    """The statistic failed on more than the tolerated fraction of resamples."""

    def __init__(self, failure_fraction: float, message: str | None = None):
        self.failure_fraction = failure_fraction
        if message is None:
            message = (
                f"statistic failed on {failure_fraction:.1%} of resamples "
                "(tolerated: 1%)"
            )
        super().__init__(message)


class PoolFileError(BestOfNError, ValueError):
    """An input file could not be turned into a valid result pool.

    ``bad_rows`` lists (line_number, reason) pairs for rejected rows so no
    row is ever dropped silently.
    """

    def __init__(self, message: str, bad_rows: list[tuple[int, str]] | None = None):
        self.bad_rows = bad_rows or []
        if self.bad_rows:
            detail = "; ".join(f"line {ln}: {why}" for ln, why in self.bad_rows[:20])
            if len(self.bad_rows) > 20:
                detail += f"; ... ({len(self.bad_rows)} rejected rows total)"
            message = f"{message}: {detail}"
        super().__init__(message)
