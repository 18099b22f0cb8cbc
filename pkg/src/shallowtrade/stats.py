"""Chi-squared goodness of fit against the coin-flip null."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import LengthMismatch, NonPositiveExpected, UnsupportedSignificanceLevel

# Upper-tail critical values keyed by (degrees of freedom, alpha), as tabulated.
CRITICAL_VALUES = {(1, 0.01): 6.63}


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    critical_value: float
    significant: bool

    def __post_init__(self):
        if not self.statistic >= 0:
            raise ValueError(f"chi-squared statistic must be non-negative, got {self.statistic}")
        if self.significant != (self.statistic > self.critical_value):
            raise ValueError("significant must equal statistic > critical_value")


def chi_squared(observed: Sequence[float], expected: Sequence[float]) -> float:
    """Sum of ``(O - E)**2 / E`` over paired categories."""
    if len(observed) != len(expected):
        raise LengthMismatch(f"{len(observed)} observed vs {len(expected)} expected categories")
    if len(observed) < 2:
        raise LengthMismatch("need at least two categories")
    total = 0.0
    for o, e in zip(observed, expected):
        if not (math.isfinite(e) and e > 0):
            raise NonPositiveExpected(f"expected count {e!r} must be positive")
        total += (o - e) ** 2 / e
    return total


def significance_verdict(statistic: float, df: int = 1, alpha: float = 0.01) -> ChiSquareResult:
    """Compare against the tabulated critical value; significant only when strictly above it."""
    try:
        critical = CRITICAL_VALUES[(df, alpha)]
    except KeyError:
        raise UnsupportedSignificanceLevel(
            f"no tabulated critical value for df={df}, alpha={alpha}; "
            f"supported: {sorted(CRITICAL_VALUES)}"
        ) from None
    return ChiSquareResult(statistic, df, critical, statistic > critical)


def chi_square_test(observed: Sequence[float], expected: Sequence[float],
                    alpha: float = 0.01) -> ChiSquareResult:
    return significance_verdict(chi_squared(observed, expected), len(observed) - 1, alpha)
