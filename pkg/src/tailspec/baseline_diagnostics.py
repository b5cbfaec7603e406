"""Classical autocorrelation diagnostics used as the comparison baseline.

These operate on the squared residuals.  No estimation-effect correction
is applied, so when the input comes from a fitted model rather than raw
data the chi-square reference law is only approximate; results then carry
a caveat flag.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateDataError, DomainError
from .limit_distributions import chi2_cdf

__all__ = ["AcfEstimate", "LjungBoxResult", "acf_squared", "ljung_box"]


@dataclass(frozen=True)
class AcfEstimate:
    """Sample autocorrelations of the squared series at lags 1..D."""

    lags: np.ndarray
    rho_hat: np.ndarray
    n: int


class LjungBoxResult(NamedTuple):
    statistic: float
    p_value: float
    df: int
    residual_caveat: bool = False


def acf_squared(residuals, D: int) -> AcfEstimate:
    """Autocorrelations of the squared residuals for lags 1..D."""
    x = np.asarray(residuals, dtype=float)
    if x.ndim != 1:
        raise DomainError("residual series must be one-dimensional")
    if D < 1 or D >= x.size:
        raise DomainError(f"need 1 <= D < n, got D={D}, n={x.size}")
    sq = x * x
    centered = sq - sq.mean()
    denom = float(np.dot(centered, centered))
    if denom == 0.0:
        raise DegenerateDataError("squared residuals are constant; autocorrelation undefined")
    rho = np.array(
        [float(np.dot(centered[d:], centered[:-d])) / denom for d in range(1, D + 1)]
    )
    return AcfEstimate(lags=np.arange(1, D + 1), rho_hat=rho, n=x.size)


def ljung_box(residuals, D: int, fitted_residuals: bool = False) -> LjungBoxResult:
    """Portmanteau statistic on squared-residual autocorrelations.

    ``n(n+2) * sum_d rho_d^2 / (n - d)`` referred to chi-square with D
    degrees of freedom.  Set ``fitted_residuals=True`` when the input is
    model output; the flag is echoed so reports can mark the missing
    estimation-effect correction.
    """
    acf = acf_squared(residuals, D)
    n = acf.n
    stat = float(n * (n + 2) * np.sum(acf.rho_hat**2 / (n - acf.lags)))
    p = 1.0 - chi2_cdf(stat, D)
    return LjungBoxResult(statistic=stat, p_value=p, df=D, residual_caveat=fitted_residuals)
