"""One-step-ahead value-at-risk forecasting and the dynamic-quantile backtest.

Forecasting combines the fitted model's next-period scale with the
empirical quantile of the in-sample standardized residuals; the model is
fitted once and the filter is rolled forward through the evaluation
window without re-estimation.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DataError, DomainError
from .estimation import FitResult, aparch_filter, arma_garch_filter, garch_filter
from .limit_distributions import chi2_cdf

__all__ = ["VarForecastSet", "DqResult", "residual_var_quantile", "forecast_var", "dq_test"]


@dataclass(frozen=True)
class VarForecastSet:
    """Forecasts and the hit sequence over one evaluation window.

    ``hits[i]`` indicates whether the i-th evaluation return fell at or
    below its forecast made one step earlier.
    """

    theta: float
    forecasts: np.ndarray
    hits: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise DomainError("theta must lie in (0, 1)")
        if self.forecasts.shape != self.hits.shape:
            raise DomainError("forecasts and hits must have equal length")


class DqResult(NamedTuple):
    statistic: float
    p_value: float
    df: int
    degenerate: bool = False


def residual_var_quantile(residuals, theta: float) -> float:
    """Lower empirical quantile of the residuals: the ceil(theta*m)-th smallest.

    No interpolation; the convention is rank-based like the tail tests.
    """
    x = np.sort(np.asarray(residuals, dtype=float))
    if x.size == 0:
        raise DataError("residual sample is empty")
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0, 1)")
    idx = max(1, math.ceil(theta * x.size))
    return float(x[idx - 1])


def _refilter(fit: FitResult, series: np.ndarray):
    if fit.model == "garch11":
        out = garch_filter(series, fit.params)
    elif fit.model == "aparch11":
        out = aparch_filter(series, fit.params)
    elif fit.model == "arma_garch":
        out = arma_garch_filter(series, fit.params)
    else:  # pragma: no cover
        raise DomainError(f"unknown model '{fit.model}'")
    return out


def forecast_var(fit: FitResult, out_of_sample, theta: float) -> VarForecastSet:
    """Roll the fitted filter forward and forecast the theta-quantile.

    The filter runs over the concatenated in-sample and evaluation series
    at the fitted parameters (no re-estimation); the forecast for
    evaluation return i is the filter's conditional mean plus scale at
    that position times the residual quantile, both measurable from the
    previous period.
    """
    if not fit.converged:
        raise DomainError("forecasting requires a converged fit")
    out_of_sample = np.asarray(out_of_sample, dtype=float)
    if out_of_sample.ndim != 1 or out_of_sample.size < 1:
        raise DataError("out-of-sample series must be a nonempty vector")
    if not np.all(np.isfinite(out_of_sample)):
        raise DataError("out-of-sample series contains non-finite values")
    var_eps = residual_var_quantile(fit.signed_residuals_after_burnin(), theta)
    n = fit.y.size
    full = np.concatenate([fit.y, out_of_sample])
    filt = _refilter(fit, full)
    sigma_ahead = filt.sigma_path[n:]
    mu_ahead = filt.mu_path[n:]
    forecasts = mu_ahead + sigma_ahead * var_eps
    hits = (out_of_sample <= forecasts).astype(float)
    return VarForecastSet(theta=theta, forecasts=forecasts, hits=hits)


def dq_test(v: VarForecastSet, lags: int = 4) -> DqResult:
    """Dynamic-quantile regression backtest of the hit sequence.

    Centered hits are regressed on a constant, their own ``lags`` lags and
    the previous forecast; the quadratic form of the fitted coefficients,
    scaled by theta(1-theta), is referred to chi-square with lags+2
    degrees of freedom.  A rank-deficient design is handled through the
    pseudo-inverse and flagged.
    """
    if lags < 1:
        raise DomainError("lags must be >= 1")
    T = v.hits.size
    if T <= lags + 2:
        raise DataError(f"need more than lags + 2 = {lags + 2} evaluation points, have {T}")
    centered = v.hits - v.theta
    rows = T - lags
    X = np.empty((rows, lags + 2))
    X[:, 0] = 1.0
    for j in range(1, lags + 1):
        X[:, j] = centered[lags - j : T - j]
    X[:, lags + 1] = v.forecasts[lags - 1 : T - 1]
    response = centered[lags:]
    gram = X.T @ X
    rank = np.linalg.matrix_rank(gram)
    degenerate = bool(rank < lags + 2)
    coef = np.linalg.pinv(X) @ response
    stat = float(coef @ gram @ coef / (v.theta * (1.0 - v.theta)))
    df = lags + 2
    return DqResult(statistic=stat, p_value=1.0 - chi2_cdf(stat, df), df=df, degenerate=degenerate)
