"""Serial extremal-dependence estimators and residual specification tests.

The central object is the empirical lag-d tail copula of the absolute
standardized residuals: the fraction (out of k) of lag-d pairs whose two
coordinates both exceed high sample quantiles.  For an adequate model the
residuals are approximately i.i.d., the pre-asymptotic value of that
quantity is ``(k/n)xy``, and two Portmanteau-type statistics aggregate the
squared deviations from it over lags 1..D:

* the pointwise statistic evaluates one exceedance direction ``(x, y)``
  and is asymptotically chi-square with D degrees of freedom;
* the functional statistic integrates along the simplex path
  ``(2-2z, 2z)``, ``z in [iota, 1-iota]``, and converges to four times a
  sum of D integrated squared Brownian bridges.

Both statistics are pure rank statistics of the residual magnitudes:
strictly increasing transformations of the data leave them unchanged.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, InvalidBandwidthError, InvalidLagError

__all__ = [
    "ResidualSample",
    "Bandwidth",
    "TailCopulaCurve",
    "TailTestReport",
    "default_k",
    "dumouchel_k",
    "tail_copula_at",
    "tail_copula_curve",
    "lambda_by_lag",
    "pointwise_test",
    "functional_test",
    "weighted_functional_test",
    "null_confidence_band",
]

DEFAULT_LAGS = 5
DEFAULT_TRIM = 0.1
DEFAULT_RHO = 0.11
DEFAULT_ALPHAS = (0.10, 0.05, 0.01)

# 3-point Gauss-Legendre on [-1, 1]: exact for polynomials of degree <= 5,
# hence exact for the degree-4 integrand of the functional statistic.
_GL_NODES = np.array([-math.sqrt(3.0 / 5.0), 0.0, math.sqrt(3.0 / 5.0)])
_GL_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


@dataclass(frozen=True)
class ResidualSample:
    """Absolute standardized residuals with cached descending order statistics."""

    values: np.ndarray
    order_stats: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or values.size < 2:
            raise DomainError("residual sample must be one-dimensional with n >= 2")
        if not np.all(np.isfinite(values)):
            raise DomainError("residual sample contains non-finite entries")
        if np.any(values < 0):
            raise DomainError("residual sample must hold absolute values (>= 0)")
        order_stats = np.sort(values)[::-1].copy()
        values.setflags(write=False)
        order_stats.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "order_stats", order_stats)

    @classmethod
    def from_residuals(cls, residuals) -> "ResidualSample":
        """Build a sample from signed residuals by taking absolute values."""
        return cls(np.abs(np.asarray(residuals, dtype=float)))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def degenerate(self) -> bool:
        """True when all magnitudes tie, so no strict exceedance exists."""
        return bool(self.order_stats[0] == self.order_stats[-1])


@dataclass(frozen=True)
class Bandwidth:
    """Number of upper order statistics treated as extreme."""

    k: int
    rule: str = "explicit"  # one of {"power_law", "dumouchel", "explicit"}
    rho: float = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidBandwidthError(f"bandwidth k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class TailCopulaCurve:
    """Empirical tail-copula values for one lag on a set of (x, y) points."""

    d: int
    points: tuple  # tuple of (x, y, value)


@dataclass
class TailTestReport:
    """Outcome of one residual extremal-dependence test."""

    statistic: float
    kind: str  # "pointwise_P", "functional_F" or "weighted_WF"
    D: int
    k: int
    n: int
    p_value: float
    per_lag: np.ndarray  # empirical tail copula at (1, 1) for d = 1..D
    critical_values: dict  # alpha -> critical value
    iota: float = None  # functional kinds only
    x: float = None  # pointwise kind only
    y: float = None
    degenerate_data: bool = False

    def reject(self, alpha: float) -> bool:
        return bool(self.statistic > self.critical_values[alpha])

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "kind": self.kind,
            "D": self.D,
            "k": self.k,
            "n": self.n,
            "p_value": self.p_value,
            "per_lag": [float(v) for v in self.per_lag],
            "critical_values": {f"{a:g}": float(c) for a, c in self.critical_values.items()},
            "iota": self.iota,
            "x": self.x,
            "y": self.y,
            "degenerate_data": self.degenerate_data,
        }


def default_k(n: int, rho: float = DEFAULT_RHO) -> Bandwidth:
    """Bandwidth ``k = floor(rho * n**0.99)``, clamped to [1, n-1].

    With ``rho = 0.11`` this approximates the common 10%-of-sample rule
    while still letting k/n vanish asymptotically.
    """
    if n < 2:
        raise InvalidBandwidthError("need n >= 2 to choose a bandwidth")
    if rho <= 0:
        raise DomainError("rho must be positive")
    k = math.floor(rho * n**0.99)
    if k < 1:
        raise InvalidBandwidthError(f"rho={rho} yields k=0 for n={n}; increase rho or n")
    return Bandwidth(min(k, n - 1), rule="power_law", rho=rho)


def dumouchel_k(n: int) -> Bandwidth:
    """The classical 10%-of-sample bandwidth ``k = floor(0.1 n)``."""
    if n < 10:
        raise InvalidBandwidthError("the 10% rule needs n >= 10")
    return Bandwidth(math.floor(0.1 * n), rule="dumouchel")


def _k_value(k) -> int:
    if isinstance(k, Bandwidth):
        return k.k
    kk = int(k)
    if kk != k or kk < 1:
        raise InvalidBandwidthError(f"bandwidth k must be a positive integer, got {k}")
    return kk


def _as_sample(sample) -> ResidualSample:
    if isinstance(sample, ResidualSample):
        return sample
    return ResidualSample(np.asarray(sample, dtype=float))


def _check_threshold_index(j: int, n: int, what: str) -> None:
    if j + 1 > n:
        raise InvalidBandwidthError(
            f"threshold index {j + 1} exceeds sample size {n} ({what}); reduce k or x/y"
        )


def tail_copula_at(sample, k, d: int, x: float, y: float) -> float:
    """Empirical lag-d tail copula at direction ``(x, y)``.

    Counts pairs ``t`` with ``value[t]`` strictly above the
    ``(floor(k x)+1)``-th largest magnitude and ``value[t-d]`` strictly
    above the ``(floor(k y)+1)``-th largest, divided by k.  Ties never
    count as exceedances, which makes the estimator a pure rank statistic.
    """
    s = _as_sample(sample)
    kk = _k_value(k)
    if x <= 0 or y <= 0:
        raise DomainError("x and y must be positive")
    if d < 1 or int(d) != d:
        raise InvalidLagError(f"lag must be a positive integer, got {d}")
    if d >= s.n:
        raise InvalidLagError(f"lag {d} requires more than {d} observations, have {s.n}")
    jx = math.floor(kk * x)
    jy = math.floor(kk * y)
    _check_threshold_index(jx, s.n, "x direction")
    _check_threshold_index(jy, s.n, "y direction")
    thr_x = s.order_stats[jx]  # (jx+1)-th largest, 0-based indexing
    thr_y = s.order_stats[jy]
    hits = np.count_nonzero((s.values[d:] > thr_x) & (s.values[:-d] > thr_y))
    return hits / kk


def tail_copula_curve(sample, k, d: int, points) -> TailCopulaCurve:
    """Evaluate the lag-d estimator on a sequence of (x, y) points."""
    s = _as_sample(sample)
    vals = tuple((float(x), float(y), tail_copula_at(s, k, d, x, y)) for x, y in points)
    return TailCopulaCurve(d=int(d), points=vals)


def lambda_by_lag(sample, k, D: int, x: float = 1.0, y: float = 1.0) -> np.ndarray:
    """Per-lag estimates for d = 1..D at a fixed direction (diagnostic plot data)."""
    s = _as_sample(sample)
    return np.array([tail_copula_at(s, k, d, x, y) for d in range(1, D + 1)])


def null_confidence_band(n: int, k, alpha: float, x: float = 1.0, y: float = 1.0):
    """Pointwise null band for the lag-d estimates under serial independence.

    Centered at ``(k/n)xy`` with half-width ``z_{1-alpha/2} sqrt(xy/n)``,
    from the asymptotic standard-normal law of the scaled deviation.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if x <= 0 or y <= 0:
        raise DomainError("x and y must be positive")
    kk = _k_value(k)
    center = kk / n * x * y
    half = ndtri(1.0 - alpha / 2.0) * math.sqrt(x * y / n)
    return center - half, center + half


def pointwise_test(
    sample,
    k=None,
    D: int = DEFAULT_LAGS,
    x: float = 1.0,
    y: float = 1.0,
    alphas=DEFAULT_ALPHAS,
) -> TailTestReport:
    """Portmanteau test of residual extremal independence at one direction.

    The statistic sums ``n/(xy)`` times the squared deviations of the
    lag-d estimates from the null value ``(k/n)xy`` over d = 1..D and is
    compared against the chi-square distribution with D degrees of freedom.
    """
    from . import limit_distributions as ld

    s = _as_sample(sample)
    kk = _k_value(k) if k is not None else default_k(s.n).k
    if D < 1 or D >= s.n:
        raise InvalidLagError(f"need 1 <= D < n, got D={D}, n={s.n}")
    per_lag = lambda_by_lag(s, kk, D, x, y)
    null_value = kk / s.n * x * y
    statistic = s.n / (x * y) * float(np.sum((per_lag - null_value) ** 2))
    p_value = 1.0 - ld.chi2_cdf(statistic, D)
    critical_values = {a: ld.chi2_quantile(1.0 - a, D) for a in alphas}
    diag = per_lag if (x, y) == (1.0, 1.0) else lambda_by_lag(s, kk, D, 1.0, 1.0)
    return TailTestReport(
        statistic=statistic,
        kind="pointwise_P",
        D=D,
        k=kk,
        n=s.n,
        p_value=p_value,
        per_lag=diag,
        critical_values=critical_values,
        x=x,
        y=y,
        degenerate_data=s.degenerate,
    )


def _path_segments(k: int, iota: float):
    """Breakpoints of the piecewise-constant estimator along (2-2z, 2z).

    The floor indices change only when 2kz crosses an integer, so the
    integrand is a fixed degree-4 polynomial between consecutive
    multiples of 1/(2k) inside [iota, 1-iota].
    """
    lo, hi = iota, 1.0 - iota
    m_lo = math.floor(2 * k * iota) + 1
    m_hi = math.ceil(2 * k * (1.0 - iota)) - 1
    inner = [m / (2.0 * k) for m in range(m_lo, m_hi + 1) if lo < m / (2.0 * k) < hi]
    return np.array([lo] + inner + [hi])


def _exceedance_ranks(values: np.ndarray, ascending: np.ndarray, d: int):
    """Per-pair counts of sample values >= each coordinate.

    ``value > order_stats[j]`` (0-based, i.e. strictly above the (j+1)-th
    largest) holds exactly when the number of sample values >= value is at
    most j, which turns threshold comparisons into integer comparisons.
    """
    n = values.size
    a = n - np.searchsorted(ascending, values[d:], side="left")
    b = n - np.searchsorted(ascending, values[:-d], side="left")
    return a, b


def _functional_statistic(s: ResidualSample, k: int, D: int, iota: float, psi=None) -> float:
    n = s.n
    zs = _path_segments(k, iota)
    mids = 0.5 * (zs[:-1] + zs[1:])
    widths = zs[1:] - zs[:-1]
    jx = np.floor(k * (2.0 - 2.0 * mids)).astype(np.int64)
    jy = np.floor(2.0 * k * mids).astype(np.int64)
    _check_threshold_index(int(jx.max()), n, "functional path")
    _check_threshold_index(int(jy.max()), n, "functional path")

    # quadrature nodes per segment, shared across lags
    zq = mids[:, None] + 0.5 * widths[:, None] * _GL_NODES[None, :]
    null_q = (k / n) * (2.0 - 2.0 * zq) * (2.0 * zq)
    if psi is not None:
        weights_q = np.asarray(psi(zq), dtype=float)
        if weights_q.shape != zq.shape:
            weights_q = np.broadcast_to(weights_q, zq.shape)
        if np.any(weights_q < 0) or not np.all(np.isfinite(weights_q)):
            raise DomainError("weight function must be finite and nonnegative on [iota, 1-iota]")

    ascending = s.order_stats[::-1]
    total = 0.0
    for d in range(1, D + 1):
        a, b = _exceedance_ranks(s.values, ascending, d)
        counts = ((a[None, :] <= jx[:, None]) & (b[None, :] <= jy[:, None])).sum(axis=1)
        lam = counts / k
        integrand = (lam[:, None] - null_q) ** 2
        if psi is not None:
            integrand = integrand * weights_q
        total += float(((integrand * _GL_WEIGHTS[None, :]).sum(axis=1) * 0.5 * widths).sum())
    return n * total


def functional_test(
    sample,
    k=None,
    D: int = DEFAULT_LAGS,
    iota: float = DEFAULT_TRIM,
    alphas=DEFAULT_ALPHAS,
    limit_sample=None,
    cache_dir=None,
) -> TailTestReport:
    """Functional Portmanteau test integrating over exceedance directions.

    The integral over each flat segment of the estimator is computed with
    3-point Gauss-Legendre quadrature, which is exact for the degree-4
    integrand, so the statistic carries no grid-resolution knob.  Critical
    values come from the tabulated functional limit law for ``iota = 0.1``
    at the standard levels, otherwise from a simulated (and cached) sample
    of the limit; the p-value is always the add-one empirical tail
    probability under such a sample.
    """
    from . import limit_distributions as ld

    s = _as_sample(sample)
    kk = _k_value(k) if k is not None else default_k(s.n).k
    if not 0.0 < iota < 0.5:
        raise DomainError("iota must lie in (0, 1/2)")
    if D < 1 or D >= s.n:
        raise InvalidLagError(f"need 1 <= D < n, got D={D}, n={s.n}")
    if math.floor(2 * kk * (1.0 - iota)) + 1 > s.n:
        raise InvalidBandwidthError(
            f"k={kk} too large for the functional path: floor(2k(1-iota))+1 > n={s.n}"
        )
    statistic = _functional_statistic(s, kk, D, iota, psi=None)
    if limit_sample is None:
        limit_sample = ld.default_limit_sample(D, iota, cache_dir=cache_dir)
    p_value = ld.limit_p_value(statistic, limit_sample)
    critical_values = {
        a: ld.critical_value(D, a, iota, sample=limit_sample, cache_dir=cache_dir) for a in alphas
    }
    return TailTestReport(
        statistic=statistic,
        kind="functional_F",
        D=D,
        k=kk,
        n=s.n,
        p_value=p_value,
        per_lag=lambda_by_lag(s, kk, D, 1.0, 1.0),
        critical_values=critical_values,
        iota=iota,
        degenerate_data=s.degenerate,
    )


def weighted_functional_test(
    sample,
    k=None,
    D: int = DEFAULT_LAGS,
    iota: float = DEFAULT_TRIM,
    weight=None,
    alphas=DEFAULT_ALPHAS,
    limit_config=None,
) -> TailTestReport:
    """Weighted variant of the functional test.

    ``weight`` is a nonnegative continuous function of z multiplying the
    squared deviation; the unit weight reproduces :func:`functional_test`
    exactly.  Reference quantiles and the p-value come from a freshly
    simulated sample of the weighted limit law.
    """
    from . import limit_distributions as ld

    if weight is None:
        weight = _unit_weight
    s = _as_sample(sample)
    kk = _k_value(k) if k is not None else default_k(s.n).k
    if not 0.0 < iota < 0.5:
        raise DomainError("iota must lie in (0, 1/2)")
    if math.floor(2 * kk * (1.0 - iota)) + 1 > s.n:
        raise InvalidBandwidthError(
            f"k={kk} too large for the functional path: floor(2k(1-iota))+1 > n={s.n}"
        )
    statistic = _functional_statistic(s, kk, D, iota, psi=weight)
    config = limit_config if limit_config is not None else ld.pvalue_sim_config(iota, weight)
    limit_sample = ld.simulate_limit(config, D)
    p_value = ld.limit_p_value(statistic, limit_sample)
    critical_values = {a: ld.sample_quantile(limit_sample, 1.0 - a) for a in alphas}
    return TailTestReport(
        statistic=statistic,
        kind="weighted_WF",
        D=D,
        k=kk,
        n=s.n,
        p_value=p_value,
        per_lag=lambda_by_lag(s, kk, D, 1.0, 1.0),
        critical_values=critical_values,
        iota=iota,
        degenerate_data=s.degenerate,
    )


def _unit_weight(z):
    return np.ones_like(np.asarray(z, dtype=float))
