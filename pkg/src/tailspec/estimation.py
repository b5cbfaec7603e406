"""Truncated volatility filters and Gaussian quasi-maximum-likelihood fitting.

Filters follow the truncated recursions with zero initial values; the first
few fitted volatilities are therefore distorted, which is why a burn-in
prefix of the residuals (default 10) is discarded before testing.  The QML
objective itself initializes its recursion at the sample backcast value so
the criterion is not dominated by the first observations; see the module
notes on ``qml_fit``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .dgp import AparchXParams, ArmaGarchParams, GarchParams
from .errors import DataError, DomainError, FitError
from .rng import rng_stream
from .tail_dependence import ResidualSample

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


__all__ = [
    "FilterOutput",
    "FitResult",
    "aparch_filter",
    "garch_filter",
    "arma_garch_filter",
    "qml_fit",
    "standardized_residuals",
]

DEFAULT_BURN_IN = 10
MAX_PERSISTENCE = 0.9999
_GRAD_TOL = 1e-6  # first-order stationarity in transformed coordinates
_NM_OPTIONS = dict(xatol=1e-8, fatol=1e-8, maxiter=2000, maxfev=5000)


@dataclass(frozen=True)
class FilterOutput:
    """Fitted conditional scale/mean paths and the implied residuals."""

    sigma_path: np.ndarray
    mu_path: np.ndarray
    residuals: np.ndarray


@dataclass
class FitResult:
    """QML estimate with diagnostics and test-ready residuals."""

    params: object  # GarchParams | AparchXParams | ArmaGarchParams
    model: str
    loglik: float
    converged: bool
    iterations: int
    y: np.ndarray
    sigma_path: np.ndarray
    mu_path: np.ndarray
    residuals: np.ndarray  # signed, full length
    residuals_after_burnin: ResidualSample
    burn_in: int
    objective_value: float
    delta: float = None

    def signed_residuals_after_burnin(self) -> np.ndarray:
        return self.residuals[self.burn_in :]


# ---------------------------------------------------------------------------
# recursions (numba kernels; the pure-Python equivalents in the test suite
# must match these bitwise, so no fastmath / reordering)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _garch11_rec(y, omega, alpha, beta, s2_init, y2_init):
    n = y.shape[0]
    s2 = np.empty(n)
    prev_s2 = s2_init
    prev_y2 = y2_init
    for t in range(n):
        s2[t] = omega + alpha * prev_y2 + beta * prev_s2
        prev_s2 = s2[t]
        prev_y2 = y[t] * y[t]
    return s2


@njit(cache=True)
def _aparch11_rec(y, omega, a_plus, a_minus, beta, delta, h_init, up_init, dn_init):
    n = y.shape[0]
    h = np.empty(n)
    prev_h = h_init
    prev_up = up_init
    prev_dn = dn_init
    for t in range(n):
        h[t] = omega + a_plus * prev_up + a_minus * prev_dn + beta * prev_h
        prev_h = h[t]
        if y[t] > 0.0:
            prev_up = y[t] ** delta
            prev_dn = 0.0
        else:
            prev_up = 0.0
            prev_dn = (-y[t]) ** delta
    return h


@njit(cache=True)
def _arma_resid_rec(y, phi, theta):
    n = y.shape[0]
    pbar = phi.shape[0]
    qbar = theta.shape[0]
    x = np.empty(n)
    for t in range(n):
        acc = y[t]
        for j in range(pbar):
            if t - 1 - j >= 0:
                acc -= phi[j] * y[t - 1 - j]
        for j in range(qbar):
            if t - 1 - j >= 0:
                acc += theta[j] * x[t - 1 - j]
        x[t] = acc
    return x


@njit(cache=True)
def _garch_rec_general(x, omega, alphas, betas, s2_init, x2_init):
    n = x.shape[0]
    p = alphas.shape[0]
    q = betas.shape[0]
    s2 = np.empty(n)
    for t in range(n):
        acc = omega
        for j in range(p):
            if t - 1 - j >= 0:
                xx = x[t - 1 - j] * x[t - 1 - j]
                acc += alphas[j] * xx
            else:
                acc += alphas[j] * x2_init
        for j in range(q):
            if t - 1 - j >= 0:
                acc += betas[j] * s2[t - 1 - j]
            else:
                acc += betas[j] * s2_init
        s2[t] = acc
    return s2


# ---------------------------------------------------------------------------
# filters (zero initial values, as used for the reported residuals)
# ---------------------------------------------------------------------------


def _validate_series(y) -> np.ndarray:
    y = np.ascontiguousarray(np.asarray(y, dtype=float))
    if y.ndim != 1 or y.size < 2:
        raise DataError("series must be one-dimensional with at least 2 observations")
    if not np.all(np.isfinite(y)):
        raise DataError("series contains NaN or infinite values")
    return y


def garch_filter(y, params: GarchParams) -> FilterOutput:
    """GARCH(1,1) variance recursion with zero initial values."""
    y = _validate_series(y)
    s2 = _garch11_rec(y, params.omega, params.alpha, params.beta, 0.0, 0.0)
    sigma = np.sqrt(s2)
    return FilterOutput(sigma_path=sigma, mu_path=np.zeros_like(y), residuals=y / sigma)


def aparch_filter(y, params: AparchXParams, delta: float = None) -> FilterOutput:
    """Asymmetric power-ARCH(1,1) recursion with zero initial values.

    With delta = 2 and equal asymmetry coefficients this coincides with
    the GARCH filter.  The filter carries no covariate term.
    """
    y = _validate_series(y)
    if params.pi != 0.0:
        raise DomainError("the fitted filter has no covariate; build params with pi=0")
    d = params.delta if delta is None else delta
    if d <= 0:
        raise DomainError("delta must be positive")
    h = _aparch11_rec(
        y, params.omega, params.alpha_plus, params.alpha_minus, params.beta, d, 0.0, 0.0, 0.0
    )
    sigma = h ** (1.0 / d)
    return FilterOutput(sigma_path=sigma, mu_path=np.zeros_like(y), residuals=y / sigma)


def arma_garch_filter(y, params: ArmaGarchParams) -> FilterOutput:
    """ARMA residual recursion plus GARCH variance recursion, zero-initialized."""
    y = _validate_series(y)
    phi = np.asarray(params.phi, dtype=float)
    theta = np.asarray(params.theta_ma, dtype=float)
    x = _arma_resid_rec(y, phi, theta)
    g = params.garch
    s2 = _garch_rec_general(x, g.omega, np.array([g.alpha]), np.array([g.beta]), 0.0, 0.0)
    sigma = np.sqrt(s2)
    return FilterOutput(sigma_path=sigma, mu_path=y - x, residuals=x / sigma)


# ---------------------------------------------------------------------------
# QML fitting
# ---------------------------------------------------------------------------


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _gaussian_plus_power_moment(delta: float) -> float:
    # E[max(Z, 0)^delta] for standard normal Z
    return 2.0 ** (delta / 2.0 - 1.0) * math.gamma((delta + 1.0) / 2.0) / math.sqrt(math.pi)


class _Garch11Model:
    """Transformed parameterization: omega > 0, alpha + beta <= MAX_PERSISTENCE."""

    n_params = 3

    def __init__(self, y):
        self.y = y
        self.backcast = float(np.mean(y * y))

    def to_params(self, u):
        omega = math.exp(u[0])
        s = MAX_PERSISTENCE * _sigmoid(u[1])
        w = _sigmoid(u[2])
        return np.array([omega, s * w, s * (1.0 - w)])

    def start(self):
        variance = float(np.var(self.y))
        omega0 = max((1.0 - 0.1 - 0.8) * variance, 1e-10)
        s = 0.9
        return np.array([math.log(omega0), _logit(s / MAX_PERSISTENCE), _logit(0.1 / s)])

    def objective(self, u):
        omega, alpha, beta = self.to_params(u)
        s2 = _garch11_rec(self.y, omega, alpha, beta, self.backcast, self.backcast)
        return float(np.mean(self.y * self.y / s2 + np.log(s2)))

    def build(self, u):
        omega, alpha, beta = self.to_params(u)
        params = GarchParams(omega, alpha, beta)
        return params, garch_filter(self.y, params)


class _Aparch11Model:
    """Transformed parameterization with a Gaussian-reference persistence cap.

    The stationarity region is enforced as
    ``beta + kappa * (alpha_plus + alpha_minus) <= MAX_PERSISTENCE`` with
    ``kappa = E[max(Z,0)^delta]`` for standard normal Z, matching how
    production volatility packages constrain the asymmetric model.
    """

    n_params = 4

    def __init__(self, y, delta):
        self.y = y
        self.delta = float(delta)
        self.kappa = _gaussian_plus_power_moment(self.delta)
        self.backcast = float(np.mean(np.abs(y) ** self.delta))

    def to_params(self, u):
        omega = math.exp(u[0])
        s = MAX_PERSISTENCE * _sigmoid(u[1])
        ev = np.exp(np.array([u[2], u[3], 0.0]) - max(u[2], u[3], 0.0))
        w = ev / ev.sum()
        beta = s * w[0]
        a_plus = s * w[1] / self.kappa
        a_minus = s * w[2] / self.kappa
        return np.array([omega, a_plus, a_minus, beta])

    def start(self):
        scale = float(np.mean(np.abs(self.y)))
        omega0 = max(0.1 * scale, 1e-10)
        beta0, ap0, am0 = 0.8, 0.075, 0.075
        s = beta0 + self.kappa * (ap0 + am0)
        w = np.array([beta0 / s, self.kappa * ap0 / s, self.kappa * am0 / s])
        return np.array(
            [math.log(omega0), _logit(s / MAX_PERSISTENCE), math.log(w[0] / w[2]), math.log(w[1] / w[2])]
        )

    def objective(self, u):
        omega, a_plus, a_minus, beta = self.to_params(u)
        h = _aparch11_rec(
            self.y, omega, a_plus, a_minus, beta, self.delta,
            self.backcast, self.backcast / 2.0, self.backcast / 2.0,
        )
        s2 = h ** (2.0 / self.delta)
        return float(np.mean(self.y * self.y / s2 + np.log(s2)))

    def build(self, u):
        omega, a_plus, a_minus, beta = self.to_params(u)
        params = AparchXParams(omega, a_plus, a_minus, beta, pi=0.0, delta=self.delta)
        return params, aparch_filter(self.y, params)


class _ArmaGarchModel:
    """ARMA coefficients unconstrained; GARCH part capped as in _Garch11Model."""

    def __init__(self, y, orders):
        self.y = y
        self.pbar, self.qbar = int(orders[0]), int(orders[1])
        self.n_params = self.pbar + self.qbar + 3
        self.backcast = float(np.mean(y * y))

    def to_params(self, u):
        arma = np.asarray(u[: self.pbar + self.qbar], dtype=float)
        omega = math.exp(u[-3])
        s = MAX_PERSISTENCE * _sigmoid(u[-2])
        w = _sigmoid(u[-1])
        return arma, np.array([omega, s * w, s * (1.0 - w)])

    def start(self):
        variance = float(np.var(self.y))
        omega0 = max(0.1 * variance, 1e-10)
        s = 0.9
        return np.r_[
            np.zeros(self.pbar + self.qbar),
            [math.log(omega0), _logit(s / MAX_PERSISTENCE), _logit(0.1 / s)],
        ]

    def _paths(self, u):
        arma, (omega, alpha, beta) = self.to_params(u)
        phi = arma[: self.pbar]
        theta = arma[self.pbar :]
        x = _arma_resid_rec(self.y, phi, theta)
        bc = float(np.mean(x * x))
        s2 = _garch_rec_general(x, omega, np.array([alpha]), np.array([beta]), bc, bc)
        return x, s2

    def objective(self, u):
        x, s2 = self._paths(u)
        return float(np.mean(x * x / s2 + np.log(s2)))

    def build(self, u):
        arma, (omega, alpha, beta) = self.to_params(u)
        params = ArmaGarchParams(
            phi=tuple(arma[: self.pbar]),
            theta_ma=tuple(arma[self.pbar :]),
            garch=GarchParams(omega, alpha, beta),
        )
        return params, arma_garch_filter(self.y, params)


def _fd_gradient(fn, u, h=1e-6):
    g = np.empty(u.size)
    for i in range(u.size):
        up = u.copy()
        dn = u.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (fn(up) - fn(dn)) / (2.0 * h)
    return g


def qml_fit(
    y,
    model: str = "garch11",
    *,
    delta: float = 1.0,
    arma_orders=(1, 1),
    burn_in: int = DEFAULT_BURN_IN,
    restarts: int = 3,
    seed: int = 0,
) -> FitResult:
    """Fit a volatility model by Gaussian QML and return test-ready residuals.

    The criterion ``mean(Y_t^2 / sigma_t^2 + log sigma_t^2)`` (with the
    ARMA-filtered errors in place of Y for the ARMA-GARCH model) is
    minimized by Nelder-Mead simplex search over transformed parameters
    that keep every iterate inside the feasible region, restarted from
    perturbed variance-targeting initials and polished from the best
    point.  The criterion's recursion starts from the sample backcast so
    the first observations do not dominate; the residuals reported for
    testing come from the zero-initialized filter, with the first
    ``burn_in`` values dropped.

    ``converged`` is True only when the central finite-difference gradient
    of the criterion (in the transformed coordinates) is below tolerance,
    i.e. the returned point is first-order stationary.
    """
    y = _validate_series(y)
    if y.size < 50:
        raise DataError("QML fitting needs at least 50 observations")
    if model == "garch11":
        spec = _Garch11Model(y)
    elif model == "aparch11":
        spec = _Aparch11Model(y, delta)
    elif model == "arma_garch":
        spec = _ArmaGarchModel(y, arma_orders)
    else:
        raise DomainError(f"unknown model '{model}'")

    u0 = spec.start()
    best = None
    iterations = 0
    for attempt in range(restarts + 1):
        if attempt == 0:
            u_init = u0
        else:
            u_init = u0 + rng_stream(seed, attempt).normal(0.0, 0.3, size=u0.size)
        try:
            res = minimize(spec.objective, u_init, method="Nelder-Mead", options=_NM_OPTIONS)
        except (FloatingPointError, OverflowError):
            continue
        iterations += res.nit
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError("all optimizer starts failed to produce a finite criterion")
    polish = minimize(spec.objective, best.x, method="Nelder-Mead", options=_NM_OPTIONS)
    iterations += polish.nit
    if np.isfinite(polish.fun) and polish.fun <= best.fun:
        best = polish

    gradient = _fd_gradient(spec.objective, np.asarray(best.x, dtype=float))
    converged = bool(np.max(np.abs(gradient)) < _GRAD_TOL)
    params, filt = spec.build(best.x)
    n = y.size
    loglik = -0.5 * n * (math.log(2.0 * math.pi) + best.fun)
    if burn_in >= n:
        raise DataError("burn-in consumes the whole sample")
    return FitResult(
        params=params,
        model=model,
        loglik=loglik,
        converged=converged,
        iterations=int(iterations),
        y=y,
        sigma_path=filt.sigma_path,
        mu_path=filt.mu_path,
        residuals=filt.residuals,
        residuals_after_burnin=ResidualSample.from_residuals(filt.residuals[burn_in:]),
        burn_in=burn_in,
        objective_value=float(best.fun),
        delta=delta if model == "aparch11" else None,
    )


def standardized_residuals(fit: FitResult) -> ResidualSample:
    """Absolute standardized residuals with the burn-in prefix removed."""
    return fit.residuals_after_burnin
