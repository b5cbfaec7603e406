"""Data-generating processes for the simulation studies.

Covers an asymmetric power-ARCH model with an exogenous volatility
covariate, a GARCH(1,1) driven by (possibly time-varying) skewed-t
innovations, and an ARMA-GARCH model, plus exact samplers for the
innovation laws.  All simulators discard 1000 pre-sample steps so the
emitted window starts near the stationary regime, and are bitwise
reproducible from the generator handed in.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import stdtr, stdtrit

from .errors import DomainError
from .rng import rng_stream  # noqa: F401  (re-exported for simulation scripts)

__all__ = [
    "AparchXParams",
    "GarchParams",
    "ArmaGarchParams",
    "SkewedTParams",
    "TvSkewTParams",
    "logistic_map",
    "skewed_t_density",
    "skewed_t_cdf",
    "skewed_t_ppf",
    "draw_skewed_t",
    "draw_std_student_t",
    "simulate_covariate",
    "simulate_aparch_x",
    "simulate_garch_tvskewt",
    "simulate_arma_garch",
]

WARMUP_STEPS = 1000
COVARIATE_AR = 0.9
_SIGMOID_EPS = 1e-12


@dataclass(frozen=True)
class AparchXParams:
    """Asymmetric power-ARCH(1,1) with an optional exogenous covariate."""

    omega: float
    alpha_plus: float
    alpha_minus: float
    beta: float
    pi: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if self.omega <= 0:
            raise DomainError("omega must be positive")
        if min(self.alpha_plus, self.alpha_minus, self.beta, self.pi) < 0:
            raise DomainError("alpha_plus, alpha_minus, beta and pi must be nonnegative")
        if self.beta >= 1:
            raise DomainError("beta must be < 1")
        if self.delta <= 0:
            raise DomainError("delta must be positive")


@dataclass(frozen=True)
class GarchParams:
    omega: float
    alpha: float
    beta: float

    def __post_init__(self):
        if self.omega <= 0:
            raise DomainError("omega must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise DomainError("alpha and beta must be nonnegative")
        if self.alpha + self.beta >= 1:
            raise DomainError("alpha + beta must be < 1 for stationarity")


@dataclass(frozen=True)
class ArmaGarchParams:
    """ARMA coefficients plus a GARCH law for the errors."""

    phi: tuple = ()
    theta_ma: tuple = ()
    garch: GarchParams = field(default_factory=lambda: GarchParams(1.0, 0.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(float(c) for c in self.phi))
        object.__setattr__(self, "theta_ma", tuple(float(c) for c in self.theta_ma))
        for name, coeffs in (("AR", self.phi), ("MA", self.theta_ma)):
            if coeffs and _has_unit_root(coeffs):
                raise DomainError(f"{name} polynomial has a root on the unit circle")


def _has_unit_root(coeffs, tol=1e-6) -> bool:
    # polynomial 1 - c_1 z - ... - c_p z^p
    poly = np.r_[[-c for c in coeffs[::-1]], 1.0]
    roots = np.roots(poly)
    return bool(np.any(np.abs(np.abs(roots) - 1.0) < tol))


def logistic_map(x: float, L: float, U: float) -> float:
    """Logistic rescaling of the real line into (L, U).

    Evaluated in a numerically stable form; for very large |x| the result
    saturates to the interval endpoint in floating point.
    """
    if L >= U:
        raise DomainError("need L < U")
    if x >= 0:
        s = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        s = e / (1.0 + e)
    return L + (U - L) * s


def _bounded_logistic(x: float, L: float, U: float) -> float:
    # keeps the output strictly inside (L, U) even when the sigmoid saturates
    if x >= 0:
        s = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        s = e / (1.0 + e)
    s = min(max(s, _SIGMOID_EPS), 1.0 - _SIGMOID_EPS)
    return L + (U - L) * s


@dataclass(frozen=True)
class SkewedTParams:
    """Skewed Student-t standardized to zero mean and unit variance."""

    lam: float
    eta: float
    a: float = field(init=False)
    b: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        if not -1.0 < self.lam < 1.0:
            raise DomainError("lam must lie in (-1, 1)")
        if self.eta <= 2.0:
            raise DomainError("eta must exceed 2")
        c = math.gamma((self.eta + 1.0) / 2.0) / (
            math.sqrt(math.pi * (self.eta - 2.0)) * math.gamma(self.eta / 2.0)
        )
        a = 4.0 * self.lam * c * (self.eta - 2.0) / (self.eta - 1.0)
        b_sq = 1.0 + 3.0 * self.lam**2 - a**2
        if b_sq <= 0:
            raise DomainError("invalid skewed-t parameters: b^2 <= 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", math.sqrt(b_sq))
        object.__setattr__(self, "c", c)


def skewed_t_density(x, p: SkewedTParams):
    """Density of the standardized skewed-t law."""
    x = np.asarray(x, dtype=float)
    sign = np.where(x + p.a / p.b >= 0, 1.0, -1.0)
    core = (p.b * x + p.a) / (1.0 + sign * p.lam)
    out = p.b * p.c * (1.0 + core**2 / (p.eta - 2.0)) ** (-(p.eta + 1.0) / 2.0)
    return out if out.ndim else float(out)


def skewed_t_cdf(x, p: SkewedTParams):
    """CDF of the standardized skewed-t law.

    On each side of the mode ``-a/b`` the law is an affine transform of a
    Student-t, so the CDF is a rescaled Student-t CDF.
    """
    x = np.asarray(x, dtype=float)
    stretch = math.sqrt(p.eta / (p.eta - 2.0))
    left = (1.0 - p.lam) * stdtr(p.eta, stretch * (p.b * x + p.a) / (1.0 - p.lam))
    right = (1.0 - p.lam) / 2.0 + (1.0 + p.lam) * (
        stdtr(p.eta, stretch * (p.b * x + p.a) / (1.0 + p.lam)) - 0.5
    )
    out = np.where(x + p.a / p.b < 0, left, right)
    return out if out.ndim else float(out)


def skewed_t_ppf(u, p: SkewedTParams):
    """Exact quantile function, inverting the appropriate CDF piece."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise DomainError("probabilities must lie strictly inside (0, 1)")
    thr = (1.0 - p.lam) / 2.0
    shrink = math.sqrt((p.eta - 2.0) / p.eta)
    left_q = stdtrit(p.eta, np.clip(u / (1.0 - p.lam), 1e-300, 1.0 - 1e-16))
    right_q = stdtrit(p.eta, np.clip(0.5 + (u - thr) / (1.0 + p.lam), 1e-300, 1.0 - 1e-16))
    left = ((1.0 - p.lam) * shrink * left_q - p.a) / p.b
    right = ((1.0 + p.lam) * shrink * right_q - p.a) / p.b
    out = np.where(u < thr, left, right)
    return out if out.ndim else float(out)


def draw_skewed_t(rng: np.random.Generator, p: SkewedTParams, size=None):
    """Exact draws via inversion of uniform variates."""
    return skewed_t_ppf(rng.uniform(size=size if size is not None else ()), p)


def draw_std_student_t(rng: np.random.Generator, nu: float, size=None):
    """Student-t draws rescaled to unit variance."""
    if nu <= 2:
        raise DomainError("nu must exceed 2 for a finite variance")
    return rng.standard_t(nu, size=size) * math.sqrt((nu - 2.0) / nu)


@dataclass(frozen=True)
class TvSkewTParams:
    """Latent AR recursions driving time-varying skewed-t shape parameters.

    Each recursion feeds the previous return through
    ``latent_t = a + b * Y_{t-1} + c * latent_{t-1}`` and maps the latent
    state into the admissible range with the logistic transform.
    """

    a1: float
    b1: float
    c1: float
    a2: float
    b2: float
    c2: float
    eta_bounds: tuple = (2.0, 30.0)
    lambda_bounds: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if abs(self.c1) >= 1 or abs(self.c2) >= 1:
            raise DomainError("latent recursions need |c| < 1")

    def eta_of(self, latent: float) -> float:
        return _bounded_logistic(latent, *self.eta_bounds)

    def lambda_of(self, latent: float) -> float:
        return _bounded_logistic(latent, *self.lambda_bounds)

    @property
    def constant(self) -> bool:
        return self.b1 == self.b2 == self.c1 == self.c2 == 0.0


def simulate_covariate(rng: np.random.Generator, n_total: int) -> np.ndarray:
    """Stationary positive covariate: the exponential of a Gaussian AR(1).

    The latent state starts from its exact stationary normal law and runs
    through the standard warm-up before the emitted window.
    """
    if n_total < 1:
        raise DomainError("n_total must be >= 1")
    sd_z = math.sqrt(1.0 / (1.0 - COVARIATE_AR**2))
    z = rng.normal(0.0, sd_z)
    shocks = rng.standard_normal(WARMUP_STEPS + n_total)
    out = np.empty(n_total)
    for t in range(WARMUP_STEPS + n_total):
        z = COVARIATE_AR * z + shocks[t]
        if t >= WARMUP_STEPS:
            out[t - WARMUP_STEPS] = math.exp(z)
    return out


def aparch_x_recursion(innovations, covariate, p: AparchXParams, h0: float = None):
    """Run the volatility recursion for given innovations and covariate.

    Returns (y, sigma).  The covariate enters the sigma^delta equation
    with coefficient pi; pass a zero covariate to drop it.
    """
    innovations = np.asarray(innovations, dtype=float)
    covariate = np.asarray(covariate, dtype=float)
    n = innovations.size
    if covariate.size != n:
        raise DomainError("innovations and covariate must have equal length")
    delta = p.delta
    h = h0 if h0 is not None else p.omega / (1.0 - p.beta)
    y = np.empty(n)
    sigma = np.empty(n)
    y_prev = 0.0
    for t in range(n):
        if t > 0:
            up = y_prev if y_prev > 0 else 0.0
            dn = -y_prev if y_prev < 0 else 0.0
            h = (
                p.omega
                + p.alpha_plus * up**delta
                + p.alpha_minus * dn**delta
                + p.beta * h
                + p.pi * covariate[t - 1]
            )
        sigma[t] = h ** (1.0 / delta)
        y[t] = sigma[t] * innovations[t]
        y_prev = y[t]
    return y, sigma


def simulate_aparch_x(rng: np.random.Generator, p: AparchXParams, n: int, v: int = 10, nu: float = 4.1):
    """Simulate n + v observations of the covariate-augmented model.

    Returns ``(y, sigma, x)`` where the first v entries are the extra
    pre-observations whose residuals get discarded downstream.
    Innovations are unit-variance Student-t with ``nu`` degrees of freedom.
    """
    if n < 1 or v < 0:
        raise DomainError("need n >= 1 and v >= 0")
    n_total = n + v
    total = WARMUP_STEPS + n_total
    eps = draw_std_student_t(rng, nu, size=total)
    x_all = simulate_covariate(rng, total)
    delta = p.delta
    h = p.omega / (1.0 - p.beta)
    y = np.empty(n_total)
    sigma = np.empty(n_total)
    x_out = np.empty(n_total)
    y_prev = 0.0
    x_prev = x_all[0]
    for t in range(total):
        if t > 0:
            up = y_prev if y_prev > 0 else 0.0
            dn = -y_prev if y_prev < 0 else 0.0
            h = (
                p.omega
                + p.alpha_plus * up**delta
                + p.alpha_minus * dn**delta
                + p.beta * h
                + p.pi * x_prev
            )
        sig = h ** (1.0 / delta)
        val = sig * eps[t]
        if t >= WARMUP_STEPS:
            i = t - WARMUP_STEPS
            y[i] = val
            sigma[i] = sig
            x_out[i] = x_all[t]
        y_prev = val
        x_prev = x_all[t]
    return y, sigma, x_out


def simulate_garch_tvskewt(rng: np.random.Generator, g: GarchParams, tv: TvSkewTParams, n: int):
    """GARCH(1,1) returns with skewed-t innovations of time-varying shape.

    Returns ``(y, sigma, eta_path, lambda_path)``, each of length n.  With
    zero input and memory coefficients the shape parameters are constant
    and the innovations are i.i.d.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    total = WARMUP_STEPS + n
    u = rng.uniform(size=total)
    lat_eta = tv.a1 / (1.0 - tv.c1)
    lat_lam = tv.a2 / (1.0 - tv.c2)
    s2 = g.omega / (1.0 - g.alpha - g.beta)
    y_prev = 0.0
    y = np.empty(n)
    sigma = np.empty(n)
    eta_path = np.empty(n)
    lambda_path = np.empty(n)
    for t in range(total):
        if t > 0:
            lat_eta = tv.a1 + tv.b1 * y_prev + tv.c1 * lat_eta
            lat_lam = tv.a2 + tv.b2 * y_prev + tv.c2 * lat_lam
            s2 = g.omega + g.alpha * y_prev * y_prev + g.beta * s2
        eta = tv.eta_of(lat_eta)
        lam = tv.lambda_of(lat_lam)
        eps = float(skewed_t_ppf(u[t], SkewedTParams(lam, eta)))
        val = math.sqrt(s2) * eps
        if t >= WARMUP_STEPS:
            i = t - WARMUP_STEPS
            y[i] = val
            sigma[i] = math.sqrt(s2)
            eta_path[i] = eta
            lambda_path[i] = lam
        y_prev = val
    return y, sigma, eta_path, lambda_path


def simulate_arma_garch(rng: np.random.Generator, p: ArmaGarchParams, n: int, innovations=None):
    """ARMA observations driven by GARCH errors.

    Returns ``(y, x, sigma)`` with x the GARCH error series.  Standard
    normal innovations unless an array of unit-variance draws is supplied.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    total = WARMUP_STEPS + n
    eps = rng.standard_normal(total) if innovations is None else np.asarray(innovations, float)
    if eps.size != total:
        raise DomainError(f"innovations must have length WARMUP_STEPS + n = {total}")
    g = p.garch
    pbar, qbar = len(p.phi), len(p.theta_ma)
    y_hist = np.zeros(max(pbar, 1))
    x_hist = np.zeros(max(qbar, 1))
    s2 = g.omega / (1.0 - g.alpha - g.beta)
    x_prev = 0.0
    y_out = np.empty(n)
    x_out = np.empty(n)
    sig_out = np.empty(n)
    for t in range(total):
        if t > 0:
            s2 = g.omega + g.alpha * x_prev * x_prev + g.beta * s2
        x_t = math.sqrt(s2) * eps[t]
        y_t = x_t
        for j in range(pbar):
            y_t += p.phi[j] * y_hist[j]
        for j in range(qbar):
            y_t -= p.theta_ma[j] * x_hist[j]
        if t >= WARMUP_STEPS:
            i = t - WARMUP_STEPS
            y_out[i] = y_t
            x_out[i] = x_t
            sig_out[i] = math.sqrt(s2)
        if pbar:
            y_hist[1:] = y_hist[:-1]
            y_hist[0] = y_t
        if qbar:
            x_hist[1:] = x_hist[:-1]
            x_hist[0] = x_t
        x_prev = x_t
    return y_out, x_out, sig_out
