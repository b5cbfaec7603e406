import math

import numpy as np
import pytest
from scipy import integrate, stats

import tailspec as ts
from tailspec import dgp


# ---------------------------------------------------------------------------
# logistic transform
# ---------------------------------------------------------------------------


def test_logistic_midpoint():
    assert ts.logistic_map(0.0, 2.0, 30.0) == 16.0


def test_logistic_asymptotes():
    assert ts.logistic_map(40.0, -1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert ts.logistic_map(-40.0, -1.0, 1.0) == pytest.approx(-1.0, abs=1e-12)
    # extreme arguments must not overflow
    assert ts.logistic_map(-5000.0, 2.0, 30.0) == pytest.approx(2.0)
    with pytest.raises(ts.DomainError):
        ts.logistic_map(0.0, 1.0, 1.0)


def test_shape_recursion_constants():
    # the null recursions keep the latent states at a1 = -3 and a2 = -1;
    # the logistic transform as written maps them to these shape values
    tv = ts.TvSkewTParams(-3.0, 0.0, 0.0, -1.0, 0.0, 0.0)
    assert tv.eta_of(-3.0) == pytest.approx(2.0 + 28.0 / (1.0 + math.exp(3.0)), rel=1e-12)
    assert tv.eta_of(-3.0) == pytest.approx(3.3279244, abs=1e-6)
    assert tv.lambda_of(-1.0) == pytest.approx(-0.462117, abs=1e-6)
    assert tv.constant


# ---------------------------------------------------------------------------
# skewed t distribution
# ---------------------------------------------------------------------------


def _std_t_pdf(x, eta):
    s = math.sqrt(eta / (eta - 2.0))
    return stats.t.pdf(np.asarray(x) * s, eta) * s


def test_density_reduces_to_student_t_at_zero_skew():
    p = ts.SkewedTParams(0.0, 5.0)
    assert p.a == 0.0 and p.b == 1.0
    xs = np.linspace(-6, 6, 41)
    assert ts.skewed_t_density(xs, p) == pytest.approx(_std_t_pdf(xs, 5.0), rel=1e-12)
    # mode value equals the normalizing constant
    c = math.gamma(3.0) / (math.sqrt(3.0 * math.pi) * math.gamma(2.5))
    assert ts.skewed_t_density(0.0, p) == pytest.approx(c)
    assert c == pytest.approx(0.4901, abs=1e-4)


@pytest.mark.parametrize("lam,eta", [(0.45, 28.67), (-0.5, 4.0)])
def test_density_integrates_to_one(lam, eta):
    p = ts.SkewedTParams(lam, eta)
    total, err = integrate.quad(lambda x: ts.skewed_t_density(x, p), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_density_standardization_moments():
    p = ts.SkewedTParams(0.45, 8.0)
    mean, _ = integrate.quad(lambda x: x * ts.skewed_t_density(x, p), -np.inf, np.inf)
    var, _ = integrate.quad(lambda x: x * x * ts.skewed_t_density(x, p), -np.inf, np.inf)
    assert mean == pytest.approx(0.0, abs=1e-9)
    assert var == pytest.approx(1.0, abs=1e-8)


def test_cdf_ppf_round_trip():
    for lam, eta in [(0.45, 28.67), (-0.5, 4.0), (0.0, 6.0)]:
        p = ts.SkewedTParams(lam, eta)
        us = np.linspace(0.001, 0.999, 199)
        back = ts.skewed_t_cdf(ts.skewed_t_ppf(us, p), p)
        assert np.max(np.abs(back - us)) < 1e-8


def test_cdf_matches_density_quadrature():
    p = ts.SkewedTParams(-0.3, 5.0)
    for x in (-2.0, -0.5, 0.4, 1.7):
        num, _ = integrate.quad(lambda t: ts.skewed_t_density(t, p), -np.inf, x)
        assert ts.skewed_t_cdf(x, p) == pytest.approx(num, abs=1e-9)


def test_draws_standardized_and_skewed():
    p = ts.SkewedTParams(0.45, 28.67)
    draws = ts.draw_skewed_t(ts.rng_stream(100, 0), p, size=1_000_000)
    assert abs(draws.mean()) < 0.004
    assert abs(draws.var() - 1.0) < 0.01
    assert stats.skew(draws) > 0  # skewness sign follows lam
    p_neg = ts.SkewedTParams(-0.45, 28.67)
    draws_neg = ts.draw_skewed_t(ts.rng_stream(100, 1), p_neg, size=200_000)
    assert stats.skew(draws_neg) < 0


def test_zero_skew_draws_match_student_t():
    p = ts.SkewedTParams(0.0, 6.0)
    draws = ts.draw_skewed_t(ts.rng_stream(101, 0), p, size=1_000_000)
    scale = math.sqrt(6.0 / 4.0)
    ks = stats.kstest(draws * scale, stats.t(6.0).cdf).statistic
    assert ks < 0.003


def test_invalid_skewt_params():
    with pytest.raises(ts.DomainError):
        ts.SkewedTParams(1.2, 5.0)
    with pytest.raises(ts.DomainError):
        ts.SkewedTParams(0.1, 2.0)


# ---------------------------------------------------------------------------
# standardized Student t innovations
# ---------------------------------------------------------------------------


def test_std_student_t_moments():
    draws = ts.draw_std_student_t(ts.rng_stream(102, 0), 4.1, size=1_000_000)
    assert abs(draws.mean()) < 0.004
    assert abs(draws.var() - 1.0) < 0.02


def test_std_student_t_normal_limit():
    draws = ts.draw_std_student_t(ts.rng_stream(103, 0), 1e6, size=1_000_000)
    assert stats.kstest(draws, stats.norm.cdf).statistic < 0.003


def test_std_student_t_domain():
    with pytest.raises(ts.DomainError):
        ts.draw_std_student_t(ts.rng_stream(0, 0), 2.0, size=10)


# ---------------------------------------------------------------------------
# covariate process
# ---------------------------------------------------------------------------


def test_covariate_positive_and_ar_moments():
    x = ts.simulate_covariate(ts.rng_stream(104, 0), 1_000_000)
    assert np.all(x > 0)
    z = np.log(x)
    assert z.var() == pytest.approx(1.0 / (1.0 - 0.81), rel=0.03)
    zc = z - z.mean()
    acf1 = float(np.dot(zc[1:], zc[:-1]) / np.dot(zc, zc))
    assert acf1 == pytest.approx(0.9, abs=0.01)


# ---------------------------------------------------------------------------
# simulators
# ---------------------------------------------------------------------------


SIZE_PARAMS = ts.AparchXParams(0.046, 0.027, 0.092, 0.843, pi=0.0, delta=1.0)


def test_aparch_x_fixed_point_with_zero_innovations():
    # with pi = 0 and zero innovations the scale contracts to omega/(1-beta)
    eps = np.zeros(300)
    x = np.zeros(300)
    _, sigma = dgp.aparch_x_recursion(eps, x, SIZE_PARAMS, h0=1.0)
    assert sigma[-1] == pytest.approx(0.046 / (1.0 - 0.843), rel=1e-10)
    assert sigma[-1] == pytest.approx(0.2930, abs=1e-4)


def test_aparch_x_hand_step():
    # sigma_1 = 0.3 and Y_1 = -0.5 give sigma_2 = 0.046 + 0.092*0.5 + 0.843*0.3
    eps = np.array([-0.5 / 0.3, 0.0])
    x = np.zeros(2)
    y, sigma = dgp.aparch_x_recursion(eps, x, SIZE_PARAMS, h0=0.3)
    assert y[0] == pytest.approx(-0.5)
    assert sigma[1] == pytest.approx(0.046 + 0.092 * 0.5 + 0.843 * 0.3, rel=1e-12)
    assert sigma[1] == pytest.approx(0.3449)


def test_aparch_x_simulation_shapes_and_bounds():
    y, sigma, x = ts.simulate_aparch_x(ts.rng_stream(105, 0), SIZE_PARAMS, 500, v=10)
    assert y.shape == sigma.shape == x.shape == (510,)
    assert np.all(sigma >= SIZE_PARAMS.omega)  # delta = 1 scale floor
    assert np.all(x > 0)


def test_simulators_deterministic():
    a = ts.simulate_aparch_x(ts.rng_stream(7, 3), SIZE_PARAMS, 200, v=10)[0]
    b = ts.simulate_aparch_x(ts.rng_stream(7, 3), SIZE_PARAMS, 200, v=10)[0]
    assert np.array_equal(a, b)
    g = ts.GarchParams(0.046, 0.127, 0.843)
    tv = ts.TvSkewTParams(-3.0, -6.0, 0.6, -1.0, -2.0, 0.6)
    c = ts.simulate_garch_tvskewt(ts.rng_stream(8, 4), g, tv, 150)[0]
    d = ts.simulate_garch_tvskewt(ts.rng_stream(8, 4), g, tv, 150)[0]
    assert np.array_equal(c, d)


def test_garch_tvskewt_null_constant_shape_params():
    g = ts.GarchParams(0.046, 0.127, 0.843)
    tv = ts.TvSkewTParams(-3.0, 0.0, 0.0, -1.0, 0.0, 0.0)
    y, sigma, eta_path, lambda_path = ts.simulate_garch_tvskewt(ts.rng_stream(9, 0), g, tv, 400)
    assert np.all(eta_path == eta_path[0])
    assert np.all(lambda_path == lambda_path[0])
    assert eta_path[0] == pytest.approx(3.3279244, abs=1e-6)
    assert lambda_path[0] == pytest.approx(-0.462117, abs=1e-6)
    assert np.all(sigma**2 >= g.omega)


def test_garch_tvskewt_alternative_time_varying():
    g = ts.GarchParams(0.046, 0.127, 0.843)
    tv = ts.TvSkewTParams(-3.0, -6.0, 0.6, -1.0, -2.0, 0.6)
    _, _, eta_path, lambda_path = ts.simulate_garch_tvskewt(ts.rng_stream(10, 0), g, tv, 400)
    assert eta_path.var() > 0
    assert lambda_path.var() > 0
    assert np.all((eta_path > 2.0) & (eta_path < 30.0))
    assert np.all((lambda_path > -1.0) & (lambda_path < 1.0))


def test_arma_garch_reduces_to_garch():
    p_trivial = ts.ArmaGarchParams(phi=(), theta_ma=(), garch=ts.GarchParams(0.2, 0.1, 0.6))
    p_zero = ts.ArmaGarchParams(phi=(0.0,), theta_ma=(0.0,), garch=ts.GarchParams(0.2, 0.1, 0.6))
    y1, x1, _ = ts.simulate_arma_garch(ts.rng_stream(11, 0), p_trivial, 300)
    y2, x2, _ = ts.simulate_arma_garch(ts.rng_stream(11, 0), p_zero, 300)
    assert np.array_equal(y1, x1)  # no ARMA part: observations are the errors
    assert np.array_equal(y1, y2)


def test_arma_garch_ar1_autocorrelation():
    # trivial GARCH part makes the errors iid N(0, omega)
    p = ts.ArmaGarchParams(phi=(0.5,), theta_ma=(), garch=ts.GarchParams(1.0, 0.0, 0.0))
    y, _, _ = ts.simulate_arma_garch(ts.rng_stream(12, 0), p, 1_000_000)
    yc = y - y.mean()
    acf1 = float(np.dot(yc[1:], yc[:-1]) / np.dot(yc, yc))
    assert acf1 == pytest.approx(0.5, abs=0.02)


def test_arma_garch_unconditional_variance():
    p = ts.ArmaGarchParams(phi=(), theta_ma=(), garch=ts.GarchParams(0.046, 0.127, 0.843))
    _, x, _ = ts.simulate_arma_garch(ts.rng_stream(13, 0), p, 1_000_000)
    assert x.var() == pytest.approx(0.046 / (1.0 - 0.127 - 0.843), rel=0.03)


def test_arma_garch_unit_root_rejected():
    with pytest.raises(ts.DomainError):
        ts.ArmaGarchParams(phi=(1.0,), theta_ma=(), garch=ts.GarchParams(0.1, 0.05, 0.8))


def test_param_invariants():
    with pytest.raises(ts.DomainError):
        ts.GarchParams(0.05, 0.5, 0.55)  # nonstationary
    with pytest.raises(ts.DomainError):
        ts.GarchParams(-0.1, 0.1, 0.5)
    with pytest.raises(ts.DomainError):
        ts.AparchXParams(0.046, 0.027, 0.092, 1.01)
    with pytest.raises(ts.DomainError):
        ts.TvSkewTParams(-3.0, 0.0, 1.0, -1.0, 0.0, 0.0)
