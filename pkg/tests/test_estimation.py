import numpy as np
import pytest

import tailspec as ts
from tailspec import estimation as est


def _sim_garch(seed, params, n):
    tv_null = ts.TvSkewTParams(-3.0, 0.0, 0.0, -1.0, 0.0, 0.0)
    return ts.simulate_garch_tvskewt(ts.rng_stream(seed, 0), params, tv_null, n)[0]


def _sim_garch_normal(seed, omega, alpha, beta, n, warm=1000):
    rng = ts.rng_stream(seed, 1)
    eps = rng.standard_normal(n + warm)
    s2 = omega / (1 - alpha - beta)
    y = np.empty(n + warm)
    for t in range(n + warm):
        if t > 0:
            s2 = omega + alpha * y[t - 1] ** 2 + beta * s2
        y[t] = np.sqrt(s2) * eps[t]
    return y[warm:]


# ---------------------------------------------------------------------------
# filters
# ---------------------------------------------------------------------------


def test_aparch_filter_zero_initialization():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(50)
    p = ts.AparchXParams(0.3, 0.1, 0.2, 0.5, delta=1.0)
    out = ts.aparch_filter(y, p)
    assert out.sigma_path[0] == 0.3  # sigma_1^delta = omega exactly
    assert np.all(out.mu_path == 0.0)
    assert np.all(out.sigma_path >= 0.3)


def test_aparch_filter_hand_step():
    # omega=0.1, alpha=0.2 both sides, beta=0.7, delta=2, Y_1=1:
    # sigma_2^2 = 0.1 + 0.2 + 0.07 = 0.37
    y = np.array([1.0, 0.0, 0.0])
    p = ts.AparchXParams(0.1, 0.2, 0.2, 0.7, delta=2.0)
    out = ts.aparch_filter(y, p)
    assert out.sigma_path[1] ** 2 == pytest.approx(0.37, rel=1e-14)


def test_aparch_delta2_equals_garch_nesting():
    rng = np.random.default_rng(1)
    y = rng.standard_normal(400)
    ap = ts.aparch_filter(y, ts.AparchXParams(0.05, 0.1, 0.1, 0.8, delta=2.0))
    ga = ts.garch_filter(y, ts.GarchParams(0.05, 0.1, 0.8))
    assert ap.sigma_path == pytest.approx(ga.sigma_path, rel=1e-12)


def _python_garch11(y, omega, alpha, beta, s2_init, y2_init):
    # direct-loop re-implementation mirroring the kernel expression order
    s2 = np.empty(y.size)
    prev_s2, prev_y2 = s2_init, y2_init
    for t in range(y.size):
        s2[t] = omega + alpha * prev_y2 + beta * prev_s2
        prev_s2 = s2[t]
        prev_y2 = y[t] * y[t]
    return s2


def _python_aparch11(y, omega, ap, am, beta, delta, h_init, up_init, dn_init):
    h = np.empty(y.size)
    prev_h, prev_up, prev_dn = h_init, up_init, dn_init
    for t in range(y.size):
        h[t] = omega + ap * prev_up + am * prev_dn + beta * prev_h
        prev_h = h[t]
        if y[t] > 0.0:
            prev_up = y[t] ** delta
            prev_dn = 0.0
        else:
            prev_up = 0.0
            prev_dn = (-y[t]) ** delta
    return h


def test_filters_bitwise_against_direct_loops():
    rng = np.random.default_rng(2)
    y = rng.standard_normal(300)
    got = est._garch11_rec(y, 0.05, 0.1, 0.85, 0.0, 0.0)
    want = _python_garch11(y, 0.05, 0.1, 0.85, 0.0, 0.0)
    assert np.array_equal(got, want)
    for delta in (1.0, 2.0, 1.5):
        got = est._aparch11_rec(y, 0.05, 0.03, 0.09, 0.84, delta, 0.0, 0.0, 0.0)
        want = _python_aparch11(y, 0.05, 0.03, 0.09, 0.84, delta, 0.0, 0.0, 0.0)
        assert np.array_equal(got, want)


def test_arma_garch_filter_hand_values():
    p = ts.ArmaGarchParams(phi=(0.5,), theta_ma=(), garch=ts.GarchParams(1.0, 0.0, 0.0))
    out = ts.arma_garch_filter(np.array([2.0, 3.0]), p)
    assert out.residuals.tolist() == [2.0, 2.0]  # X_1 = 2, X_2 = 3 - 0.5*2 = 2
    p_ma = ts.ArmaGarchParams(phi=(), theta_ma=(0.5,), garch=ts.GarchParams(1.0, 0.0, 0.0))
    out_ma = ts.arma_garch_filter(np.array([1.0, 0.0, 0.0]), p_ma)
    assert out_ma.residuals.tolist() == [1.0, 0.5, 0.25]


def test_arma_garch_filter_reduces_to_garch():
    rng = np.random.default_rng(3)
    y = rng.standard_normal(200)
    p = ts.ArmaGarchParams(phi=(), theta_ma=(), garch=ts.GarchParams(0.05, 0.1, 0.8))
    a = ts.arma_garch_filter(y, p)
    g = ts.garch_filter(y, ts.GarchParams(0.05, 0.1, 0.8))
    assert np.array_equal(a.sigma_path, g.sigma_path)
    assert np.array_equal(a.residuals, g.residuals)


def test_filter_covariate_rejected():
    with pytest.raises(ts.DomainError):
        ts.aparch_filter(np.ones(10), ts.AparchXParams(0.1, 0.1, 0.1, 0.5, pi=0.1))


# ---------------------------------------------------------------------------
# QML fitting
# ---------------------------------------------------------------------------


def test_qml_fit_recovers_garch_parameters():
    errs = []
    for seed in range(8):
        y = _sim_garch_normal(seed, 0.05, 0.10, 0.85, 4000)
        fit = ts.qml_fit(y, "garch11")
        assert fit.converged
        p = fit.params
        errs.append([abs(p.omega - 0.05), abs(p.alpha - 0.10), abs(p.beta - 0.85)])
    assert np.mean(errs, axis=0) == pytest.approx([0, 0, 0], abs=0.03)


def test_qml_objective_dominates_truth():
    from tailspec.estimation import _Garch11Model

    for seed in range(4):
        y = _sim_garch_normal(100 + seed, 0.05, 0.10, 0.85, 2500)
        fit = ts.qml_fit(y, "garch11")
        model = _Garch11Model(y)
        s2 = est._garch11_rec(y, 0.05, 0.10, 0.85, model.backcast, model.backcast)
        truth_obj = float(np.mean(y * y / s2 + np.log(s2)))
        assert fit.objective_value <= truth_obj + 1e-12


def test_qml_gradient_small_when_converged():
    y = _sim_garch_normal(55, 0.05, 0.10, 0.85, 3000)
    fit = ts.qml_fit(y, "garch11")
    assert fit.converged

    def objective(theta):
        s2 = est._garch11_rec(y, theta[0], theta[1], theta[2], float(np.mean(y * y)),
                              float(np.mean(y * y)))
        return float(np.mean(y * y / s2 + np.log(s2)))

    theta = np.array([fit.params.omega, fit.params.alpha, fit.params.beta])
    grad = []
    for i in range(3):
        h = 1e-6 * max(abs(theta[i]), 1e-2)
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        grad.append((objective(up) - objective(dn)) / (2 * h))
    assert np.max(np.abs(grad)) < 1e-4


def test_qml_fit_aparch_and_arma_garch_run():
    y_ap = ts.simulate_aparch_x(
        ts.rng_stream(200, 0), ts.AparchXParams(0.046, 0.027, 0.092, 0.843), 800, v=0
    )[0]
    fit_ap = ts.qml_fit(y_ap, "aparch11", delta=1.0)
    assert fit_ap.converged
    assert fit_ap.params.beta < 1.0
    p = ts.ArmaGarchParams(phi=(0.5,), theta_ma=(0.2,), garch=ts.GarchParams(0.1, 0.1, 0.8))
    y_ag, _, _ = ts.simulate_arma_garch(ts.rng_stream(201, 0), p, 1500)
    fit_ag = ts.qml_fit(y_ag, "arma_garch", arma_orders=(1, 1))
    assert fit_ag.converged
    assert abs(fit_ag.params.phi[0] - 0.5) < 0.25


def test_transformed_search_always_feasible():
    from tailspec.estimation import _Aparch11Model, _Garch11Model

    y = np.random.default_rng(5).standard_normal(200)
    g = _Garch11Model(y)
    a = _Aparch11Model(y, 1.0)
    rng = np.random.default_rng(6)
    for _ in range(200):
        u = rng.normal(0, 5, size=3)
        omega, alpha, beta = g.to_params(u)
        assert omega > 0 and alpha >= 0 and beta >= 0
        assert alpha + beta <= est.MAX_PERSISTENCE + 1e-12
        u4 = rng.normal(0, 5, size=4)
        om, ap, am, be = a.to_params(u4)
        assert om > 0 and min(ap, am, be) >= 0
        assert be + a.kappa * (ap + am) <= est.MAX_PERSISTENCE + 1e-12


def test_residuals_and_burn_in():
    y = _sim_garch(300, ts.GarchParams(0.046, 0.127, 0.843), 600)
    fit = ts.qml_fit(y, "garch11", burn_in=10)
    sample = ts.standardized_residuals(fit)
    assert sample.n == 600 - 10
    assert np.array_equal(sample.values, np.abs(fit.residuals[10:]))


def test_constant_volatility_identity_filter():
    # alpha = beta = 0 makes the fitted scale flat at sqrt(omega)
    rng = np.random.default_rng(7)
    y = 2.0 * rng.standard_normal(300)
    out = ts.garch_filter(y, ts.GarchParams(4.0, 0.0, 0.0))
    assert out.residuals == pytest.approx(y / 2.0, rel=1e-14)


def test_residual_variance_near_one_on_long_garch():
    y = _sim_garch_normal(77, 0.05, 0.10, 0.85, 20_000)
    fit = ts.qml_fit(y, "garch11")
    resid = fit.residuals[fit.burn_in :]
    assert resid.var() == pytest.approx(1.0, abs=0.05)


def test_data_validation():
    with pytest.raises(ts.DataError):
        ts.qml_fit(np.array([1.0, np.nan] * 100), "garch11")
    with pytest.raises(ts.DataError):
        ts.qml_fit(np.ones(20), "garch11")
    with pytest.raises(ts.DomainError):
        ts.qml_fit(np.random.default_rng(0).standard_normal(100), "widget")
