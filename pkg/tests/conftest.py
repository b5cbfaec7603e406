"""Shared fixtures and independent reference implementations (oracles).

The oracles deliberately use different algorithms from the package code:
direct double loops for the tail counts, and exact polynomial
antiderivatives for the functional integral, so agreement is meaningful.
"""

import math

import numpy as np
import pytest

import tailspec as ts


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    # keep simulated-limit caches inside the test session, shared across tests
    cache = tmp_path_factory.getbasetemp() / "tailspec-cache"
    monkeypatch.setenv("TAILSPEC_CACHE", str(cache))


@pytest.fixture(scope="session")
def small_limit_samples():
    """Cheap simulated limit samples for p-value plumbing in unit tests."""
    cfg = ts.BridgeSimConfig(reps=2000, grid_points=1000, seed=99, iota=0.1)
    return {D: ts.simulate_limit(cfg, D) for D in (1, 2, 5)}


def oracle_tail_copula(values, k, d, x, y):
    """Direct O(n^2) evaluation of the lag-d tail exceedance count."""
    values = np.asarray(values, dtype=float)
    n = values.size
    jx, jy = math.floor(k * x), math.floor(k * y)
    desc = sorted(values, reverse=True)
    thr_x, thr_y = desc[jx], desc[jy]
    count = 0
    for t in range(d, n):
        if values[t] > thr_x and values[t - d] > thr_y:
            count += 1
    return count / k


def oracle_pointwise(values, k, D, x=1.0, y=1.0):
    n = len(values)
    total = 0.0
    for d in range(1, D + 1):
        lam = oracle_tail_copula(values, k, d, x, y)
        total += (lam - k / n * x * y) ** 2
    return n / (x * y) * total


def _poly_segment_integral(c, kappa, z0, z1):
    """Exact integral of (c - kappa*4*z*(1-z))^2 over [z0, z1].

    Expands to c^2 - 8*c*kappa*z(1-z) + 16*kappa^2*z^2(1-z)^2 and applies
    the power rule, so this is an antiderivative-based route independent
    of any quadrature scheme.
    """

    def antiderivative(z):
        g1 = z**2 / 2.0 - z**3 / 3.0  # integral of z(1-z)
        g2 = z**3 / 3.0 - z**4 / 2.0 + z**5 / 5.0  # integral of z^2(1-z)^2
        return c * c * z - 8.0 * c * kappa * g1 + 16.0 * kappa * kappa * g2

    return antiderivative(z1) - antiderivative(z0)


def oracle_functional(values, k, D, iota):
    """Piecewise-exact functional statistic via antiderivatives."""
    values = np.asarray(values, dtype=float)
    n = values.size
    m_lo = math.floor(2 * k * iota) + 1
    m_hi = math.ceil(2 * k * (1 - iota)) - 1
    inner = [m / (2.0 * k) for m in range(m_lo, m_hi + 1) if iota < m / (2.0 * k) < 1 - iota]
    zs = [iota] + inner + [1.0 - iota]
    total = 0.0
    for d in range(1, D + 1):
        for z0, z1 in zip(zs[:-1], zs[1:]):
            zm = 0.5 * (z0 + z1)
            lam = oracle_tail_copula(values, k, d, 2.0 - 2.0 * zm, 2.0 * zm)
            total += _poly_segment_integral(lam, k / n, z0, z1)
    return n * total
