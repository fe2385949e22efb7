import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma, gammaln, hyp2f1

from penal_lab.bessel import (BesselParams, drift_bound_h, exact_route_value, k_mu, limit_constant,
                              n_mu, phi_hypergeom, sample_besq, sandwich_check, verify_theorem1,
                              verify_theorem2)
from penal_lab.errors import InadmissibleParams


def _phi_oracle(mu, lam, x):
    # fractional-linear form through scipy's hypergeometric function
    n = 0.5 * (-mu + math.sqrt(mu * mu + lam))
    k = math.exp(gammaln(mu + n) - gammaln(mu + 2 * n) + gammaln(mu + n + 1) - gammaln(mu + 1))
    z = x * x / (1 + x * x)
    return k * (1 + x * x) ** (-n - mu) * hyp2f1(n + mu, mu + 1 + n, mu + 1, z)


def test_n_mu_examples():
    assert n_mu(BesselParams(-0.5, 2.0)) == pytest.approx(1.0, abs=1e-15)
    assert n_mu(BesselParams(0.0, 4.0)) == pytest.approx(1.0, abs=1e-15)
    assert n_mu(BesselParams(1.0, 1e-12)) == pytest.approx(0.0, abs=1e-12)


def test_params_validation():
    for args in ((-1.0, 1.0), (0.0, 0.0), (0.0, 1.0, -1.0)):
        with pytest.raises(InadmissibleParams):
            BesselParams(*args)
    assert BesselParams(0.0, 0.5).admissible
    assert not BesselParams(-0.5, 1.0).admissible


def test_limit_constants():
    assert limit_constant(BesselParams(-0.5, 2.0)) == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert gamma(1.5) / gamma(2.5) == pytest.approx(2.0 / 3.0)
    assert limit_constant(BesselParams(0.0, 4.0)) == pytest.approx(0.25, abs=1e-14)
    assert limit_constant(BesselParams(1.0, 1e-14)) == pytest.approx(1.0, abs=1e-12)


def test_polynomial_ground_state():
    x = np.linspace(0.0, 20.0, 201)
    prof = phi_hypergeom(BesselParams(0.0, 4.0, 1.0), x)
    assert prof.branch == "polynomial"
    assert prof.k_mu == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(prof.values - (1 + x * x)) / (1 + x * x)) <= 1e-10
    assert np.max(np.abs(prof.ode_residual())) <= 1e-10


@pytest.mark.parametrize("mu,lam", [(0.0, 0.5), (-0.5, 0.7), (0.3, 2.5), (1.5, 1.0)])
def test_series_matches_hyp2f1(mu, lam):
    x = np.linspace(0.0, 5.0, 51)
    prof = phi_hypergeom(BesselParams(mu, lam), x)
    assert prof.values[0] == pytest.approx(k_mu(BesselParams(mu, lam)), rel=1e-13)
    ref = np.array([_phi_oracle(mu, lam, xi) for xi in x])
    assert np.max(np.abs(prof.values / ref - 1)) < 1e-10
    assert np.max(np.abs(prof.ode_residual())) < 1e-8


def test_power_asymptote():
    p = BesselParams(0.0, 0.5)
    x = np.array([1e1, 1e2, 1e3])
    ratio = phi_hypergeom(p, x).values / x ** (2 * p.n)
    assert abs(ratio[-1] - 1) < abs(ratio[0] - 1)
    assert ratio[-1] == pytest.approx(1.0, abs=1e-3)


def test_branch_bracket():
    grid = np.linspace(0.0, 4.0, 41)
    poly = phi_hypergeom(BesselParams(0.0, 4.0), grid).values
    lo = phi_hypergeom(BesselParams(0.0, 4.0 * (1 - 1e-8)), grid, branch="series").values
    hi = phi_hypergeom(BesselParams(0.0, 4.0 * (1 + 1e-8)), grid, branch="series").values
    inner = grid > 0
    assert np.all((np.minimum(lo, hi) <= poly + 1e-12)[inner])
    assert np.all((np.maximum(lo, hi) >= poly - 1e-12)[inner])


@settings(max_examples=20)
@given(mu=st.floats(-0.5, 2.0), lam=st.floats(0.05, 6.0))
def test_drift_bound_and_rho(mu, lam):
    p = BesselParams(mu, lam)
    grid = np.linspace(0.0, 30.0, 301)
    h, lo, hi = drift_bound_h(p, grid)
    assert np.all(h >= lo - 1e-9) and np.all(h <= hi + 1e-9)
    prof = phi_hypergeom(p, grid)
    rho = prof.rho()
    assert rho > 0
    slope = prof.log_slope()
    assert np.all(slope >= 2 * p.n - rho / (1 + grid ** 2) - 1e-9)
    assert np.all(prof.values > 0)


def test_besq_moments_and_absorption():
    b = sample_besq(2.0, 0.0, [0.5, 1.0], 40000, 1)
    mean, se = b.moments()
    assert np.all(np.abs(mean - np.array([1.0, 2.0])) < 4 * se)
    assert np.all(sample_besq(0.0, 0.0, [1.0, 2.0], 100, 2).values == 0.0)


def test_besq_laplace_transform():
    c, a, x = 0.3, 1.0, 0.5
    y = sample_besq(2.0, x, [a], 100000, 3).final
    w = np.exp(-c * y)
    ref = math.exp(-x * c / (1 + 2 * c * a)) / (1 + 2 * c * a)
    assert abs(w.mean() - ref) < 3 * w.std(ddof=1) / math.sqrt(len(w))


def test_besq_additivity():
    # BESQ^2(x) + BESQ^2(y) has the law of BESQ^4(x + y)
    c = 0.4
    a = np.exp(-c * sample_besq(2.0, 0.3, [1.0], 50000, 4).final)
    b = np.exp(-c * sample_besq(2.0, 0.7, [1.0], 50000, 5).final)
    s = np.exp(-c * sample_besq(4.0, 1.0, [1.0], 50000, 6).final)
    lhs = a.mean() * b.mean()
    se = math.hypot(a.std() / math.sqrt(5e4) * b.mean(), b.std() / math.sqrt(5e4) * a.mean())
    se = math.hypot(se, s.std() / math.sqrt(5e4))
    assert abs(lhs - s.mean()) < 3 * se


def test_bessel_limit_routes_agree():
    p = BesselParams(0.0, 4.0, 0.0)
    rep = verify_theorem1(p, 1.0, [25.0], 20000, 1, h_rel=0.02)
    assert rep.target == pytest.approx(0.25)
    ex, exse = rep.extra["exact_route"][0], rep.extra["exact_stderr"][0]
    assert abs(rep.estimate[0] - ex) < 3 * math.hypot(rep.stderr[0], exse)
    assert abs(ex - rep.extra["exact_value"][0]) < 3 * exse
    assert exact_route_value(p, 1.0, 1e8) == pytest.approx(0.25, rel=1e-6)


def test_bessel_limit_needs_theta_zero():
    with pytest.raises(InadmissibleParams):
        verify_theorem1(BesselParams(0.0, 1.0, 1.0), 1.0, [1.0], 10, 0)


def test_critical_decay_gate():
    with pytest.raises(InadmissibleParams):
        verify_theorem2(BesselParams(-0.5, 1.0, 1.0), 1.0, [10.0])


def test_sandwich_holds():
    rep = sandwich_check(BesselParams(0.0, 0.5, 1.0), 1.0, 2.0, 1e-2, 2000, 0)
    assert rep.holds
