import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from penal_lab.errors import InadmissibleParams, MonotoneDrift
from penal_lab.ld_rate import psi_profile, rate_I, solve_c_eta, sweep_table


def _c_bruteforce(lam=1.0):
    # root of (1/sqrt(lam)) int_0^C dy / sqrt(1/y - 1/C) = 1 by plain quadrature
    def g(c):
        val, _ = quad(lambda y: 1.0 / math.sqrt(1.0 / y - 1.0 / c), 0.0, c, limit=200)
        return val / math.sqrt(lam) - 1.0
    return brentq(g, 0.1, 5.0, xtol=1e-12)


def test_c_alpha_one():
    c_ref = _c_bruteforce()
    assert c_ref == pytest.approx((2.0 / math.pi) ** (2.0 / 3.0), rel=1e-6)
    assert solve_c_eta(1.0, 1.0, 0.0) == pytest.approx(c_ref, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_c_scaling(alpha):
    c1 = solve_c_eta(alpha, 1.0, 0.0)
    for lam in (0.5, 2.0, 4.0):
        assert solve_c_eta(alpha, lam, 0.0) == pytest.approx(lam ** (1 / (2 + alpha)) * c1, rel=1e-9)


def test_eta_infinite():
    with pytest.raises(MonotoneDrift):
        solve_c_eta(1.0, 1.0, math.inf)


def test_inadmissible_alpha():
    with pytest.raises(InadmissibleParams):
        solve_c_eta(2.0, 1.0, 0.0)


def test_profile_boundary_and_first_integral():
    sol = psi_profile(1.0, 1.0, 0.0)
    assert sol.psi[0] == 0.0
    assert sol.psi[-1] == pytest.approx(sol.C, rel=1e-12)
    assert sol.first_integral_residual <= 1e-8
    assert abs(sol.endpoint_residual) <= 1e-10
    assert np.all(np.diff(sol.psi) > 0)
    assert sol.I > 0


def test_profile_is_concave():
    sol = psi_profile(1.0, 2.0, 0.01, n=201)
    d2 = np.diff(sol.psi, 2)
    assert np.all(d2 < 1e-12)


def test_rate_decreasing_in_eta():
    vals = [rate_I(1.0, 1.0, e) for e in (0.1, 0.05, 0.01)]
    assert vals[0] < vals[1] < vals[2]
    assert rate_I(1.0, 1.0, 0.0) > vals[2] > 0


def test_rate_scaling_alpha_one():
    ref = rate_I(1.0, 1.0)
    for lam in (0.5, 2.0, 4.0):
        assert rate_I(1.0, lam) / lam ** (2.0 / 3.0) == pytest.approx(ref, rel=1e-5)


def test_rate_direct_and_extrapolated_agree():
    assert rate_I(1.0, 1.0, method="direct") == pytest.approx(rate_I(1.0, 1.0), rel=1e-6)


def test_sweep_columns():
    tab = sweep_table([1.0], [1.0, 2.0], [0.1])
    assert set(tab) == {"alpha", "lam", "eta", "C", "I"}
    assert len(tab["I"]) == 2


@settings(max_examples=12)
@given(alpha=st.floats(0.3, 1.7), lam=st.floats(0.2, 5.0), eta=st.floats(0.005, 1.0))
def test_profile_invariants(alpha, lam, eta):
    sol = psi_profile(alpha, lam, eta, n=41)
    assert abs(sol.endpoint_residual) <= 1e-9
    assert sol.first_integral_residual <= 1e-6
    assert np.all(np.diff(sol.psi) > 0)
    assert sol.I > 0
