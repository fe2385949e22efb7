import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from penal_lab import potential as P
from penal_lab.errors import NoSignChange, UnknownFormula
from penal_lab.sturm import (CATALOGUE, PhiProfile, bilateral_mismatch, catalogue_potential,
                             closed_form_oracle, outside_indicator_gamma0, solve_bilateral_eigen,
                             solve_integrable_bvp, solve_phi, solve_unilateral_bvp)

S = math.sqrt(2.0 / math.pi)
XS = np.linspace(-10.0, 10.0, 2001)


def _tan_root_bisect(tol=1e-12):
    # independent oracle: bisection on tan(sqrt g) = sqrt((1-g)/g)
    f = lambda g: math.tan(math.sqrt(g)) - math.sqrt((1.0 - g) / g)
    lo, hi = 1e-9, 1.0 - 1e-12
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        lo, hi = (m, hi) if f(m) < 0 else (lo, m)
    return 0.5 * (lo + hi)


# -- integrable ---------------------------------------------------------------

def test_box_values():
    phi = solve_integrable_bvp(P.box(1.0, -1.0, 1.0))
    assert float(phi(0.0)) == pytest.approx(S / math.sinh(1.0), abs=1e-8)  # 0.678942
    assert float(phi(2.0)) == pytest.approx(S * (1.0 / math.tanh(1.0) + 1.0), abs=1e-8)  # 1.845569
    # the rounded decimals quoted alongside the formula are only good to ~4e-5
    assert float(phi(0.0)) == pytest.approx(0.678942, abs=5e-5)
    assert float(phi(2.0)) == pytest.approx(1.845569, abs=5e-5)


def test_two_atoms_flat_inside():
    phi = solve_integrable_bvp(P.dirac([(-1.0, 1.0), (1.0, 1.0)]))
    inside = np.linspace(-1.0, 1.0, 101)
    assert np.max(np.abs(phi(inside) - S)) < 1e-8
    assert float(phi.evaluate(3.0)[1]) == pytest.approx(S, abs=1e-9)
    assert float(phi.evaluate(-3.0)[1]) == pytest.approx(-S, abs=1e-9)


def test_atom_jump_law():
    v = P.dirac([(-0.5, 0.7), (1.2, 2.0)])
    phi = solve_integrable_bvp(v)
    for a, m in v.atoms:
        i = int(np.argmin(np.abs(phi.grid - a)))
        assert phi.grid[i] == pytest.approx(a)
        jump = phi.dphi_plus[i] - phi.dphi_minus[i]
        assert jump == pytest.approx(m * phi.values[i], rel=1e-9)


def test_normalization_and_asymptotic_slopes():
    v = P.triangle(2.0, -1.0, 1.5)
    phi = solve_integrable_bvp(v)
    assert v.integrate_against(phi) == pytest.approx(4.0 / math.sqrt(2 * math.pi), abs=1e-6)
    assert phi.dphi_plus[-1] == pytest.approx(S, abs=1e-9)
    assert phi.dphi_minus[0] == pytest.approx(-S, abs=1e-9)


@pytest.mark.parametrize("fid", ["ex4.1", "ex4.2", "ex5.1", "ex5.2"])
def test_catalogue_matches_solver(fid):
    phi = solve_phi(catalogue_potential(fid))
    err = np.max(np.abs(phi(XS) - closed_form_oracle(fid, None, XS)))
    assert err <= 1e-6


def test_oracle_spot_values():
    assert closed_form_oracle("ex4.1", {"gamma": 1, "a": -1, "b": 1}, 0.0) == pytest.approx(S / math.sinh(1.0), abs=1e-12)
    assert closed_form_oracle("ex5.1", {"lam": 1.0}, 0.0) == pytest.approx(0.797885, abs=1e-6)
    g0 = _tan_root_bisect()
    assert closed_form_oracle("ex8.1", {"a": 1.0}, 0.0) == pytest.approx(1.0 / math.cos(math.sqrt(g0)), rel=1e-9)


def test_unknown_formula():
    with pytest.raises(UnknownFormula):
        closed_form_oracle("ex9.9", None, 0.0)


def test_catalogue_ids():
    assert set(CATALOGUE) == {"ex3.1", "ex3.2", "ex3.4", "ex3.5", "ex4.1", "ex4.2", "ex5.1", "ex5.2", "ex8.1"}


# -- unilateral ---------------------------------------------------------------

def test_half_line_exponential():
    phi = solve_unilateral_bvp(P.half_line(1.0))
    xs = np.linspace(0.0, 8.0, 81)
    assert np.max(np.abs(phi(xs) - S * np.exp(-xs))) < 1e-6
    assert float(phi(-1.0)) == pytest.approx(2 * S, abs=1e-6)  # 1.595769


def test_gaussian_tail_c1_gluing():
    phi = solve_unilateral_bvp(P.gaussian_tail())
    i = int(np.argmin(np.abs(phi.grid - 1.0)))
    assert phi.values[i] == pytest.approx(S, abs=1e-6)
    assert phi.dphi_minus[i] == pytest.approx(-S, abs=1e-6)
    assert phi.dphi_plus[i] == pytest.approx(-S, abs=1e-6)


def test_unilateral_positive_convex():
    phi = solve_unilateral_bvp(P.half_line(2.0))
    assert phi.positive()
    assert np.min(phi.second_differences()) > -1e-8


# -- bilateral ----------------------------------------------------------------

def test_gamma0_tan_root():
    g_ref = _tan_root_bisect()
    assert g_ref == pytest.approx(0.5462, abs=1e-4)
    res = solve_bilateral_eigen(P.outside_indicator(1.0))
    assert abs(res.gamma0 - g_ref) <= 1e-8
    assert abs(outside_indicator_gamma0(1.0) - g_ref) <= 1e-10
    assert res.phi.gamma_shift == res.gamma0


def test_bilateral_profile():
    res = solve_bilateral_eigen(P.outside_indicator(1.0))
    g = _tan_root_bisect()
    ax = np.abs(XS)
    ref = np.where(ax <= 1, np.cos(math.sqrt(g) * XS) / math.cos(math.sqrt(g)),
                   np.exp(-math.sqrt(1 - g) * (ax - 1)))
    assert np.max(np.abs(res.phi(XS) - ref)) <= 1e-6


def test_mismatch_monotone_single_crossing():
    v = P.outside_indicator(1.0)
    gs = np.linspace(0.05, 0.95, 19)
    m = np.array([bilateral_mismatch(v, g) for g in gs])
    assert np.all(np.diff(m) < 0)
    assert np.sum(np.diff(np.sign(m)) != 0) == 1


def test_constant_potential_has_no_sign_change():
    with pytest.raises(NoSignChange):
        solve_bilateral_eigen(P.constant(1.0))


# -- io and properties ----------------------------------------------------------

def test_csv_round_trip(tmp_path):
    phi = solve_integrable_bvp(P.box(1.0, -1.0, 1.0), hmax=1e-2)
    back = PhiProfile.from_csv(phi.to_csv(tmp_path / "phi.csv"))
    assert np.array_equal(back.grid, phi.grid)
    assert np.array_equal(back.values, phi.values)


@given(level=st.floats(0.2, 5.0), a=st.floats(-2.0, 0.5), w=st.floats(0.2, 2.0))
def test_box_profile_invariants(level, a, w):
    v = P.box(level, a, a + w)
    phi = solve_integrable_bvp(v, hmax=5e-3)
    assert phi.positive()
    assert np.min(phi.second_differences()) > -1e-8
    assert phi.dphi_plus[-1] == pytest.approx(S, abs=1e-8)
    assert phi.dphi_minus[0] == pytest.approx(-S, abs=1e-8)
    assert v.integrate_against(phi) == pytest.approx(4.0 / math.sqrt(2 * math.pi), rel=1e-4)
    g = math.sqrt(level)
    ref = closed_form_oracle("ex4.1", {"gamma": g, "a": a, "b": a + w}, phi.grid)
    assert np.max(np.abs(phi.values - ref)) < 1e-7


@given(m1=st.floats(0.1, 4.0), m2=st.floats(0.1, 4.0), gap=st.floats(0.2, 3.0))
def test_two_atom_jumps(m1, m2, gap):
    v = P.dirac([(0.0, m1), (gap, m2)])
    phi = solve_integrable_bvp(v, hmax=5e-3)
    for a, m in v.atoms:
        i = int(np.argmin(np.abs(phi.grid - a)))
        assert phi.dphi_plus[i] - phi.dphi_minus[i] == pytest.approx(m * phi.values[i], rel=1e-8)


@given(level=st.floats(0.2, 3.0), a=st.floats(0.2, 2.0))
def test_symmetric_potential_gives_even_profile(level, a):
    phi = solve_integrable_bvp(P.box(level, -a, a), hmax=5e-3)
    xs = np.linspace(0.0, 4.0, 41)
    assert np.max(np.abs(phi(xs) - phi(-xs))) < 1e-8
