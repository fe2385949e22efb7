import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from penal_lab import potential as P
from penal_lab.bessel import BesselParams
from penal_lab.errors import DivergentScale
from penal_lab.penalized import (DiffusionSpec, bang_bang_identity_check, exit_mc,
                                 exit_probabilities, h_transform_check, invariant_density_check,
                                 martingale_check, sample_max_minus_value, simulate,
                                 window_exit_probability)
from penal_lab.sturm import catalogue_profile, solve_bilateral_eigen, solve_phi


@pytest.fixture(scope="module")
def box_phi():
    return solve_phi(P.box(1.0, -1.0, 1.0))


def test_ou_moments():
    spec = DiffusionSpec.from_phi(catalogue_profile("ex3.2"), 2.0, 5e-3, 1.0)
    xt = simulate(spec, 40000, 1).final
    mean, var = 2.0 * math.exp(-1.0), 0.5 * (1 - math.exp(-2.0))
    assert abs(xt.mean() - mean) < 4 * math.sqrt(var / len(xt))
    assert xt.var() == pytest.approx(var, rel=0.03)


def test_free_is_brownian():
    b = simulate(DiffusionSpec.free(0.5, 1e-2, 2.0), 40000, 2, times=[1.0, 2.0])
    mean, se = b.moments()
    assert np.all(np.abs(mean - 0.5) < 4 * se)
    assert b.values.var(axis=0) == pytest.approx([1.0, 2.0], rel=0.03)


def test_bang_bang_drift_table():
    spec = DiffusionSpec.bang_bang(1.0, 0.0, 1e-3, 1.0)
    lo, dx, vals = spec.drift
    xs = lo + dx * np.arange(len(vals))
    away = np.abs(xs) > 1e-2
    assert np.allclose(vals[away], -np.sign(xs[away]), atol=1e-9)


def test_bessel_spec_positive_paths():
    spec = DiffusionSpec.bessel(BesselParams(-0.25, 0.5, 1.0), 1.0, 1e-3, 1.0)
    xt = simulate(spec, 2000, 3).final
    assert np.all(xt >= 0)
    with pytest.raises(ValueError):
        DiffusionSpec.bessel(BesselParams(1.0, 0.5, 1.0), 1.0, 1e-3, 1.0)


def test_h_transform_box(box_phi):
    rep = h_transform_check(P.box(1.0, -1.0, 1.0), box_phi, 0.0, 5.0, 20000, 4)
    assert abs(rep.z_score) < 3


def test_h_transform_trivial():
    rep = h_transform_check(None, None, 0.0, 5.0, 10, 0)
    assert rep.z_shifted == 1.0 and rep.h_estimate == 1.0


def test_h_transform_bilateral():
    v = P.outside_indicator(1.0)
    phi = solve_bilateral_eigen(v).phi
    rep = h_transform_check(v, phi, 0.0, 5.0, 20000, 5)
    assert rep.gamma_shift == pytest.approx(phi.gamma_shift)
    assert abs(rep.z_score) < 3


@pytest.mark.parametrize("t", [1.0, 5.0])
def test_martingale(box_phi, t):
    rep = martingale_check(P.box(1.0, -1.0, 1.0), box_phi, 0.3, t, 20000, 6)
    assert abs(rep.z_score) < 3


def test_exit_probabilities_symmetric(box_phi):
    sd = exit_probabilities(box_phi, [0.0, 1e6, -1e6, 3.0])
    assert sd.p_plus[0] == pytest.approx(0.5, abs=1e-10)
    assert sd.p_plus[1] == pytest.approx(1.0, abs=1e-5)
    assert sd.p_plus[2] == pytest.approx(0.0, abs=1e-5)
    assert np.allclose(sd.p_plus + sd.p_minus, 1.0)
    assert math.isfinite(sd.rho)


def test_exit_scale_closed_form(box_phi):
    # outside [-1, 1] phi is affine, so S has a closed form there
    s = math.sqrt(2 / math.pi)
    sd = exit_probabilities(box_phi, [1.0, 4.0])
    y1 = float(box_phi(1.0))
    tail = lambda x: 1 / (s * y1) - 1 / (s * (y1 + s * (x - 1)))
    assert sd.s[1] - sd.s[0] == pytest.approx(tail(4.0), rel=1e-9)


def test_recurrent_scale_diverges():
    with pytest.raises(DivergentScale):
        exit_probabilities(catalogue_profile("ex3.2"), 0.0)
    with pytest.raises(DivergentScale):
        exit_probabilities(solve_bilateral_eigen(P.outside_indicator(1.0)).phi, 0.0)


def test_exit_mc_small(box_phi):
    p, se, unfinished = exit_mc(box_phi, 1.0, 4000, 7)
    assert unfinished == 0
    assert abs(p - window_exit_probability(box_phi, 1.0, -50.0, 50.0)) < 3 * se


def test_invariant_density_ou():
    spec = DiffusionSpec.from_phi(catalogue_profile("ex3.2"), 0.0, 5e-3, 5.0)
    rep = invariant_density_check(spec, 5.0, 20000, seed=8)
    assert rep.passed


def test_invariant_density_bang_bang():
    rep = invariant_density_check(DiffusionSpec.bang_bang(1.0, 0.0, 2e-3, 6.0), 6.0, 20000, seed=9)
    assert rep.passed


def test_bang_bang_ks():
    assert bang_bang_identity_check(1.0, 1.0, 20000, 10).pvalue > 0.01
    assert bang_bang_identity_check(0.0, 1.0, 20000, 11).pvalue > 0.01
    r0 = bang_bang_identity_check(1.0, 0.0, 100, 12)
    assert (r0.statistic, r0.pvalue) == (0.0, 1.0)


def test_max_minus_value_moments():
    # lambda = 0: S_t - B_t has the law of |B_t|
    s = sample_max_minus_value(0.0, 2.0, 100000, 13)
    assert np.all(s >= 0)
    assert s.mean() == pytest.approx(math.sqrt(2 * 2.0 / math.pi), rel=0.01)


@settings(max_examples=10)
@given(level=st.floats(0.2, 3.0), a=st.floats(-2.0, 0.0), w=st.floats(0.2, 3.0))
def test_scale_monotone(level, a, w):
    phi = solve_phi(P.box(level, a, a + w), hmax=5e-3)
    xs = np.linspace(-6.0, 6.0, 13)
    sd = exit_probabilities(phi, xs)
    assert np.all(np.diff(sd.p_plus) > 0)
    assert np.all((sd.p_plus >= 0) & (sd.p_plus <= 1))
