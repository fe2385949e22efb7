import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc, i0

from penal_lab import potential as P
from penal_lab.errors import PoorFit, TailNotCovered
from penal_lab.feynman_kac import (ZSurface, apriori_bound, estimate_z_mc, fit_decay,
                                   laplace_tilde_A, solve_pde_z)
from penal_lab.potential import classify_regime
from penal_lab.sturm import outside_indicator_gamma0

S = math.sqrt(2.0 / math.pi)


def test_half_line_arcsine_value():
    zs = solve_pde_z(P.half_line(1.0), None, 1.0, 1e-3, 1e-3)
    assert zs.value(1.0, 0.0) == pytest.approx(math.exp(-0.25) * i0(0.25), abs=1e-6)


def test_zero_potential_gives_one():
    zs = solve_pde_z(P.zero(), None, 5.0)
    assert np.max(np.abs(zs.values - 1.0)) < 1e-9
    assert estimate_z_mc(P.zero(), 0.0, 1.0, 100, 1e-2, 0) == (1.0, 0.0)


def test_constant_density_exponential():
    c, t = 0.7, 2.0
    zs = solve_pde_z(P.constant(c), (-20.0, 20.0), t)
    inner = np.abs(zs.grid) < 5
    assert np.max(np.abs(zs.values[-1, inner] - math.exp(-c * t / 2))) < 1e-5


def test_surface_invariants():
    zs = solve_pde_z(P.box(1.0, -1.0, 1.0), None, 20.0, dt_growth=1.02, dt_max=0.5)
    assert np.all(zs.values[0] == 1.0)
    assert np.all(zs.values > 0) and np.all(zs.values <= 1.0 + 1e-12)
    assert np.all(np.diff(zs.values, axis=0) <= 1e-12)


def test_atom_local_time_law():
    # mass 2 at the origin: Z = E_0[exp(-L_1)] with L_1 ~ |N(0,1)|
    ref = 2.0 * math.exp(0.5) * 0.5 * erfc(1.0 / math.sqrt(2.0))
    v = P.dirac([(0.0, 2.0)])
    zs = solve_pde_z(v, None, 1.0, 1e-3, 1e-3)
    assert zs.value(1.0, 0.0) == pytest.approx(ref, abs=1e-5)
    mean, se = estimate_z_mc(v, 0.0, 1.0, 50000, 1e-3, 3, band_extrapolate=True)
    assert abs(mean - ref) < 3 * se


def test_mc_matches_pde_box():
    v = P.box(1.0, -1.0, 1.0)
    zs = solve_pde_z(v, None, 2.0, 1e-3, 1e-3)
    for x in (0.0, 1.5):
        mean, se = estimate_z_mc(v, x, 2.0, 20000, 2e-3, 11)
        assert abs(mean - zs.value(2.0, x)) < 3 * se


def test_mc_reproducible():
    v = P.box(1.0, -1.0, 1.0)
    assert estimate_z_mc(v, 0.0, 1.0, 3000, 1e-2, 5) == estimate_z_mc(v, 0.0, 1.0, 3000, 1e-2, 5)
    assert estimate_z_mc(v, 0.0, 1.0, 3000, 1e-2, 5) != estimate_z_mc(v, 0.0, 1.0, 3000, 1e-2, 6)


def test_laplace_of_constant_surface():
    t = np.linspace(0.0, 2000.0, 200001)
    x = np.linspace(-5.0, 5.0, 11)
    zs = ZSurface(t, x, np.ones((len(t), len(x))))
    tc = laplace_tilde_A(zs, [0.5, 0.05], tail=None)
    for i, lam in enumerate(tc.lambdas):
        a, d = tc.value(i, 0.0)
        assert a == pytest.approx(math.sqrt(2.0 / lam), rel=1e-5)
        assert d == pytest.approx(0.0, abs=1e-9)


def test_laplace_needs_tail_model():
    t = np.linspace(0.0, 10.0, 101)
    zs = ZSurface(t, np.linspace(-1, 1, 5), np.ones((101, 5)))
    with pytest.raises(TailNotCovered):
        laplace_tilde_A(zs, [1e-3], tail=None)


def test_fit_decay_box():
    v = P.box(1.0, -1.0, 1.0)
    zs = solve_pde_z(v, None, 400.0, 1e-2, 1e-2, dt_growth=1.02, dt_max=2.0, times=[40.0, 400.0])
    est = fit_decay(zs, 0.0, classify_regime(v), (40.0, 400.0))
    assert est.k == pytest.approx(0.5, abs=0.05)
    assert est.constant == pytest.approx(S / math.sinh(1.0), rel=0.1)
    with pytest.raises(PoorFit):
        fit_decay(zs, 0.0, classify_regime(v), (50.0, 400.0))


def test_fit_decay_bilateral_rate():
    v = P.outside_indicator(1.0)
    zs = solve_pde_z(v, None, 60.0, 1e-2, 1e-2, dt_growth=1.02, dt_max=1.0)
    est = fit_decay(zs, 0.0, classify_regime(v), (10.0, 60.0))
    assert est.gamma == pytest.approx(outside_indicator_gamma0(1.0), rel=0.01)


def test_fit_decay_zero_potential():
    v = P.zero()
    zs = solve_pde_z(v, None, 400.0, 1e-2, 1e-2, dt_growth=1.02, dt_max=2.0, times=[40.0, 400.0])
    est = fit_decay(zs, 0.0, classify_regime(v), (40.0, 400.0))
    assert est.k == pytest.approx(0.0, abs=1e-9)
    assert est.gamma == pytest.approx(0.0, abs=1e-9)
    assert est.constant == pytest.approx(1.0, rel=1e-8)


def test_apriori_bound_stable():
    zs = solve_pde_z(P.box(1.0, -1.0, 1.0), None, 200.0, 1e-2, 1e-2, dt_growth=1.02, dt_max=2.0)
    b1 = apriori_bound(zs, (0.0, 100.0), 10.0)
    b2 = apriori_bound(zs, (0.0, 200.0), 10.0)
    assert math.isfinite(b2) and b2 == pytest.approx(b1, rel=0.05)


@settings(max_examples=10)
@given(level=st.floats(0.1, 4.0), a=st.floats(-2.0, 1.0), w=st.floats(0.1, 2.0),
       mass=st.floats(0.0, 3.0))
def test_monotone_decay(level, a, w, mass):
    v = P.from_spec({"density": {"kind": "formula-id", "params": {"id": "box", "level": level,
                                                                 "a": a, "b": a + w}},
                     "atoms": [[a + 0.5 * w, mass]]})
    zs = solve_pde_z(v, None, 3.0, 2e-2, 2e-2)
    assert np.all(zs.values > 0) and np.all(zs.values <= 1.0 + 1e-12)
    assert np.all(np.diff(zs.values, axis=0) <= 1e-12)
