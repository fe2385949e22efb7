import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from penal_lab import potential as P
from penal_lab.errors import DivergentH, UnsupportedPotential
from penal_lab.rayknight import (besq_laplace_mc, besq_laplace_target, crosscheck_sturm, h_of_v,
                                 half_line_parts, phi_lambda)


def test_atom_exponents():
    c, a = 0.3, 1.0
    ex = phi_lambda(P.dirac([(a, c)]))
    assert ex.phi_inf == pytest.approx(1.0 / (1 + 2 * c * a), rel=1e-12)
    assert ex.M == pytest.approx(0.1875, rel=1e-12)
    assert ex.N == pytest.approx(0.5 * math.log(1.6), rel=1e-12)


def test_unit_box_exponents():
    # phi'' = 2 phi on [0, 1], flat beyond: phi = cosh(sqrt2 (1 - x)) / cosh(sqrt2)
    r = math.sqrt(2.0)
    ex = phi_lambda(P.box(1.0, 0.0, 1.0))
    assert ex.M == pytest.approx(0.5 * r * math.tanh(r), rel=1e-9)
    assert ex.N == pytest.approx(0.5 * math.log(math.cosh(r)), rel=1e-9)
    assert np.all((ex.values >= 0) & (ex.values <= 1))


def test_formula_equals_components():
    v = P.from_spec({"density": {"kind": "formula-id", "params": {"id": "box", "a": -0.5, "b": 2.0}},
                     "atoms": [[0.0, 0.4], [-1.0, 0.3]]})
    h = h_of_v(v)
    assert h.h == pytest.approx(h.formula_value(), rel=1e-14)
    assert h.m0 == pytest.approx(0.4)


@pytest.mark.parametrize("v", [P.box(1.0, -1.0, 2.0), P.dirac([(-1.0, 0.5), (0.5, 1.0)]),
                               P.triangle(1.5, -0.5, 1.0)])
def test_modes_agree(v):
    f = h_of_v(v, "formula")
    i = h_of_v(v, "integral")
    assert abs(f.h - i.h) <= 1e-8
    m = h_of_v(v, "mc", n_paths=4000, seed=3)
    assert abs(m.h - f.h) < 3 * m.stderr


def test_symmetric_formula():
    v = P.box(0.8, -1.5, 1.5)
    h = h_of_v(v)
    assert h.symmetric
    mp, _, np_, _ = h.components
    assert h.h == pytest.approx(math.exp(-2 * np_) / (2 * mp), rel=1e-10)


def test_zero_potential_diverges():
    with pytest.raises(DivergentH):
        h_of_v(P.zero())


def test_noncompact_rejected():
    with pytest.raises(UnsupportedPotential):
        phi_lambda(P.half_line(1.0))


def test_half_box_crosscheck():
    lhs, rhs = crosscheck_sturm(P.box(0.5, -1.0, 1.0))
    assert lhs == pytest.approx(rhs, abs=1e-4)


def test_besq_laplace_examples():
    lam = P.dirac([(1.0, 0.3)])
    assert besq_laplace_mc(0.0, 0.0, lam, 100, 0) == (1.0, 0.0)
    mean, se = besq_laplace_mc(2.0, 0.0, lam, 20000, 1)
    assert abs(mean - 1 / 1.6) < 3 * se
    assert besq_laplace_target(2.0, 0.0, lam) == pytest.approx(1 / 1.6, rel=1e-12)


def test_besq_additivity_mc():
    lam = P.box(0.5, 0.0, 1.0)
    m4, s4 = besq_laplace_mc(4.0, 1.0, lam, 20000, 2)
    a, sa = besq_laplace_mc(2.0, 1.0, lam, 20000, 3)
    b, sb = besq_laplace_mc(2.0, 0.0, lam, 20000, 4)
    se = math.sqrt(s4 ** 2 + (b * sa) ** 2 + (a * sb) ** 2)
    assert abs(m4 - a * b) < 3 * se


def test_log_laplace_affine_on_grid():
    lam = P.from_spec({"density": {"kind": "formula-id", "params": {"id": "triangle", "a": 0.0, "b": 2.0}},
                       "atoms": [[0.5, 0.2]]})
    ex = phi_lambda(lam)
    xs, ds = [0.0, 1.0, 2.0], [0.0, 2.0, 4.0]
    logq = np.array([[math.log(besq_laplace_target(d, x, lam)) for d in ds] for x in xs])
    # affine: second mixed differences vanish, slopes are -M and -N
    assert np.allclose(np.diff(logq, 2, axis=0), 0.0, atol=1e-12)
    assert np.allclose(np.diff(logq, 2, axis=1), 0.0, atol=1e-12)
    assert logq[1, 0] - logq[0, 0] == pytest.approx(-ex.M, rel=1e-12)
    assert logq[0, 1] - logq[0, 0] == pytest.approx(-2.0 * ex.N, rel=1e-12)


def test_half_line_parts_split_atom_at_origin():
    vp, vm, m0 = half_line_parts(P.dirac([(0.0, 0.7), (1.0, 0.2)]))
    assert m0 == pytest.approx(0.7)
    assert vp.total_mass() == pytest.approx(0.2)


@settings(max_examples=10)
@given(level=st.floats(0.2, 3.0), a=st.floats(-2.0, 0.0), b=st.floats(0.1, 2.0))
def test_crosscheck_property(level, a, b):
    lhs, rhs = crosscheck_sturm(P.box(level, a, b), hmax=2e-3)
    assert lhs == pytest.approx(rhs, abs=1e-4)
