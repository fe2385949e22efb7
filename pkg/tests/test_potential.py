import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from penal_lab import potential as P
from penal_lab.errors import InvalidPotential, NonPositivePhi, UnclassifiablePotential
from penal_lab.potential import RegimeKind, RegimeTag, Tail, TailInfo
from penal_lab.sturm import catalogue_profile


def test_box_mass_and_moment():
    v = P.box(2.0, -1.0, 1.0)
    assert v.total_mass() == pytest.approx(4.0, rel=1e-9)
    # int (1+|y|) 2 dy over [-1, 1] = 2 * (2 + 1)
    assert v.first_moment_integral() == pytest.approx(6.0, rel=1e-9)


def test_dirac_atoms_sorted_and_mass():
    v = P.dirac([(1.0, 0.5), (-1.0, 0.25)])
    assert v.atom_locations.tolist() == [-1.0, 1.0]
    assert v.total_mass() == pytest.approx(0.75)


@pytest.mark.parametrize("diag,build", [
    ("NegativeAtomMass", lambda: P.RadonPotential(np.linspace(-1, 1, 5), np.zeros(5), ((0.0, -1.0),))),
    ("GridNotSorted", lambda: P.RadonPotential(np.array([0.0, 2.0, 1.0]), np.ones(3))),
    ("NegativeDensity", lambda: P.RadonPotential(np.linspace(0, 1, 3), np.array([1.0, -1.0, 1.0]))),
])
def test_validate_reports(diag, build):
    v = build()
    assert diag in P.validate(v)
    with pytest.raises(InvalidPotential):
        P.require_valid(v)


def test_valid_potential_has_no_diagnostics():
    assert P.validate(P.box(1.0, -1.0, 1.0)) == []


def test_classify_regimes():
    assert P.classify_regime(P.box(1.0, -1.0, 1.0)).kind is RegimeKind.INTEGRABLE
    assert P.classify_regime(P.half_line(1.0)).kind is RegimeKind.UNILATERAL
    assert P.classify_regime(P.gaussian_tail()).kind is RegimeKind.UNILATERAL
    assert P.classify_regime(P.outside_indicator(1.0)).kind is RegimeKind.BILATERAL
    tag = P.classify_regime(P.slow_decay(1.0, 1.0))
    assert tag.kind is RegimeKind.SLOW_DECAY
    assert tag.log_rate_exponent == pytest.approx(-1.0 / 3.0)
    assert P.classify_regime(P.critical_bessel(0.5, 1.0)).kind is RegimeKind.CRITICAL_BESSEL


def test_classify_is_deterministic():
    v = P.box(1.0, -1.0, 1.0)
    assert P.classify_regime(v) == P.classify_regime(v)


def test_left_heavy_tail_is_unclassifiable():
    with pytest.raises(UnclassifiablePotential):
        P.classify_regime(P.half_line(1.0).reflected())


def test_undeclared_tails_are_unclassifiable():
    v = P.RadonPotential(np.linspace(-1, 1, 11), np.ones(11), tails=TailInfo(Tail(), Tail()))
    with pytest.raises(UnclassifiablePotential):
        P.classify_regime(v)


def test_regime_tag_rejects_negative_rate():
    with pytest.raises(ValueError):
        RegimeTag(RegimeKind.INTEGRABLE, k=0.5, rate=-1.0)


def test_from_spec_formula_and_atoms():
    v = P.from_spec({"density": {"kind": "formula-id", "params": {"id": "ex4.1"}},
                     "atoms": [[0.0, 0.5]]})
    assert v.total_mass() == pytest.approx(2.5, rel=1e-9)
    assert 0.0 in v.breakpoints


def test_from_spec_piecewise():
    v = P.from_spec({"density": {"kind": "piecewise",
                                 "params": {"breaks": [0.0, 1.0, 2.0], "values": [1.0, 3.0]}}})
    assert v.total_mass() == pytest.approx(4.0, rel=1e-9)


def test_from_spec_rejects_unknown_keys():
    with pytest.raises(InvalidPotential):
        P.from_spec({"density": {"kind": "piecewise", "params": {}}, "bogus": 1})
    with pytest.raises(InvalidPotential):
        P.from_spec({"density": {"kind": "formula-id", "params": {"id": "nope"}}})


def test_potential_from_phi_ou():
    prof = catalogue_profile("ex3.2", grid=np.linspace(-4, 4, 8001))
    vp = P.potential_from_phi(prof)
    inner = np.abs(vp.grid) < 3.9
    # stencil error is h^2 phi''''/(12 phi) with h = 1e-3
    assert np.max(np.abs(vp.density[inner] - (vp.grid[inner] ** 2 - 1))) < 1e-4
    assert vp.atoms == ()


def test_potential_from_phi_bang_bang():
    prof = catalogue_profile("ex3.5", {"lam": 1.0}, grid=np.linspace(-4, 4, 8001))
    vp = P.potential_from_phi(prof)
    inner = (np.abs(vp.grid) < 3.9) & (vp.grid != 0.0)
    assert np.max(np.abs(vp.density[inner] - 1.0)) < 1e-5
    assert len(vp.atoms) == 1
    a, m = vp.atoms[0]
    assert a == 0.0 and m == pytest.approx(-2.0, rel=1e-9)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_potential_from_phi_tent(a):
    prof = catalogue_profile("ex3.4", {"a": a}, grid=np.linspace(-6, 6, 12001))
    vp = P.potential_from_phi(prof)
    at0 = [m for x, m in vp.atoms if x == 0.0]
    assert at0 == [pytest.approx(-2.0 / (1.0 + a), rel=1e-9)]


def test_potential_from_phi_needs_positive_phi():
    class Prof:
        grid = np.linspace(-1, 1, 11)
        values = np.linspace(-1, 1, 11)

    with pytest.raises(NonPositivePhi):
        P.potential_from_phi(Prof())


@given(level=st.floats(0.1, 10.0), a=st.floats(-3.0, 0.0), w=st.floats(0.1, 3.0))
def test_box_scaling_and_reflection(level, a, w):
    v = P.box(level, a, a + w)
    assert P.validate(v) == []
    assert v.scaled(2.0).total_mass() == pytest.approx(2.0 * v.total_mass(), rel=1e-9)
    r = v.reflected()
    assert r.total_mass() == pytest.approx(v.total_mass(), rel=1e-9)
    assert r.support == (-(a + w), -a)


@given(locs=st.lists(st.floats(-5.0, 5.0), min_size=1, max_size=4, unique=True),
       mass=st.floats(0.01, 5.0))
def test_dirac_validates(locs, mass):
    v = P.dirac([(x, mass) for x in locs])
    assert P.validate(v) == []
    assert P.classify_regime(v).kind is RegimeKind.INTEGRABLE
    assert v.total_mass() == pytest.approx(mass * len(locs), rel=1e-12)
