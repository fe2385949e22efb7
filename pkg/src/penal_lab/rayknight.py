"""Ray-Knight constant ``H(V)`` for compactly supported potentials.

Weights here are ``exp(-int L^y_t V(dy))`` without the factor 1/2 used for ``Z``, so
``sqrt(t) E_0[exp(-int L^y_t V(dy))] -> sqrt(2/pi) H(V)`` matches ``phi_{2V}(0)``.
:func:`crosscheck_sturm` applies the ``V -> 2V`` map explicitly.

``H`` is built from the squared-Bessel Laplace exponents ``M`` and ``N`` of the two
half-line pieces ``V+`` (on ``x > 0``) and ``V-`` (the reflection of ``x < 0``).  An atom
at the origin is seen by both local-time halves at level ``l`` and contributes
``exp(-m l)``; it is carried separately as ``m0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.integrate import quad

from .bessel import sample_besq
from .errors import DivergentH, NonConvergedShooting, UnsupportedPotential
from .potential import RadonPotential, TailInfo, require_valid
from .sturm import build_nodes, solve_integrable_bvp, sweep

__all__ = [
    "LevyExponents",
    "HValue",
    "half_line_parts",
    "phi_lambda",
    "besq_laplace_target",
    "besq_laplace_mc",
    "h_of_v",
    "crosscheck_sturm",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True, eq=False)
class LevyExponents:
    """``M = -phi'(0)/2`` and ``N = -log(phi(inf))/2`` for ``phi''/2 = phi lam``."""

    M: float
    N: float
    phi_inf: float
    phi_prime0: float
    grid: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def laplace(self, x: float, delta: float) -> float:
        """``Q_x^{(delta)}[exp(-<Y, lam>)] = exp(-x M - delta N)``."""
        return math.exp(-x * self.M - delta * self.N)


@dataclass(frozen=True)
class HValue:
    h: float
    components: tuple[float, float, float, float]  # M+, M-, N+, N-
    symmetric: bool
    mode: str
    stderr: float = 0.0
    m0: float = 0.0
    meta: Mapping[str, Any] = field(default_factory=dict)

    def formula_value(self) -> float:
        mp, mm, np_, nm = self.components
        return (math.exp(-2 * np_) + math.exp(-2 * nm)) / (2 * (mp + mm + self.m0))


def _compact_support(v: RadonPotential) -> tuple[float, float]:
    if v.support is not None:
        return v.support
    if not v.tails.is_compact:
        raise UnsupportedPotential("H(V) needs a compactly supported potential")
    pos = np.nonzero(v.density > 0)[0]
    pts = [v.grid[pos[0]], v.grid[pos[-1]]] if len(pos) else []
    pts += [a for a, _ in v.atoms]
    if not pts:
        raise DivergentH("zero potential: H is infinite")
    return float(min(pts)), float(max(pts))


def _restrict_right(v: RadonPotential, hi: float) -> RadonPotential:
    """``1_{x > 0} V(dx)`` as a measure on ``[0, hi]``."""
    grid = np.linspace(0.0, max(hi, 1e-9), 2001)

    def fn(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, v.density_at(x), 0.0)

    atoms = tuple((a, m) for a, m in v.atoms if a > 0)
    bps = tuple(b for b in v.breakpoints if 0 < b <= hi)
    return RadonPotential(grid, fn(grid), atoms, TailInfo.compact(), (0.0, max(hi, 1e-9)), fn,
                          bps, name=f"{v.name}+")


def half_line_parts(v: RadonPotential) -> tuple[RadonPotential, RadonPotential, float]:
    """``(V+, V-, m0)`` with ``m0`` the mass of an atom at the origin."""
    lo, hi = _compact_support(v)
    m0 = sum(m for a, m in v.atoms if a == 0.0)
    return _restrict_right(v, max(hi, 0.0)), _restrict_right(v.reflected(), max(-lo, 0.0)), m0


def phi_lambda(lam: RadonPotential, hmax: float = 1e-3) -> LevyExponents:
    """Solve ``phi''/2 = phi lam`` on ``(0, inf)`` with ``phi(0) = 1`` and ``0 <= phi <= 1``.

    Beyond the support ``phi`` is constant, so a backward sweep from the right end
    with ``phi = 1, phi' = 0`` and a final rescaling gives the bounded solution.  Atoms
    jump ``phi'`` by ``2 m phi``.  An atom at the origin enters ``phi'(0)`` as the
    derivative on its left, i.e. it adds its mass to ``M``.
    """
    require_valid(lam)
    if lam.atoms and min(a for a, _ in lam.atoms) < 0:
        raise UnsupportedPotential("phi_lambda needs a measure on [0, inf)")
    if lam.support is not None:
        hi = lam.support[1]
    else:
        if not lam.tails.is_compact:
            raise UnsupportedPotential("phi_lambda needs compact support")
        hi = float(lam.grid[-1])
    hi = max(hi, max((a for a, _ in lam.atoms), default=0.0)) + 0.5
    nodes = build_nodes(0.0, hi, lam.breakpoints + tuple(a for a, _ in lam.atoms), hmax)
    jumps = np.zeros_like(nodes)
    for a, m in lam.atoms:
        i = int(np.argmin(np.abs(nodes - a)))
        jumps[i] += 2.0 * m

    def q(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, 2.0 * lam.density_at(x), 0.0)

    y, dminus, _ = sweep(nodes, q, jumps, 1.0, 0.0, forward=False)
    if not np.all(np.isfinite(y)) or y[0] <= 0:
        raise NonConvergedShooting("backward sweep for phi_lambda failed")
    vals = y / y[0]
    dphi0 = float(dminus[0] / y[0])
    phi_inf = float(1.0 / y[0])
    if np.any(vals > 1 + 1e-12) or np.any(vals < 0):
        raise NonConvergedShooting("phi_lambda left [0, 1]")
    return LevyExponents(-0.5 * dphi0, -0.5 * math.log(phi_inf), phi_inf, dphi0, nodes, vals)


def besq_laplace_target(delta: float, x0: float, lam: RadonPotential) -> float:
    return phi_lambda(lam).laplace(x0, delta)


def _functional_grid(lam: RadonPotential, ds: float) -> np.ndarray:
    hi = lam.support[1] if lam.support is not None else float(lam.grid[-1])
    hi = max(hi, max((a for a, _ in lam.atoms), default=0.0))
    return build_nodes(0.0, max(hi, ds), lam.breakpoints + tuple(a for a, _ in lam.atoms), ds)


def besq_laplace_mc(delta: float, x0: float, lam: RadonPotential, n_paths: int, seed: int,
                    ds: float = 2e-3) -> tuple[float, float]:
    """``Q_x^{(delta)}[exp(-int Y(s) lam(ds))]`` from exact BESQ paths.

    The density part is integrated by the trapezoid rule on a grid of step ``ds``
    holding every atom and breakpoint; atoms use the path value at their location.
    """
    s = _functional_grid(lam, ds)
    times = s[1:]
    paths = sample_besq(delta, x0, times, n_paths, seed)
    y = np.column_stack([np.full(n_paths, float(x0)), paths.values])
    dens = lam.density_at(s)
    w = np.zeros(len(s))
    h = np.diff(s)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    expo = y @ (w * dens)
    for a, m in lam.atoms:
        i = int(np.argmin(np.abs(s - a)))
        expo = expo + m * y[:, i]
    val = np.exp(-expo)
    return float(val.mean()), float(val.std(ddof=1) / math.sqrt(n_paths))


def _is_symmetric(v: RadonPotential, vp: RadonPotential, vm: RadonPotential) -> bool:
    xs = np.linspace(0.0, vp.support[1] if vp.support else 1.0, 513)[1:]
    dens = np.allclose(vp.density_at(xs), vm.density_at(xs), rtol=1e-12, atol=1e-14)
    ap = sorted((round(a, 12), m) for a, m in vp.atoms)
    am = sorted((round(a, 12), m) for a, m in vm.atoms)
    return bool(dens and len(ap) == len(am) and all(
        a1 == a2 and math.isclose(m1, m2, rel_tol=1e-12) for (a1, m1), (a2, m2) in zip(ap, am)))


def h_of_v(v: RadonPotential, mode: str = "formula", n_paths: int = 20000, seed: int = 0,
           n_nodes: int = 8) -> HValue:
    """``H(V) = (e^{-2N+} + e^{-2N-}) / (2(M+ + M- + m0))``.

    ``mode="integral"`` integrates ``(1/2) int_0^inf (Q^0_l[V-] Q^2_l[V+] + Q^2_l[V-] Q^0_l[V+])
    e^{-m0 l} dl`` numerically with the exponents from :func:`phi_lambda`.
    ``mode="mc"`` replaces each ``Q`` factor by a BESQ Monte Carlo mean on Gauss-Laguerre
    nodes in ``l`` (exact for the exponential integrand) and reports a stderr.
    """
    require_valid(v)
    vp, vm, m0 = half_line_parts(v)
    ep = phi_lambda(vp) if vp.total_mass() > 0 else LevyExponents(0.0, 0.0, 1.0, 0.0)
    em = phi_lambda(vm) if vm.total_mass() > 0 else LevyExponents(0.0, 0.0, 1.0, 0.0)
    comps = (ep.M, em.M, ep.N, em.N)
    total = ep.M + em.M + m0
    if total <= 0:
        raise DivergentH("M(V+) + M(V-) = 0: H is infinite")
    sym = _is_symmetric(v, vp, vm)
    if mode == "formula":
        h = (ep.phi_inf + em.phi_inf) / (2.0 * total)
        return HValue(h, comps, sym, mode, 0.0, m0)
    if mode == "integral":
        def f(l: float) -> float:
            return 0.5 * (em.laplace(l, 0) * ep.laplace(l, 2) + em.laplace(l, 2) * ep.laplace(l, 0)) \
                * math.exp(-m0 * l)

        h, err = quad(f, 0.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        return HValue(h, comps, sym, mode, 0.0, m0, {"quad_error": err})
    if mode == "mc":
        u, wts = np.polynomial.laguerre.laggauss(n_nodes)
        ls = u / total
        acc = 0.0
        var = 0.0
        for i, l in enumerate(ls):
            parts = []
            for j, (piece, delta) in enumerate(((vm, 0), (vp, 2), (vm, 2), (vp, 0))):
                if piece.total_mass() > 0:
                    parts.append(besq_laplace_mc(delta, float(l), piece, n_paths, seed + 4 * i + j))
                else:
                    parts.append((1.0, 0.0))
            (a, sa), (b, sb), (c, sc), (d, sd) = parts
            g = 0.5 * (a * b + c * d) * math.exp(-m0 * l)
            gv = 0.25 * ((b * sa) ** 2 + (a * sb) ** 2 + (d * sc) ** 2 + (c * sd) ** 2) * math.exp(-2 * m0 * l)
            # weight e^{-u} is implicit: integrand * e^{total l} on the Laguerre nodes
            k = wts[i] * math.exp(u[i]) / total
            acc += k * g
            var += k * k * gv
        return HValue(acc, comps, sym, mode, math.sqrt(var), m0, {"nodes": n_nodes, "n_paths": n_paths})
    raise ValueError(f"unknown mode {mode!r}")


def crosscheck_sturm(v: RadonPotential, hmax: float = 1e-3) -> tuple[float, float]:
    """``(sqrt(2/pi) H(V), phi_{2V}(0))``; the two agree for compactly supported ``V``."""
    h = h_of_v(v, "formula").h
    phi = solve_integrable_bvp(v.scaled(2.0), hmax=hmax)
    return SQRT_2_OVER_PI * h, float(phi(0.0))
