"""Sturm-Liouville profiles ``phi'' (dx) = phi(x) V(dx)`` for every regime.

All solves are linear shooting problems.  Between grid nodes the ODE is advanced by
fixed-step RK4 written as 2x2 transfer matrices; atoms enter as exact derivative jumps
at their nodes.  Integrable and unilateral problems are integrated inward from both
ends and matched at an interior anchor, which for a linear equation is a single 2x2
solve.  The bilateral problem bisects on the spectral shift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from . import kernels
from .errors import (
    DomainTooNarrow,
    NoSignChange,
    NonConvergedShooting,
    UnknownFormula,
)
from .io import read_csv, write_csv
from .potential import RadonPotential, RegimeKind, RegimeTag, classify_regime, require_valid

__all__ = [
    "SQRT_2_OVER_PI",
    "PhiProfile",
    "EigenResult",
    "CATALOGUE",
    "solve_integrable_bvp",
    "solve_unilateral_bvp",
    "solve_bilateral_eigen",
    "bilateral_mismatch",
    "solve_phi",
    "closed_form_oracle",
    "catalogue_profile",
    "catalogue_potential",
    "outside_indicator_gamma0",
    "right_inverse",
    "transfer_matrices",
    "sweep",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


# ---------------------------------------------------------------------------
# profile container


@dataclass(frozen=True, eq=False)
class PhiProfile:
    """Positive profile on a grid with one-sided derivatives at every node.

    ``asym`` describes the continuation beyond the grid on each side, as a tuple whose
    first entry is the kind: ``("affine", slope)``, ``("exp", rate)`` (decay away from
    the grid), ``("logquad", a, b)`` with ``(log phi)' = a + b x``, ``("flat",)`` or
    ``("power", p)`` with ``phi ~ x^p``.
    """

    grid: np.ndarray
    values: np.ndarray
    dphi_minus: np.ndarray
    dphi_plus: np.ndarray
    regime: RegimeTag
    gamma_shift: float = 0.0
    asym: Mapping[str, tuple] = field(default_factory=dict)
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("grid", "values", "dphi_minus", "dphi_plus"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def derivs(self) -> np.ndarray:
        """Right derivatives (equal to the left ones away from atoms)."""
        return self.dphi_plus

    # -- evaluation -------------------------------------------------------
    def _tail(self, x: np.ndarray, side: str) -> tuple[np.ndarray, np.ndarray]:
        i = 0 if side == "left" else -1
        x0, y0 = self.grid[i], self.values[i]
        d0 = self.dphi_minus[i] if side == "left" else self.dphi_plus[i]
        spec = self.asym.get(side, ("affine", d0))
        kind = spec[0]
        dx = x - x0
        if kind == "affine":
            slope = spec[1]
            return y0 + slope * dx, np.full_like(x, slope)
        if kind == "exp":
            rate = spec[1]
            y = y0 * np.exp(-rate * np.abs(dx))
            return y, (rate if side == "left" else -rate) * y
        if kind == "logquad":
            a, b = spec[1], spec[2]
            y = y0 * np.exp(a * dx + 0.5 * b * (x * x - x0 * x0))
            return y, (a + b * x) * y
        if kind == "flat":
            return np.full_like(x, y0), np.zeros_like(x)
        if kind == "power":
            p = spec[1]
            y = y0 * (x / x0) ** p
            return y, p * y / x
        raise ValueError(f"unknown asymptote kind {kind!r}")

    def evaluate(self, x: np.ndarray | float) -> tuple[np.ndarray, np.ndarray]:
        """``(phi(x), phi'(x))`` by cubic Hermite interpolation and the declared tails."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        g, y = self.grid, self.values
        i = np.clip(np.searchsorted(g, x, side="right") - 1, 0, len(g) - 2)
        h = g[i + 1] - g[i]
        t = (x - g[i]) / h
        m0, m1 = self.dphi_plus[i] * h, self.dphi_minus[i + 1] * h
        t2, t3 = t * t, t * t * t
        val = ((2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * m0
               + (-2 * t3 + 3 * t2) * y[i + 1] + (t3 - t2) * m1)
        der = ((6 * t2 - 6 * t) * y[i] + (3 * t2 - 4 * t + 1) * m0
               + (-6 * t2 + 6 * t) * y[i + 1] + (3 * t2 - 2 * t) * m1) / h
        lo, hi = x < g[0], x > g[-1]
        if lo.any():
            val[lo], der[lo] = self._tail(x[lo], "left")
        if hi.any():
            val[hi], der[hi] = self._tail(x[hi], "right")
        if scalar:
            return val[0], der[0]
        return val, der

    def __call__(self, x: np.ndarray | float) -> np.ndarray:
        return self.evaluate(x)[0]

    def drift(self, x: np.ndarray | float) -> np.ndarray:
        val, der = self.evaluate(x)
        return der / val

    def drift_tail(self) -> np.ndarray:
        """Beyond-grid drift ``c0 + c1 x + c2/(x - r)`` for both sides (kernel layout)."""
        out = np.zeros(8)
        for k, side in enumerate(("left", "right")):
            i = 0 if side == "left" else -1
            x0, y0 = self.grid[i], self.values[i]
            d0 = self.dphi_minus[i] if side == "left" else self.dphi_plus[i]
            spec = self.asym.get(side, ("affine", d0))
            o = 4 * k
            if spec[0] == "affine":
                if spec[1] == 0:
                    continue
                out[o + 2] = 1.0
                out[o + 3] = x0 - y0 / spec[1]
            elif spec[0] == "exp":
                out[o] = spec[1] if side == "left" else -spec[1]
            elif spec[0] == "logquad":
                out[o], out[o + 1] = spec[1], spec[2]
            elif spec[0] == "power":
                out[o + 2], out[o + 3] = spec[1], 0.0
        return out

    def drift_table(self, lo: float | None = None, hi: float | None = None,
                    dx: float = 1e-3) -> tuple[float, float, np.ndarray]:
        """Uniform table of ``phi'/phi`` for the Monte Carlo kernels."""
        lo = self.grid[0] if lo is None else lo
        hi = self.grid[-1] if hi is None else hi
        n = int(math.ceil((hi - lo) / dx)) + 1
        xs = lo + dx * np.arange(n)
        return lo, dx, self.drift(xs)

    # -- io -----------------------------------------------------------------
    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, {"x": self.grid, "phi": self.values, "dphi": self.dphi_plus})

    @classmethod
    def from_csv(cls, path: str | Path, regime: RegimeTag | None = None) -> "PhiProfile":
        d = read_csv(path)
        return cls(d["x"], d["phi"], d["dphi"], d["dphi"], regime or RegimeTag.integrable())

    def positive(self) -> bool:
        return bool(np.all(self.values > 0))

    def second_differences(self) -> np.ndarray:
        x, y = self.grid, self.values
        s = np.diff(y) / np.diff(x)
        return 2.0 * np.diff(s) / (x[2:] - x[:-2])


@dataclass(frozen=True, eq=False)
class EigenResult:
    gamma0: float
    mismatch_trace: list[tuple[float, float]]
    phi: PhiProfile
    bracket: tuple[float, float]


# ---------------------------------------------------------------------------
# transfer-matrix RK4


def transfer_matrices(h: np.ndarray, q0: np.ndarray, qm: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """RK4 step matrices for ``(y, y')' = [[0, 1], [q, 0]] (y, y')``."""
    n = len(h)
    eye = np.broadcast_to(np.eye(2), (n, 2, 2))

    def amat(q: np.ndarray) -> np.ndarray:
        a = np.zeros((n, 2, 2))
        a[:, 0, 1] = 1.0
        a[:, 1, 0] = q
        return a

    A0, Am, A1 = amat(q0), amat(qm), amat(q1)
    hh = h[:, None, None]
    K1 = A0
    K2 = Am @ (eye + 0.5 * hh * K1)
    K3 = Am @ (eye + 0.5 * hh * K2)
    K4 = A1 @ (eye + hh * K3)
    return eye + hh / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4)


def sweep(nodes: np.ndarray, q: Callable[[np.ndarray], np.ndarray], jumps: np.ndarray,
          y0: float, dy0: float, forward: bool = True
          ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate ``y'' = q y`` across ``nodes`` with derivative jumps ``jumps[i]*y``.

    Returns ``(y, y'(x-), y'(x+))`` at the nodes in increasing order.  A backward sweep
    starts from the last node; ``(y0, dy0)`` are then the value and right derivative
    there before the jump at that node, which is what the boundary conditions need.
    """
    x = nodes if forward else nodes[::-1]
    jmp = np.asarray(jumps, dtype=float)
    jmp = jmp if forward else -jmp[::-1]
    h = np.diff(x)
    delta = 1e-7 * np.abs(h)
    sgn = np.sign(h)
    q0 = q(x[:-1] + sgn * delta)
    qm = q(x[:-1] + 0.5 * h)
    q1 = q(x[1:] - sgn * delta)
    M = transfer_matrices(h, q0, qm, q1)
    val, dpre, dpost = kernels.propagate(M, jmp, y0, dy0)
    if forward:
        return val, dpre, dpost
    # reversed traversal: "before the jump" is the right-hand side
    return val[::-1], dpost[::-1], dpre[::-1]


def build_nodes(lo: float, hi: float, breaks: tuple[float, ...], hmax: float,
                coarse: tuple[float, float] | None = None, hmax_coarse: float = 0.05,
                extra: np.ndarray | None = None) -> np.ndarray:
    """Node grid with every breakpoint as a node and steps ``<= hmax``.

    Outside the interval ``coarse`` (when given) the step may grow to ``hmax_coarse``.
    """
    pts = {lo, hi, *[b for b in breaks if lo < b < hi]}
    if coarse is not None:
        pts |= {c for c in coarse if lo < c < hi}
    if extra is not None:
        pts |= {float(e) for e in extra if lo < e < hi}
    pts = sorted(pts)
    out = [np.array([pts[0]])]
    for a, b in zip(pts[:-1], pts[1:]):
        step = hmax
        if coarse is not None and (b <= coarse[0] or a >= coarse[1]):
            step = hmax_coarse
        m = max(1, int(math.ceil((b - a) / step - 1e-9)))
        out.append(np.linspace(a, b, m + 1)[1:])
    return np.concatenate(out)


def _jumps(nodes: np.ndarray, atoms: tuple[tuple[float, float], ...], factor: float = 1.0) -> np.ndarray:
    j = np.zeros_like(nodes)
    for a, m in atoms:
        i = int(np.argmin(np.abs(nodes - a)))
        if abs(nodes[i] - a) > 1e-12 * max(1.0, abs(a)):
            raise ValueError(f"atom at {a} is not a grid node")
        j[i] += factor * m
    return j


def _anchor_index(nodes: np.ndarray, target: float, jumps: np.ndarray) -> int:
    order = np.argsort(np.abs(nodes - target), kind="stable")
    for i in order:
        if 0 < i < len(nodes) - 1 and jumps[i] == 0.0:
            return int(i)
    raise NonConvergedShooting("no admissible anchor node")


def _match(left: tuple[np.ndarray, ...], right: tuple[np.ndarray, ...],
           left_bc: tuple[float, float], right_bc: tuple[float, float], ia: int
           ) -> tuple[float, float]:
    """Coefficients ``(cL, cR)`` gluing ``cL*wL + wL0`` and ``cR*wR + wR0`` at the anchor.

    ``left``/``right`` are ``(w1, w1', w2, w2')`` arrays of the two fundamental sweeps:
    the solution is ``p*w1 + d*w2`` with the known end slope ``d`` and unknown value ``p``.
    """
    w1, w1d, w2, w2d = left
    u1, u1d, u2, u2d = right
    dL, dR = left_bc[1], right_bc[1]
    A = np.array([[w1[-1], -u1[0]], [w1d[-1], -u1d[0]]])
    rhs = np.array([dR * u2[0] - dL * w2[-1], dR * u2d[0] - dL * w2d[-1]])
    if not np.all(np.isfinite(A)) or abs(np.linalg.det(A)) < 1e-300:
        raise NonConvergedShooting("anchor system is singular")
    pL, pR = np.linalg.solve(A, rhs)
    resid = A @ np.array([pL, pR]) - rhs
    if np.max(np.abs(resid)) > 1e-8 * max(1.0, np.max(np.abs(rhs))):
        raise NonConvergedShooting(f"anchor mismatch {np.max(np.abs(resid)):.3e}")
    return float(pL), float(pR)


def _two_sided(nodes: np.ndarray, q: Callable, jumps: np.ndarray, ia: int,
               left_slope: float, right_start: tuple[float, float] | None,
               right_slope: float | None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inward shooting with a fixed left slope and a fixed right slope or log-derivative.

    ``right_start = (1, k)`` prescribes the ratio ``phi'/phi = k`` at the right end
    (one free scale), otherwise ``right_slope`` fixes ``phi'`` (one free value).
    """
    xl, xr = nodes[: ia + 1], nodes[ia:]
    jl, jr = jumps[: ia + 1].copy(), jumps[ia:].copy()
    jl[-1] = 0.0
    jr[0] = 0.0
    w1 = sweep(xl, q, jl, 1.0, 0.0, True)
    w2 = sweep(xl, q, jl, 0.0, 1.0, True)
    if right_start is not None:
        u1 = sweep(xr, q, jr, right_start[0], right_start[1], False)
        u2 = (np.zeros_like(xr), np.zeros_like(xr), np.zeros_like(xr))
        dR = 0.0
    else:
        u1 = sweep(xr, q, jr, 1.0, 0.0, False)
        u2 = sweep(xr, q, jr, 0.0, 1.0, False)
        dR = right_slope
    # anchor derivatives: left sweep arrives with y'(c-), right sweep with y'(c+)
    left = (w1[0], w1[1], w2[0], w2[1])
    right = (u1[0], u1[2], u2[0], u2[2])
    pL, pR = _match(left, right, (0.0, left_slope), (0.0, dR), ia)
    vl = pL * w1[0] + left_slope * w2[0]
    dml = pL * w1[1] + left_slope * w2[1]
    dpl = pL * w1[2] + left_slope * w2[2]
    vr = pR * u1[0] + dR * u2[0]
    dmr = pR * u1[1] + dR * u2[1]
    dpr = pR * u1[2] + dR * u2[2]
    vals = np.concatenate([vl[:-1], vr])
    dm = np.concatenate([dml[:-1], dmr])
    dp = np.concatenate([dpl[:-1], dpr])
    # atom at the anchor is excluded, so both one-sided derivatives agree there
    return vals, dm, dp


# ---------------------------------------------------------------------------
# regime solvers


def _support_hull(v: RadonPotential) -> tuple[float, float]:
    if v.support is not None:
        return v.support
    pos = np.nonzero(v.density > 0)[0]
    lo = v.grid[pos[0]] if len(pos) else v.grid[0]
    hi = v.grid[pos[-1]] if len(pos) else v.grid[-1]
    if v.atoms:
        lo = min(lo, v.atom_locations.min())
        hi = max(hi, v.atom_locations.max())
    return float(lo), float(hi)


def solve_integrable_bvp(v: RadonPotential, domain: tuple[float, float] | None = None,
                         n: int | None = None, hmax: float = 1e-3,
                         margin: float = 1.0) -> PhiProfile:
    """``phi_V`` with asymptotic slopes ``-sqrt(2/pi)`` and ``+sqrt(2/pi)``.

    The domain must extend at least ``margin`` beyond the support of ``V`` when the
    support is compact; for non-compact integrable tails the affine conditions are
    imposed at the domain ends (truncation error of the order of the missing mass).
    ``n`` sets a minimum number of nodes.
    """
    tag = classify_regime(v)
    if tag.kind is not RegimeKind.INTEGRABLE:
        raise ValueError(f"potential is {tag.kind.value}, not integrable")
    s_lo, s_hi = _support_hull(v)
    if domain is None:
        domain = (s_lo - 10.0, s_hi + 10.0) if v.support is not None else (v.grid[0], v.grid[-1])
    lo, hi = map(float, domain)
    if v.support is not None and (lo > s_lo - margin or hi < s_hi + margin):
        raise DomainTooNarrow(f"domain {domain} must extend {margin} beyond support {v.support}")
    if n is not None:
        hmax = min(hmax, (hi - lo) / max(n - 1, 1))
    coarse = (s_lo, s_hi) if v.support is not None else None
    nodes = build_nodes(lo, hi, v.breakpoints + tuple(a for a, _ in v.atoms), hmax, coarse,
                        hmax_coarse=max(hmax, 0.05))
    jumps = _jumps(nodes, v.atoms)
    ia = _anchor_index(nodes, 0.5 * (s_lo + s_hi), jumps)
    vals, dm, dp = _two_sided(nodes, v.density_at, jumps, ia, -SQRT_2_OVER_PI, None, SQRT_2_OVER_PI)
    if not np.all(vals > 0):
        raise NonConvergedShooting("profile is not positive")
    return PhiProfile(nodes, vals, dm, dp, tag, 0.0,
                      {"left": ("affine", -SQRT_2_OVER_PI), "right": ("affine", SQRT_2_OVER_PI)},
                      {"anchor": float(nodes[ia])})


def _wkb_rate(q: Callable[[np.ndarray], np.ndarray], x: float, h: float = 1e-4) -> float:
    """Decay rate ``-phi'/phi ~ sqrt(q) + q'/(4 q)`` of the subdominant solution."""
    qx = float(q(np.array([x]))[0])
    if qx <= 0:
        raise NonConvergedShooting(f"potential must be positive at the right end, got {qx}")
    dq = float((q(np.array([x + h])) - q(np.array([x - h])))[0]) / (2 * h)
    return math.sqrt(qx) + dq / (4.0 * qx)


def _decay_end(q: Callable[[np.ndarray], np.ndarray], start: float, target: float = 28.0,
               x_cap: float = 1e4) -> float:
    """Smallest ``R`` with ``int_start^R sqrt(q) >= target`` (capped)."""
    x, acc, h = start, 0.0, 0.05
    while acc < target and x < x_cap:
        acc += h * math.sqrt(max(float(q(np.array([x + 0.5 * h]))[0]), 0.0))
        x += h
        h = min(h * 1.05, 1.0)
    return x


def _decay_bound(grid: np.ndarray, vals: np.ndarray, alpha: float) -> tuple[float, float]:
    """Constants with ``phi(x) <= C exp(-C' x^{1-alpha})`` on ``x >= 1``."""
    mask = grid >= 1.0
    if mask.sum() < 3:
        return float("nan"), float("nan")
    z = grid[mask] ** (1.0 - alpha)
    ly = np.log(vals[mask])
    slope = np.polyfit(z, ly, 1)[0]
    cp = max(-slope, 0.0)
    c = float(np.exp(np.max(ly + cp * z)))
    return c, float(cp)


def solve_unilateral_bvp(v: RadonPotential, domain: tuple[float, float] | None = None,
                         n: int | None = None, hmax: float = 1e-3) -> PhiProfile:
    """``phi_V`` with left slope ``-sqrt(2/pi)`` and ``phi(+inf) = 0``.

    The right end carries the WKB log-derivative of the decaying solution and is placed
    where the decay envelope ``exp(-int sqrt V)`` drops below ``1e-12``.
    """
    tag = classify_regime(v)
    if tag.kind is not RegimeKind.UNILATERAL:
        raise ValueError(f"potential is {tag.kind.value}, not unilateral")
    pos = np.nonzero(v.density > 0)[0]
    candidates = [float(v.grid[pos[0]])] if len(pos) else []
    candidates += [b for b in v.breakpoints] + [a for a, _ in v.atoms]
    start = min(candidates) if candidates else 0.0
    q = v.density_at
    if domain is None:
        domain = (start - 10.0, _decay_end(q, start))
    lo, hi = map(float, domain)
    if n is not None:
        hmax = min(hmax, (hi - lo) / max(n - 1, 1))
    nodes = build_nodes(lo, hi, v.breakpoints + tuple(a for a, _ in v.atoms), hmax,
                        coarse=(start, hi), hmax_coarse=max(hmax, 0.05))
    jumps = _jumps(nodes, v.atoms)
    ia = _anchor_index(nodes, start, jumps)
    kappa = _wkb_rate(q, hi)
    vals, dm, dp = _two_sided(nodes, q, jumps, ia, -SQRT_2_OVER_PI, (1.0, -kappa), None)
    if not np.all(vals > 0):
        raise NonConvergedShooting("profile is not positive")
    p = v.tails.right.power
    alpha = 0.0 if p is None or not math.isfinite(p) else p / 2.0
    c, cp = _decay_bound(nodes, vals, alpha)
    right_tail = ("exp", kappa)
    if p is not None and p < 0:
        # growing density V ~ x^{-p}: log-derivative tracks -sqrt(V)
        right_tail = ("logquad", 0.0, -kappa / hi) if p == -2 else ("exp", kappa)
    return PhiProfile(nodes, vals, dm, dp, tag, 0.0,
                      {"left": ("affine", -SQRT_2_OVER_PI), "right": right_tail},
                      {"anchor": float(nodes[ia]), "decay_bound": (c, cp, alpha), "kappa": kappa})


def right_inverse(v: RadonPotential, gamma: float) -> float:
    """``V^{-1}(gamma) = inf{t >= 0 : V(t) > gamma}`` for a right-continuous ``V``."""
    q = v.density_at
    xs = np.unique(np.concatenate([v.grid[v.grid >= 0], [b for b in v.breakpoints if b >= 0], [0.0]]))
    above = np.nonzero(q(xs) > gamma)[0]
    if len(above) == 0:
        return math.inf
    i = int(above[0])
    if i == 0:
        return 0.0
    a, b = float(xs[i - 1]), float(xs[i])
    for _ in range(200):
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        if float(q(np.array([m]))[0]) > gamma:
            b = m
        else:
            a = m
    return b


@dataclass(frozen=True)
class _Branches:
    xstar: float
    inner: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    outer: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    kappa: float
    mismatch: float


def _branches(v: RadonPotential, gamma: float, vbar: float, hmax: float) -> _Branches:
    xstar = right_inverse(v, gamma)
    if not math.isfinite(xstar):
        raise NoSignChange(f"V never exceeds gamma={gamma}")

    def q(x: np.ndarray) -> np.ndarray:
        return v.density_at(x) - gamma

    breaks = tuple(b for b in v.breakpoints if b > 0)
    if xstar > 0:
        nf = build_nodes(0.0, xstar, breaks, hmax)
        F, Fm, Fp = sweep(nf, q, np.zeros_like(nf), 1.0, 0.0, True)
        scale = F[-1]
        inner = (nf, F / scale, Fm / scale, Fp / scale)
        fprime = Fm[-1] / scale
    else:
        inner = (np.array([0.0]), np.array([1.0]), np.array([0.0]), np.array([0.0]))
        fprime = 0.0
    kappa_far = math.sqrt(max(vbar - gamma, 0.0))
    span = min(28.0 / max(kappa_far, 1e-12), 400.0)
    grid_end = max(float(v.grid[-1]), xstar)
    r = grid_end + span
    ng = build_nodes(xstar, r, breaks, hmax, coarse=(xstar, grid_end), hmax_coarse=min(0.01, 0.1 / max(kappa_far, 1.0)))
    kappa = math.sqrt(max(float(q(np.array([r]))[0]), 1e-300))
    G, Gm, Gp = sweep(ng, q, np.zeros_like(ng), 1.0, -kappa, False)
    scale = G[0]
    outer = (ng, G / scale, Gm / scale, Gp / scale)
    gprime = Gp[0] / scale
    return _Branches(xstar, inner, outer, kappa, fprime - gprime)


def bilateral_mismatch(v: RadonPotential, gamma: float, hmax: float = 1e-3) -> float:
    """``F'_gamma(V^{-1}(gamma)) - G'_gamma(V^{-1}(gamma))``; decreasing in ``gamma``."""
    vbar = float(v.tails.right.limit)
    return _branches(v, gamma, vbar, hmax).mismatch


def solve_bilateral_eigen(v: RadonPotential, bracket: tuple[float, float] | None = None,
                          tol: float = 1e-10, hmax: float = 1e-3, max_iter: int = 200) -> EigenResult:
    """Spectral shift ``gamma0`` gluing the Neumann and decaying branches."""
    tag = classify_regime(v)
    if tag.kind is not RegimeKind.BILATERAL:
        raise ValueError(f"potential is {tag.kind.value}, not bilateral")
    vlo = float(v.density_at(np.array([0.0]))[0])
    vbar = float(v.tails.right.limit)
    if bracket is None:
        bracket = (vlo, vbar)
    lo_v, hi_v = map(float, bracket)
    if not hi_v > lo_v:
        raise NoSignChange(f"empty bracket ({lo_v}, {hi_v}): V is constant")
    eps = 1e-6 * (hi_v - lo_v)
    a, b = lo_v + eps, hi_v - eps
    trace: list[tuple[float, float]] = []
    ma = _branches(v, a, vbar, hmax).mismatch
    mb = _branches(v, b, vbar, hmax).mismatch
    trace += [(a, ma), (b, mb)]
    if not (ma > 0 > mb or ma < 0 < mb):
        raise NoSignChange(f"mismatch has no sign change on [{a}, {b}]: {ma}, {mb}")
    br = None
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        br = _branches(v, m, vbar, hmax)
        trace.append((m, br.mismatch))
        if abs(br.mismatch) < tol or b - a < 4e-16 * max(1.0, abs(m)):
            break
        if (br.mismatch > 0) == (ma > 0):
            a, ma = m, br.mismatch
        else:
            b = m
    assert br is not None
    gamma0 = trace[-1][0]
    nf, F, Fm, Fp = br.inner
    ng, G, Gm, Gp = br.outer
    xs = np.concatenate([nf[:-1], ng]) if len(nf) > 1 else ng
    ys = np.concatenate([F[:-1], G]) if len(nf) > 1 else G
    dm = np.concatenate([Fm[:-1], Gm]) if len(nf) > 1 else Gm
    dp = np.concatenate([Fp[:-1], Gp]) if len(nf) > 1 else Gp
    if len(nf) > 1:
        # glue point: left derivative from F, right derivative from G
        k = len(nf) - 1
        dm[k] = Fm[-1]
        dp[k] = Gp[0]
    if xs[0] == 0.0:
        grid = np.concatenate([-xs[:0:-1], xs])
        vals = np.concatenate([ys[:0:-1], ys])
        dmin = np.concatenate([-dp[:0:-1], dm])
        dplus = np.concatenate([-dm[:0:-1], dp])
    else:
        grid = np.concatenate([-xs[::-1], xs])
        vals = np.concatenate([ys[::-1], ys])
        dmin = np.concatenate([-dp[::-1], dm])
        dplus = np.concatenate([-dm[::-1], dp])
    kappa = math.sqrt(vbar - gamma0)
    phi = PhiProfile(grid, vals, dmin, dplus, tag.with_rate(gamma0), gamma0,
                     {"left": ("exp", kappa), "right": ("exp", kappa)},
                     {"xstar": br.xstar, "v_min": vlo, "v_max": vbar})
    return EigenResult(gamma0, trace, phi, (lo_v, hi_v))


def solve_phi(v: RadonPotential, **kw: Any) -> PhiProfile:
    """Dispatch on the regime of ``v``."""
    tag = classify_regime(v)
    if tag.kind is RegimeKind.INTEGRABLE:
        return solve_integrable_bvp(v, **kw)
    if tag.kind is RegimeKind.UNILATERAL:
        return solve_unilateral_bvp(v, **kw)
    if tag.kind is RegimeKind.BILATERAL:
        return solve_bilateral_eigen(v, **kw).phi
    raise ValueError(f"no Sturm-Liouville solver for the {tag.kind.value} regime")


# ---------------------------------------------------------------------------
# closed forms


def outside_indicator_gamma0(a: float = 1.0, tol: float = 1e-15) -> float:
    """Root of ``sqrt(g) tan(a sqrt(g)) = sqrt(1-g)`` in ``]0, min(1, pi^2/(4a^2))[``."""
    hi = min(1.0, (math.pi / (2.0 * a)) ** 2)

    def f(g: float) -> float:
        return math.sqrt(g) * math.tan(a * math.sqrt(g)) - math.sqrt(1.0 - g)

    lo_, hi_ = 0.0, hi
    for _ in range(200):
        m = 0.5 * (lo_ + hi_)
        if hi_ - lo_ < tol:
            break
        if f(m) > 0:
            hi_ = m
        else:
            lo_ = m
    return 0.5 * (lo_ + hi_)


@dataclass(frozen=True)
class FormulaEntry:
    description: str
    params: Mapping[str, float]
    regime: str


CATALOGUE: dict[str, FormulaEntry] = {
    "ex3.1": FormulaEntry("phi = exp(-|x|^alpha / 2), alpha > 2", {"alpha": 3.0}, "small_phi"),
    "ex3.2": FormulaEntry("phi = exp(-x^2/2), V_phi = x^2 - 1 (Ornstein-Uhlenbeck)", {}, "small_phi"),
    "ex3.4": FormulaEntry("phi = exp(-|x|) capped by a tent on [-a, a]", {"a": 1.0}, "small_phi"),
    "ex3.5": FormulaEntry("phi = exp(-lam |x|), V_phi = lam^2 - 2 lam delta_0 (bang-bang)",
                          {"lam": 1.0}, "small_phi"),
    "ex4.1": FormulaEntry("V = gamma^2 1_[a,b]: cosh inside, affine outside",
                          {"gamma": 1.0, "a": -1.0, "b": 1.0}, "integrable"),
    "ex4.2": FormulaEntry("V = gamma^2 (delta_a + delta_b): flat inside, affine outside",
                          {"gamma": 1.0, "a": -1.0, "b": 1.0}, "integrable"),
    "ex5.1": FormulaEntry("V = lam^2 1_[0,inf): exponential right branch", {"lam": 1.0}, "unilateral"),
    "ex5.2": FormulaEntry("V = (y^2 - 1) 1_{y >= 1}: Gaussian right branch", {}, "unilateral"),
    "ex8.1": FormulaEntry("V = 1_{|x| > a}: cos inside, exp outside, shift gamma0",
                          {"a": 1.0}, "bilateral"),
}


def _params(fid: str, params: Mapping[str, float] | None) -> dict[str, float]:
    if fid not in CATALOGUE:
        raise UnknownFormula(fid)
    p = dict(CATALOGUE[fid].params)
    if params:
        unknown = set(params) - set(p)
        if unknown:
            raise ValueError(f"{fid}: unknown parameters {sorted(unknown)}")
        p.update({k: float(val) for k, val in params.items()})
    return p


def _closed(fid: str, p: Mapping[str, float], x: np.ndarray) -> dict[str, np.ndarray]:
    """phi, right and left derivatives and the (signed) potential density."""
    s = SQRT_2_OVER_PI
    ax = np.abs(x)
    sg = np.where(x >= 0, 1.0, -1.0)
    sg_left = np.where(x > 0, 1.0, -1.0)
    if fid == "ex3.1":
        al = p["alpha"]
        if not al > 2:
            raise ValueError("ex3.1 needs alpha > 2")
        phi = np.exp(-0.5 * ax ** al)
        d = -0.5 * al * ax ** (al - 1) * np.sign(x) * phi
        dens = (0.5 * al) ** 2 * ax ** (2 * al - 2) - 0.5 * al * (al - 1) * ax ** (al - 2)
        return {"phi": phi, "dphi": d, "dphi_left": d, "density": dens}
    if fid == "ex3.2":
        phi = np.exp(-0.5 * x * x)
        return {"phi": phi, "dphi": -x * phi, "dphi_left": -x * phi, "density": x * x - 1.0}
    if fid == "ex3.4":
        a = p["a"]
        inside = ax <= a
        phi = np.where(inside, math.exp(-a) * (1.0 + a - ax), np.exp(-ax))
        mag = np.where(inside, math.exp(-a), np.exp(-ax))
        return {"phi": phi, "dphi": -sg * mag, "dphi_left": -sg_left * mag,
                "density": np.where(ax > a, 1.0, 0.0)}
    if fid == "ex3.5":
        lam = p["lam"]
        phi = np.exp(-lam * ax)
        return {"phi": phi, "dphi": -lam * sg * phi, "dphi_left": -lam * sg_left * phi,
                "density": np.full_like(x, lam * lam)}
    if fid == "ex4.1":
        g, a, b = p["gamma"], p["a"], p["b"]
        if not a < b:
            raise ValueError("ex4.1 needs a < b")
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        cap = 1.0 / (g * math.tanh(g * half))
        inner = s * np.cosh(g * (x - mid)) / (g * math.sinh(g * half))
        dinner = s * np.sinh(g * (x - mid)) / math.sinh(g * half)
        phi = np.where(x > b, s * (cap + x - b), np.where(x < a, s * (cap + a - x), inner))
        d = np.where(x >= b, s, np.where(x < a, -s, dinner))
        dl = np.where(x > b, s, np.where(x <= a, -s, dinner))
        return {"phi": phi, "dphi": d, "dphi_left": dl,
                "density": np.where((x >= a) & (x <= b), g * g, 0.0)}
    if fid == "ex4.2":
        g, a, b = p["gamma"], p["a"], p["b"]
        base = 1.0 / (g * g)
        phi = s * np.where(x > b, base + x - b, np.where(x < a, base + a - x, base))
        d = s * np.where(x >= b, 1.0, np.where(x < a, -1.0, 0.0))
        dl = s * np.where(x > b, 1.0, np.where(x <= a, -1.0, 0.0))
        return {"phi": phi, "dphi": d, "dphi_left": dl, "density": np.zeros_like(x)}
    if fid == "ex5.1":
        lam = p["lam"]
        pos = x >= 0
        phi = np.where(pos, s / lam * np.exp(-lam * np.where(pos, x, 0.0)), s * (1.0 / lam - x))
        d = np.where(pos, -s * np.exp(-lam * np.where(pos, x, 0.0)), -s)
        return {"phi": phi, "dphi": d, "dphi_left": d, "density": np.where(pos, lam * lam, 0.0)}
    if fid == "ex5.2":
        right = x >= 1.0
        xr = np.where(right, x, 1.0)
        phi = np.where(right, s * math.exp(0.5) * np.exp(-0.5 * xr * xr), s * (2.0 - x))
        d = np.where(right, -xr * s * math.exp(0.5) * np.exp(-0.5 * xr * xr), -s)
        return {"phi": phi, "dphi": d, "dphi_left": d, "density": np.where(right, x * x - 1.0, 0.0)}
    if fid == "ex8.1":
        a = p["a"]
        g0 = outside_indicator_gamma0(a)
        r, k = math.sqrt(g0), math.sqrt(1.0 - g0)
        inside = ax <= a
        phi = np.where(inside, np.cos(r * x) / math.cos(r * a), np.exp(-k * (ax - a)))
        d = np.where(inside, -r * np.sin(r * x) / math.cos(r * a), -k * np.sign(x) * np.exp(-k * (ax - a)))
        return {"phi": phi, "dphi": d, "dphi_left": d, "density": np.where(ax >= a, 1.0, 0.0),
                "gamma0": np.full_like(x, g0)}
    raise UnknownFormula(fid)


def closed_form_oracle(formula_id: str, params: Mapping[str, float] | None, x: np.ndarray | float,
                       what: str = "phi") -> np.ndarray | float:
    """Exact value of a catalogued closed form.

    ``what`` selects ``"phi"``, ``"dphi"`` (right derivative), ``"dphi_left"`` or
    ``"density"`` (density of ``V``, or of ``V_phi`` for the section-3 profiles).
    """
    p = _params(formula_id, params)
    xa = np.asarray(x, dtype=float)
    out = _closed(formula_id, p, np.atleast_1d(xa))
    if what not in out:
        raise ValueError(f"{formula_id} has no {what!r}; choose from {sorted(out)}")
    res = out[what]
    return float(res[0]) if xa.ndim == 0 else res


def catalogue_atoms(formula_id: str, params: Mapping[str, float] | None = None) -> list[tuple[float, float]]:
    """Atoms of ``V`` (or ``V_phi``) for a catalogued example."""
    p = _params(formula_id, params)
    if formula_id == "ex3.4":
        return [(0.0, -2.0 / (1.0 + p["a"]))]
    if formula_id == "ex3.5":
        return [(0.0, -2.0 * p["lam"])]
    if formula_id == "ex4.2":
        g2 = p["gamma"] ** 2
        return [(p["a"], g2), (p["b"], g2)]
    return []


def catalogue_potential(formula_id: str, params: Mapping[str, float] | None = None) -> RadonPotential:
    """The positive potential of an integrable, unilateral or bilateral example."""
    from .potential import _FORMULA_FACTORIES

    p = _params(formula_id, params)
    if CATALOGUE[formula_id].regime == "small_phi":
        raise ValueError(f"{formula_id} defines a signed potential; use catalogue_profile")
    return _FORMULA_FACTORIES[formula_id](**p)


def catalogue_profile(formula_id: str, params: Mapping[str, float] | None = None,
                      grid: np.ndarray | None = None) -> PhiProfile:
    """Closed-form profile sampled on ``grid`` (kinks are added as nodes)."""
    p = _params(formula_id, params)
    entry = CATALOGUE[formula_id]
    if grid is None:
        grid = np.linspace(-10.0, 10.0, 20001)
    kinks = [a for a, _ in catalogue_atoms(formula_id, p)]
    for key in ("a", "b"):
        if key in p:
            kinks += [p[key]] + ([-p[key]] if formula_id in ("ex3.4", "ex8.1") else [])
    if formula_id in ("ex5.2",):
        kinks.append(1.0)
    if formula_id == "ex5.1":
        kinks.append(0.0)
    g = np.unique(np.concatenate([np.asarray(grid, float), [k for k in kinks if grid[0] < k < grid[-1]]]))
    c = _closed(formula_id, p, g)
    s = SQRT_2_OVER_PI
    gamma0 = float(c["gamma0"][0]) if "gamma0" in c else 0.0
    if entry.regime == "small_phi":
        tag = RegimeTag.small_phi()
        if formula_id == "ex3.2":
            asym = {"left": ("logquad", 0.0, -1.0), "right": ("logquad", 0.0, -1.0)}
        elif formula_id == "ex3.1":
            asym = {}
        else:
            lam = p.get("lam", 1.0)
            asym = {"left": ("exp", lam), "right": ("exp", lam)}
    elif entry.regime == "integrable":
        tag = RegimeTag.integrable()
        asym = {"left": ("affine", -s), "right": ("affine", s)}
    elif entry.regime == "unilateral":
        tag = RegimeTag.unilateral()
        right = ("exp", p["lam"]) if formula_id == "ex5.1" else ("logquad", 0.0, -1.0)
        asym = {"left": ("affine", -s), "right": right}
    else:
        tag = RegimeTag.bilateral(gamma0)
        k = math.sqrt(1.0 - gamma0)
        asym = {"left": ("exp", k), "right": ("exp", k)}
    return PhiProfile(g, c["phi"], c["dphi_left"], c["dphi"], tag, gamma0, asym,
                      {"formula_id": formula_id, "params": p})
