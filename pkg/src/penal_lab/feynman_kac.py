"""The normalisation ``Z_t^V(x) = E_x[exp(-1/2 int L^y_t V(dy))]``.

Three routes: a finite-volume Crank-Nicolson solver of ``dZ/dt = Z''/2 - V Z/2``
(also in radial Bessel form), a Monte Carlo estimator with occupation-band local times,
and the Laplace transform ``A(lam, x)`` used for the small-``lam`` Tauberian checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erfc, exp1

from . import kernels
from .errors import DomainTooNarrow, PoorFit, TailNotCovered, UnstableScheme
from .io import write_csv
from .potential import RegimeKind, RegimeTag, SignedPotential, require_valid

__all__ = [
    "ZSurface",
    "TauberianCheck",
    "DecayEstimate",
    "stretched_grid",
    "time_grid",
    "solve_pde_z",
    "estimate_z_mc",
    "laplace_tilde_A",
    "fit_decay",
    "apriori_bound",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


@dataclass(frozen=True, eq=False)
class ZSurface:
    """``Z`` on ``times x grid`` with the scheme parameters in ``meta``."""

    times: np.ndarray
    grid: np.ndarray
    values: np.ndarray
    meta: Mapping[str, Any] = field(default_factory=dict)

    def at(self, x: float) -> np.ndarray:
        """Time series at ``x`` (linear interpolation in space)."""
        g = self.grid
        i = int(np.clip(np.searchsorted(g, x) - 1, 0, len(g) - 2))
        w = (x - g[i]) / (g[i + 1] - g[i])
        return (1 - w) * self.values[:, i] + w * self.values[:, i + 1]

    def value(self, t: float, x: float) -> float:
        series = self.at(x)
        return float(np.interp(t, self.times, series))

    def to_csv(self, path: str | Path, xs: Sequence[float] | None = None) -> Path:
        xs = list(self.grid) if xs is None else list(xs)
        cols: dict[str, Any] = {"t": self.times}
        for x in xs:
            cols[f"Z(x={x:g})"] = self.at(x)
        return write_csv(path, cols)


@dataclass(frozen=True, eq=False)
class TauberianCheck:
    lambdas: np.ndarray
    x: np.ndarray
    A_tilde: np.ndarray
    A_tilde_prime: np.ndarray
    theta_sup: np.ndarray
    target: np.ndarray | None
    kappa: float
    tail: Mapping[str, Any] = field(default_factory=dict)

    def value(self, lam_index: int, x: float) -> tuple[float, float]:
        a = float(np.interp(x, self.x, self.A_tilde[lam_index]))
        d = float(np.interp(x, self.x, self.A_tilde_prime[lam_index]))
        return a, d

    def to_csv(self, path: str | Path) -> Path:
        rows: dict[str, list] = {"lambda": [], "x": [], "A_tilde": [], "A_tilde_prime": [], "theta_sup": []}
        for i, lam in enumerate(self.lambdas):
            for j, x in enumerate(self.x):
                rows["lambda"].append(lam)
                rows["x"].append(x)
                rows["A_tilde"].append(self.A_tilde[i, j])
                rows["A_tilde_prime"].append(self.A_tilde_prime[i, j])
                rows["theta_sup"].append(self.theta_sup[i])
        return write_csv(path, rows)


@dataclass(frozen=True)
class DecayEstimate:
    """Fitted decay law ``Z_t ~ c t^{-k} exp(-gamma t / 2)``.

    ``k`` and ``gamma`` come from an unconstrained fit over the window; ``constant``
    is extrapolated with the regime's exponent held fixed and a ``t^{-1/2}``
    correction term (polynomial regimes) or from the exponential fit (bilateral).
    """

    k: float
    gamma: float
    constant: float
    residuals: Mapping[str, float]
    log_rate_exponent: float | None = None

    def __post_init__(self) -> None:
        if self.k < -1e-9 or self.gamma < -1e-9 or not self.constant > 0:
            raise PoorFit(f"fit violates k, gamma >= 0 < constant: {self}")


# ---------------------------------------------------------------------------
# grids


def stretched_grid(core: tuple[float, float], half_width: float | tuple[float, float], dx: float,
                   growth: float = 1.02, dx_max: float = 2.0,
                   nodes: Sequence[float] = (), center: float = 0.0) -> np.ndarray:
    """Uniform spacing ``dx`` on ``core``, geometric growth outside, to ``center +- half_width``.

    Every entry of ``nodes`` inside the domain becomes a grid node.
    """
    lo_c, hi_c = core
    if isinstance(half_width, tuple):
        lo_d, hi_d = half_width
    else:
        lo_d, hi_d = center - half_width, center + half_width
    lo_c, hi_c = max(lo_c, lo_d), min(hi_c, hi_d)
    pts = sorted({lo_c, hi_c, *[float(p) for p in nodes if lo_c < p < hi_c]})
    inner = [np.array([pts[0]])]
    for a, b in zip(pts[:-1], pts[1:]):
        m = max(1, int(math.ceil((b - a) / dx - 1e-9)))
        inner.append(np.linspace(a, b, m + 1)[1:])
    core_pts = np.concatenate(inner)

    def outward(start: float, end: float, sign: int) -> np.ndarray:
        out, x, h = [], start, dx
        while sign * (end - x) > 1e-12:
            h = min(h * growth, dx_max)
            x = x + sign * h
            if sign * (x - end) > 0 or sign * (end - x) < 0.3 * h:
                x = end
            out.append(x)
        return np.array(out)

    left = outward(core_pts[0], lo_d, -1)[::-1]
    right = outward(core_pts[-1], hi_d, +1)
    g = np.concatenate([left, core_pts, right])
    extra = [float(p) for p in nodes if lo_d < p < hi_d and not lo_c <= p <= hi_c]
    if extra:
        g = np.unique(np.concatenate([g, extra]))
    return g


def time_grid(t_max: float, dt: float, growth: float | None = None, t_uniform: float = 1.0,
              dt_max: float = 5.0, include: Sequence[float] = ()) -> np.ndarray:
    """Step times: uniform ``dt`` up to ``t_uniform``, then growing by ``growth`` per step."""
    ts = [0.0]
    t, h = 0.0, dt
    req = sorted(x for x in include if 0 < x < t_max)
    while t < t_max - 1e-12:
        if growth is not None and t >= t_uniform:
            h = min(h * growth, dt_max)
        nt = min(t + h, t_max)
        for r in req:
            if t < r < nt - 1e-12:
                nt = r
                break
        t = nt
        ts.append(t)
    return np.array(ts)


# ---------------------------------------------------------------------------
# finite-volume operator


def _cell_integrals(fn, edges_lo: np.ndarray, x: np.ndarray, edges_hi: np.ndarray,
                    weight=None) -> np.ndarray:
    """``int V w`` over each cell split at its node (so node breakpoints are exact)."""
    total = np.zeros_like(x)
    for a, b in ((edges_lo, x), (x, edges_hi)):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = fn(pts.ravel()).reshape(pts.shape)
        if weight is not None:
            vals = vals * weight(pts)
        total += half * (vals @ _GL_W)
    return total


def _operator(v, grid: np.ndarray, radial_mu: float | None):
    """Cell volumes ``W``, interface conductances ``c`` and potential masses ``P``.

    The semi-discrete system is ``W dZ/dt = (K - P/2) Z`` with ``K`` the half-Laplacian
    built from ``c`` and zero flux at both ends.
    """
    x = grid
    h = np.diff(x)
    mids = 0.5 * (x[:-1] + x[1:])
    if radial_mu is None:
        lo = np.concatenate([[x[0]], mids])
        hi = np.concatenate([mids, [x[-1]]])
        W = hi - lo
        cond = 0.5 / h
        P = _cell_integrals(v.density_at, lo, x, hi)
        for a, m in v.atoms:
            i = int(np.argmin(np.abs(x - a)))
            if abs(x[i] - a) > 1e-9 * max(1.0, abs(a)):
                raise ValueError(f"atom at {a} is not a grid node")
            P[i] += m
    else:
        p = 2.0 * radial_mu + 1.0
        lo = np.concatenate([[0.0], mids])
        hi = np.concatenate([mids, [x[-1] + 0.5 * h[-1]]])
        W = (hi ** (p + 1) - lo ** (p + 1)) / (p + 1)
        cond = 0.5 * mids ** p / h
        P = _cell_integrals(v.density_at, lo, x, hi, weight=lambda y: np.abs(y) ** p)
    return W, cond, P


def _banded(W: np.ndarray, cond: np.ndarray, P: np.ndarray, theta_dt: float) -> np.ndarray:
    """Banded form of ``W - theta_dt * (K - P/2)``."""
    n = len(W)
    ab = np.zeros((3, n))
    diag = W + theta_dt * 0.5 * P
    diag[:-1] += theta_dt * cond
    diag[1:] += theta_dt * cond
    ab[1] = diag
    ab[0, 1:] = -theta_dt * cond
    ab[2, :-1] = -theta_dt * cond
    return ab


def _apply(W: np.ndarray, cond: np.ndarray, P: np.ndarray, z: np.ndarray, c: float) -> np.ndarray:
    """``(W + c (K - P/2)) z``."""
    flux = cond * np.diff(z)
    kz = np.zeros_like(z)
    kz[:-1] += flux
    kz[1:] -= flux
    return W * z + c * (kz - 0.5 * P * z)


def solve_pde_z(v, x_domain: tuple[float, float] | None = None, t_max: float = 1.0,
                dt: float = 1e-2, dx: float = 1e-2, *, times: Sequence[float] = (),
                dt_growth: float | None = None, dt_max: float = 5.0, growth: float = 1.02,
                dx_max: float = 2.0, core: tuple[float, float] | None = None,
                radial_mu: float | None = None, rannacher: int = 2,
                boundary_tol: float = 1e-6, store_every: int = 1) -> ZSurface:
    """Crank-Nicolson solve of ``Z_t = Z''/2 - V Z/2`` with ``Z(0, .) = 1``.

    The potential may be a :class:`RadonPotential` or a :class:`SignedPotential`.
    ``x_domain`` defaults to the support widened by ``8 sqrt(t_max)``; the spacing is
    ``dx`` on ``core`` (default: the support hull plus one unit) and grows geometrically
    outside.  With ``radial_mu`` the generator is
    ``d^2/2dx^2 + (2 mu + 1)/(2x) d/dx`` on ``x > 0`` with cells from ``0``.
    The first ``rannacher`` steps are replaced by pairs of backward-Euler half steps.
    """
    if dt <= 0 or dx <= 0 or t_max <= 0:
        raise ValueError("dt, dx and t_max must be positive")
    if not isinstance(v, SignedPotential):
        require_valid(v)
    sup = getattr(v, "support", None)
    nodes_req = list(v.breakpoints) + [a for a, _ in v.atoms]
    if sup is None:
        ref = (min(nodes_req), max(nodes_req)) if nodes_req else (0.0, 0.0)
    else:
        ref = sup
    spread = 8.0 * math.sqrt(t_max) + 5.0
    if radial_mu is None:
        if x_domain is None:
            x_domain = (ref[0] - spread, ref[1] + spread)
        if core is None:
            core = (max(ref[0] - 1.0, x_domain[0]), min(ref[1] + 1.0, x_domain[1]))
        grid = stretched_grid(core, (float(x_domain[0]), float(x_domain[1])), dx, growth, dx_max,
                              nodes_req)
    else:
        hi = x_domain[1] if x_domain is not None else spread
        core_hi = core[1] if core is not None else min(10.0, hi)
        n_core = int(round(core_hi / dx))
        inner = (np.arange(n_core) + 0.5) * dx
        outer = []
        x, h = inner[-1], dx
        while x < hi:
            h = min(h * growth, dx_max)
            x += h
            outer.append(x)
        grid = np.concatenate([inner, outer])
    W, cond, P = _operator(v, grid, radial_mu)
    ts = time_grid(t_max, dt, dt_growth, dt_max=dt_max, include=times)
    z = np.ones_like(grid)
    req_idx = {int(np.argmin(np.abs(ts - r))) for r in times}
    store_t, store_z, store_k = [0.0], [z.copy()], [0]
    step = 0
    for k in range(1, len(ts)):
        h = ts[k] - ts[k - 1]
        if step < rannacher:
            for _ in range(2):
                z = solve_banded((1, 1), _banded(W, cond, P, 0.5 * h), W * z)
        else:
            rhs = _apply(W, cond, P, z, 0.5 * h)
            z = solve_banded((1, 1), _banded(W, cond, P, 0.5 * h), rhs)
        step += 1
        if not np.all(np.isfinite(z)) or (not isinstance(v, SignedPotential) and np.any(z < -1e-12)):
            raise UnstableScheme(f"non-finite or negative solution at t={ts[k]}")
        if k % store_every == 0 or k == len(ts) - 1 or k in req_idx:
            store_t.append(ts[k])
            store_z.append(z.copy())
            store_k.append(k)
    values = np.array(store_z)
    times_arr = np.array(store_t)
    # boundary influence: the end cells must still follow the local law z' = -v z / 2,
    # advanced by the same one-step factors as the scheme so only spatial effects remain
    ends = [0, len(grid) - 1] if radial_mu is None else [len(grid) - 1]
    hs = np.diff(ts)
    for e in ends:
        c = 0.25 * P[e] / W[e]
        fac = (1.0 - c * hs) / (1.0 + c * hs)
        fac[:rannacher] = (1.0 + c * hs[:rannacher]) ** -2
        ref_curve = np.concatenate([[1.0], np.cumprod(fac)])[store_k]
        dev = float(np.max(np.abs(values[:, e] - ref_curve)))
        if dev > boundary_tol:
            raise DomainTooNarrow(f"boundary cell at x={grid[e]:g} moved by {dev:.2e}")
    meta = {"dt": dt, "dx": dx, "dt_growth": dt_growth, "domain": (float(grid[0]), float(grid[-1])),
            "n_nodes": len(grid), "n_steps": len(ts) - 1, "radial_mu": radial_mu,
            "rannacher": rannacher, "signed": isinstance(v, SignedPotential)}
    return ZSurface(times_arr, grid, values, meta)


# ---------------------------------------------------------------------------
# Monte Carlo


def density_table(v, lo: float, hi: float, dx: float = 1e-3) -> tuple[float, float, np.ndarray]:
    n = int(math.ceil((hi - lo) / dx)) + 1
    xs = lo + dx * np.arange(n)
    return lo, dx, np.asarray(v.density_at(xs), dtype=float)


def mc_log_weights(v, x: float, t: float, n_paths: int, dt: float, seed: int,
                   eps_c: float = 1.0, backend: str | None = None,
                   table_dx: float = 1e-3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-path ``-1/2 int L^y_t V(dy)`` with atom bands ``eps`` and ``2 eps``, and ``B_t``."""
    n_steps = max(1, int(round(t / dt)))
    dt = t / n_steps
    reach = 8.0 * math.sqrt(t) + 1.0
    lo, hi = x - reach, x + reach
    for a, _ in v.atoms:
        lo, hi = min(lo, a - 1.0), max(hi, a + 1.0)
    table = density_table(v, lo, hi, table_dx)
    eps = eps_c * math.sqrt(dt)
    return kernels.killed_bm(seed, n_paths, x, dt, n_steps, table, v.atom_locations,
                             v.atom_masses, eps, backend)


def estimate_z_mc(v, x: float, t: float, n_paths: int, dt: float, seed: int,
                  eps_c: float = 1.0, backend: str | None = None,
                  band_extrapolate: bool = False) -> tuple[float, float]:
    """Monte Carlo ``(mean, stderr)`` of ``Z_t^V(x)``.

    The density part is a trapezoid sum along each path; atoms use the band local time
    ``L^a_t ~ |{s <= t: |B_s - a| < eps}|/(2 eps)`` with ``eps = eps_c sqrt(dt)``.
    That estimator is biased by ``O(eps)`` near an atom.  With ``band_extrapolate``
    each path contributes ``2 w(eps) - w(2 eps)``, which cancels the leading term.
    Reproducible for a given ``(seed, n_paths, dt)`` whatever the thread count.
    """
    if n_paths < 1 or dt <= 0:
        raise ValueError("n_paths >= 1 and dt > 0 required")
    if t == 0:
        return 1.0, 0.0
    logw, logw2, _ = mc_log_weights(v, x, t, n_paths, dt, seed, eps_c, backend)
    w = np.exp(logw)
    if band_extrapolate and len(v.atoms):
        w = 2.0 * w - np.exp(logw2)
    mean = float(np.sum(w) / n_paths)
    sd = float(np.std(w, ddof=1)) if n_paths > 1 else 0.0
    return mean, sd / math.sqrt(n_paths)


# ---------------------------------------------------------------------------
# Laplace transform and Tauberian diagnostics


def _fit_tail(times: np.ndarray, vals: np.ndarray, window: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Per-node least squares ``Z ~ c/sqrt(t) + d/t`` on ``window``."""
    m = (times >= window[0]) & (times <= window[1])
    if m.sum() < 3:
        raise TailNotCovered("tail window holds fewer than three times")
    t = times[m]
    X = np.column_stack([t ** -0.5, 1.0 / t])
    coef, *_ = np.linalg.lstsq(X, vals[m], rcond=None)
    return coef[0], coef[1]


def laplace_tilde_A(zs: ZSurface, lambdas: Sequence[float], v=None, phi=None,
                    tail: str | None = "fit", tail_window: tuple[float, float] | None = None,
                    x_window: float | None = 10.0) -> TauberianCheck:
    """``A(lam, x) = int_0^inf e^{-lam t} Z_t(x) dt`` and ``A~ = sqrt(2 lam) A``.

    Beyond the last stored time the surface is extended by ``c(x)/sqrt(t) + d(x)/t``
    fitted on ``tail_window`` (default: the last half decade), unless
    ``t_max >= 10/min(lambdas)``; without a tail model that case raises TailNotCovered.
    ``theta = A~'' - V A~`` is evaluated on interior nodes (atom nodes excluded) with
    ``|x| <= x_window``.
    """
    lam = np.asarray(sorted(lambdas, reverse=True), dtype=float)
    t, Z = zs.times, zs.values
    T = float(t[-1])
    need_tail = T < 10.0 / lam.min()
    if need_tail and tail is None:
        raise TailNotCovered(f"t_max={T} < 10/lambda_min={10.0 / lam.min()}")
    coef = None
    if need_tail or tail == "fit":
        win = tail_window or (T / math.sqrt(10.0), T)
        coef = _fit_tail(t, Z, win)
    x = zs.grid
    A = np.empty((len(lam), len(x)))
    dts = np.diff(t)
    for i, l in enumerate(lam):
        e = np.exp(-l * t)
        f = e[:, None] * Z
        A[i] = np.sum(0.5 * dts[:, None] * (f[1:] + f[:-1]), axis=0)
        if coef is not None:
            z = l * T
            A[i] += coef[0] * math.sqrt(math.pi / l) * erfc(math.sqrt(z)) + coef[1] * exp1(z)
    At = np.sqrt(2.0 * lam)[:, None] * A
    # nonuniform central differences
    h = np.diff(x)
    Ap = np.empty_like(At)
    hm, hp = h[:-1], h[1:]
    Ap[:, 1:-1] = (At[:, 2:] * hm ** 2 - At[:, :-2] * hp ** 2 + At[:, 1:-1] * (hp ** 2 - hm ** 2)) / (hm * hp * (hm + hp))
    Ap[:, 0] = (At[:, 1] - At[:, 0]) / h[0]
    Ap[:, -1] = (At[:, -1] - At[:, -2]) / h[-1]
    theta_sup = np.zeros(len(lam))
    if v is not None:
        d2 = 2.0 * ((At[:, 2:] - At[:, 1:-1]) / hp - (At[:, 1:-1] - At[:, :-2]) / hm) / (hm + hp)
        xi = x[1:-1]
        mask = np.ones(len(xi), dtype=bool)
        if x_window is not None:
            mask &= np.abs(xi) <= x_window
        for a, _ in v.atoms:
            mask &= np.abs(xi - a) > 1.5 * np.max(h)
        for b in v.breakpoints:
            mask &= np.abs(xi - b) > 1e-12
        th = d2 - v.density_at(xi)[None, :] * At[:, 1:-1]
        theta_sup = np.max(np.abs(th[:, mask]), axis=1)
    target = None
    if phi is not None:
        target = math.sqrt(2.0 * math.pi) * phi(x)
    sel = np.abs(x) <= (x_window if x_window is not None else np.inf)
    kappa = float(np.max(At[:, sel] / (1.0 + np.abs(x[sel]))))
    tail_info = {"extrapolated": coef is not None, "t_max": T}
    return TauberianCheck(lam, x, At, Ap, theta_sup, target, kappa, tail_info)


# ---------------------------------------------------------------------------
# decay fits


def fit_decay(zs: ZSurface, x: float, regime: RegimeTag, window: tuple[float, float],
              max_rms: float = 0.05) -> DecayEstimate:
    """Least-squares decay law of ``t -> Z_t(x)`` on ``window`` (one decade or more)."""
    t0, t1 = window
    if not (t1 >= 10.0 * t0 * (1 - 1e-9)) and regime.kind not in (RegimeKind.BILATERAL, RegimeKind.SMALL_PHI):
        raise PoorFit("window must span at least one decade")
    series = zs.at(x)
    m = (zs.times >= t0) & (zs.times <= t1)
    if m.sum() < 4:
        raise PoorFit("fewer than four samples in the window")
    t, z = zs.times[m], series[m]
    if np.any(z <= 0):
        raise PoorFit("non-positive Z in the window")
    lz = np.log(z)
    if regime.kind is RegimeKind.SLOW_DECAY:
        y = np.log(-lz)
        X = np.column_stack([np.ones_like(t), np.log(t)])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        rms = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
        if rms > max_rms:
            raise PoorFit(f"rms {rms:.3e}")
        theta0 = 2.0 * math.exp(coef[0])
        # log Z ~ -theta0/2 t^{beta}; the log-rate exponent is -beta
        return DecayEstimate(0.0, 0.0, float(theta0), {"rms": rms, "beta": float(coef[1])},
                             log_rate_exponent=float(-coef[1]))
    if regime.kind is RegimeKind.BILATERAL:
        X = np.column_stack([np.ones_like(t), -0.5 * t])
        coef, *_ = np.linalg.lstsq(X, lz, rcond=None)
        rms = float(np.sqrt(np.mean((X @ coef - lz) ** 2)))
        if rms > max_rms:
            raise PoorFit(f"rms {rms:.3e}")
        return DecayEstimate(0.0, max(float(coef[1]), 0.0), float(math.exp(coef[0])), {"rms": rms})
    # polynomial regimes: free exponent, then the constant with k held at the tag value
    X = np.column_stack([np.ones_like(t), -np.log(t)])
    coef, *_ = np.linalg.lstsq(X, lz, rcond=None)
    rms = float(np.sqrt(np.mean((X @ coef - lz) ** 2)))
    if rms > max_rms:
        raise PoorFit(f"rms {rms:.3e}")
    k_free = float(coef[1])
    k_tag = regime.k if regime.k is not None else k_free
    if k_tag == 0.0 and abs(k_free) < 1e-12:
        const = float(np.exp(np.mean(lz)))
        corr = 0.0
    else:
        X2 = np.column_stack([np.ones_like(t), t ** -0.5])
        c2, *_ = np.linalg.lstsq(X2, lz + k_tag * np.log(t), rcond=None)
        const = float(math.exp(c2[0]))
        corr = float(c2[1])
    return DecayEstimate(max(k_free, 0.0), 0.0, const,
                         {"rms": rms, "k_free": k_free, "constant_free": float(math.exp(coef[0])),
                          "k_held": float(k_tag), "correction": corr})


def apriori_bound(zs: ZSurface, window: tuple[float, float] | None = None,
                  x_range: float | None = None) -> float:
    """``sup sqrt(1+t) Z_t(x)/(1+|x|)`` over the stored times in ``window``."""
    m = np.ones_like(zs.times, dtype=bool)
    if window is not None:
        m = (zs.times >= window[0]) & (zs.times <= window[1])
    xs = np.ones_like(zs.grid, dtype=bool) if x_range is None else np.abs(zs.grid) <= x_range
    vals = np.sqrt(1.0 + zs.times[m])[:, None] * zs.values[m][:, xs] / (1.0 + np.abs(zs.grid[xs]))[None, :]
    return float(np.max(vals))
