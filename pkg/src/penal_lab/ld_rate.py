"""Variational rate for the slowly decaying potential ``lam / (1 + |x|^alpha)``.

``I_eta(lam) = inf { int_0^1 psi'^2 + lam int_0^1 dt / (eta + psi^alpha) }`` over paths with
``psi(0) = 0``.  The minimiser satisfies ``psi'^2 = lam (f(psi) - f(C))`` with
``f(y) = 1/(eta + y^alpha)`` and ``C = psi(1)``, so ``t = H(C, psi(t))`` with
``H(C, x) = lam^{-1/2} int_0^x dy / sqrt(f(y) - f(C))``.  Every integral over ``[0, C]``
is taken in the variable ``y = C sin^2(th)``, which removes the square-root singularity
at ``y = C``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import BracketingFailed, InadmissibleParams, InversionFailed, MonotoneDrift, NotConverged
from .io import write_csv

__all__ = ["LDSolution", "solve_c_eta", "psi_profile", "rate_I", "rate_direct", "sweep_table"]

ETA_MAX = 1e8
_HALF_PI = 0.5 * math.pi


def _check(alpha: float, lam: float, eta: float) -> None:
    if not 0 < alpha < 2:
        raise InadmissibleParams(f"alpha must lie in (0, 2), got {alpha}")
    if not lam > 0:
        raise InadmissibleParams(f"lam must be positive, got {lam}")
    if not eta >= 0:
        raise InadmissibleParams(f"eta must be >= 0, got {eta}")
    if not math.isfinite(eta) or eta > ETA_MAX:
        raise MonotoneDrift("eta -> infinity: the minimiser collapses to the free problem")


def _gap_parts(alpha: float, eta: float, C: float, th: float) -> tuple[float, float]:
    """Numerator and denominator of ``(f(y) - f(C)) / cos^2(th)`` at ``y = C sin^2 th``.

    Split so that ``eta = 0, y = 0`` needs no division; no cancellation near ``y = C``.
    """
    s2 = math.sin(th) ** 2
    y = C * s2
    ya, ca = y ** alpha, C ** alpha
    # C^a - y^a = C^a (1 - s^{2a}); the last factor over cos^2 stays bounded as th -> pi/2
    c2 = math.cos(th) ** 2
    if c2 > 1e-3:
        ratio = (1.0 - s2 ** alpha) / c2
    else:
        # 1 - (1 - c2)^a = a c2 + a(1-a)/2 c2^2 + ...
        ratio = alpha + 0.5 * alpha * (1 - alpha) * c2 + alpha * (1 - alpha) * (2 - alpha) / 6 * c2 * c2
    return ca * ratio, (eta + ya) * (eta + ca)


def _gap(alpha: float, eta: float, C: float, th: float) -> float:
    num, den = _gap_parts(alpha, eta, C, th)
    return num / den


def _dH(alpha: float, lam: float, eta: float, C: float, th: float) -> float:
    # dy/dth / sqrt(f(y) - f(C)) / sqrt(lam); cos(th) cancels against the gap factor
    num, den = _gap_parts(alpha, eta, C, th)
    return 2.0 * C * math.sin(th) * math.sqrt(den / (lam * num))


def _H(alpha: float, lam: float, eta: float, C: float, th0: float, th1: float) -> float:
    # short sub-intervals near th = 0 trip quadpack's roundoff detector; the value is fine
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda s: _dH(alpha, lam, eta, C, s), th0, th1, epsabs=1e-15, epsrel=1e-13,
                      limit=200)
    return val


def endpoint_residual(alpha: float, lam: float, eta: float, C: float) -> float:
    """``H(C, C) - 1``."""
    return _H(alpha, lam, eta, C, 0.0, _HALF_PI) - 1.0


def solve_c_eta(alpha: float, lam: float, eta: float, tol: float = 1e-13) -> float:
    """Root ``C_eta > 0`` of ``H(C, C) = 1``."""
    _check(alpha, lam, eta)

    def g(logc: float) -> float:
        return endpoint_residual(alpha, lam, eta, math.exp(logc))

    lo, hi = -1.0, 1.0
    glo, ghi = g(lo), g(hi)
    for _ in range(200):
        if glo < 0 < ghi:
            break
        if glo >= 0:
            lo -= 2.0
            glo = g(lo)
        if ghi <= 0:
            hi += 2.0
            ghi = g(hi)
    else:
        raise BracketingFailed(f"no sign change of H(C, C) - 1 for alpha={alpha}, lam={lam}, eta={eta}")
    logc = brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(logc)


@dataclass(frozen=True, eq=False)
class LDSolution:
    alpha: float
    lam: float
    eta: float
    C: float
    t: np.ndarray
    psi: np.ndarray
    I: float
    euler_residual: float
    first_integral_residual: float
    endpoint_residual: float
    dpsi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    meta: Mapping[str, Any] = field(default_factory=dict)

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, {"t": self.t, "psi": self.psi})


def _invert(alpha: float, lam: float, eta: float, C: float, ts: np.ndarray) -> np.ndarray:
    """``th(t)`` with ``H(C, C sin^2 th) = t`` for sorted ``ts`` in ``[0, 1]``."""
    out = np.empty(len(ts))
    th_prev, h_prev = 0.0, 0.0
    for k, t in enumerate(ts):
        if t <= 0:
            out[k] = 0.0
            continue
        if t >= 1:
            out[k] = _HALF_PI
            th_prev, h_prev = _HALF_PI, 1.0
            continue
        lo, hi = th_prev, _HALF_PI

        def r(th: float) -> float:
            return h_prev + _H(alpha, lam, eta, C, th_prev, th) - t

        if h_prev >= t:
            # repeated abscissa (up to round-off)
            out[k] = th_prev
            continue
        try:
            th = brentq(r, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        except ValueError as exc:
            raise InversionFailed(f"cannot invert H at t={t}") from exc
        h_prev = h_prev + _H(alpha, lam, eta, C, th_prev, th)
        th_prev = th
        out[k] = th
    return out


def _psi_at(alpha: float, lam: float, eta: float, C: float, ts: np.ndarray) -> np.ndarray:
    # the Euler equation is autonomous with psi'(1) = 0, so psi(1 + s) = psi(1 - s)
    ts = np.asarray(ts, dtype=float)
    folded = np.where(ts > 1.0, 2.0 - ts, ts)
    order = np.argsort(folded, kind="stable")
    th = np.empty_like(folded)
    th[order] = _invert(alpha, lam, eta, C, folded[order])
    return C * np.sin(th) ** 2


def _fd_derivs(alpha: float, lam: float, eta: float, C: float, tc: np.ndarray
               ) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order first and sixth-order second central differences of ``psi``.

    Steps shrink with ``t`` since ``psi`` behaves like a power of ``t`` near the origin.
    """
    h1 = np.minimum(1e-3, 5e-3 * tc)
    h2 = np.minimum(1e-2, 5e-2 * tc)
    o1 = np.array([-2, -1, 1, 2])[None, :] * h1[:, None]
    o2 = np.array([-3, -2, -1, 0, 1, 2, 3])[None, :] * h2[:, None]
    pts = np.concatenate([(tc[:, None] + o1).ravel(), (tc[:, None] + o2).ravel()])
    vals = _psi_at(alpha, lam, eta, C, pts)
    n = len(tc)
    p1 = vals[: 4 * n].reshape(n, 4)
    p2 = vals[4 * n:].reshape(n, 7)
    d1 = (p1[:, 0] - 8 * p1[:, 1] + 8 * p1[:, 2] - p1[:, 3]) / (12 * h1)
    w2 = np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0
    d2 = p2 @ w2 / (h2 * h2)
    return d1, d2


def _rate_integrals(alpha: float, lam: float, eta: float, C: float) -> float:
    """``int psi'^2 dt + lam int dt/(eta + psi^alpha)`` as integrals over ``psi``."""

    def kin(th: float) -> float:
        # int sqrt(lam (f - fC)) dy
        s, c = math.sin(th), math.cos(th)
        return math.sqrt(lam * _gap(alpha, eta, C, th)) * c * c * 2.0 * C * s

    def pot(th: float) -> float:
        # lam f(y) dt = lam f(y) dH; written to avoid 0 * inf at eta = 0, th = 0
        s = math.sin(th)
        num, den = _gap_parts(alpha, eta, C, th)
        y = C * s * s
        ea = eta + y ** alpha
        if ea == 0.0:
            return 0.0
        return lam * 2.0 * C * s * math.sqrt(den / (lam * num)) / ea

    k, _ = quad(kin, 0.0, _HALF_PI, epsabs=0.0, epsrel=1e-13, limit=200)
    p, _ = quad(pot, 0.0, _HALF_PI, epsabs=0.0, epsrel=1e-13, limit=200)
    return k + p


def psi_profile(alpha: float, lam: float, eta: float, C: float | None = None, n: int = 101,
                check_from: float = 0.05) -> LDSolution:
    """Extremal profile on an ``n``-point grid of ``[0, 1]`` with its diagnostics.

    The Euler and first-integral residuals use finite differences of the inverted
    profile on ``[check_from, 1]``, away from the singular point ``t = 0``.  The Euler
    residual is ``|2 psi'' + alpha lam psi^{alpha-1}/(eta + psi^alpha)^2|``; the first-integral
    residual is relative to ``max(1, lam (f(psi) - f(C)))``.
    """
    _check(alpha, lam, eta)
    if C is None:
        C = solve_c_eta(alpha, lam, eta)
    t = np.linspace(0.0, 1.0, n)
    psi = _psi_at(alpha, lam, eta, C, t)
    tc = t[t >= check_from]
    d1, d2 = _fd_derivs(alpha, lam, eta, C, tc)
    pc = _psi_at(alpha, lam, eta, C, tc)
    rhs1 = lam * (1.0 / (eta + pc ** alpha) - 1.0 / (eta + C ** alpha))
    fi = float(np.max(np.abs(d1 * d1 - rhs1) / np.maximum(1.0, np.abs(rhs1))))
    eul = float(np.max(np.abs(2 * d2 + alpha * lam * pc ** (alpha - 1) / (eta + pc ** alpha) ** 2)))
    I = _rate_integrals(alpha, lam, eta, C)
    dpsi = np.full(n, np.nan)
    dpsi[t >= check_from] = d1
    return LDSolution(alpha, lam, eta, C, t, psi, I, eul, fi,
                      endpoint_residual(alpha, lam, eta, C), dpsi, {"check_from": check_from})


def rate_direct(alpha: float, lam: float, eta: float) -> float:
    """``I_eta(lam)`` by quadrature in the profile variable (also valid at ``eta = 0``)."""
    _check(alpha, lam, eta)
    return _rate_integrals(alpha, lam, eta, solve_c_eta(alpha, lam, eta))


def _richardson(etas: np.ndarray, vals: np.ndarray, powers: Sequence[float]) -> float:
    # fit vals = I0 + sum_j c_j eta^{p_j} exactly through the samples
    A = np.column_stack([np.ones_like(etas)] + [etas ** p for p in powers])
    coef = np.linalg.solve(A, vals)
    return float(coef[0])


def rate_I(alpha: float, lam: float, eta: float = 0.0, eta0: float = 1e-3, levels: int = 6,
           tol: float = 1e-7, method: str = "extrapolate") -> float:
    """``I_eta(lam)``; at ``eta = 0`` the limit of a decreasing ``eta`` sequence.

    ``I_eta - I_0`` expands in powers ``k p`` of ``eta`` with ``p = (2 - alpha)/(2 alpha)``
    (plus integer powers), obtained by rescaling the boundary layer ``psi^alpha ~ eta``.
    Values at ``eta0 4^{-j}`` are extrapolated through that expansion; two tables of
    different depth must agree to ``tol`` (relative) or :class:`NotConverged` is raised.
    The expansion converges slowly for ``alpha`` near 2; ``method="direct"`` then
    integrates the ``eta = 0`` problem in the profile variable instead.
    """
    _check(alpha, lam, eta)
    if eta > 0 or method == "direct":
        return rate_direct(alpha, lam, eta)
    # the natural eta scale is lam^{alpha/(2+alpha)}
    scale = lam ** (alpha / (2.0 + alpha))
    etas = eta0 * scale * 4.0 ** -np.arange(levels)
    vals = np.array([rate_direct(alpha, lam, float(e)) for e in etas])
    p = (2.0 - alpha) / (2.0 * alpha)
    powers = sorted({round(k * p, 12) for k in range(1, 8)} | {1.0, 2.0})
    powers = [q for q in powers if q > 0][: levels - 1]
    full = _richardson(etas, vals, powers)
    short = _richardson(etas[1:], vals[1:], powers[: levels - 2])
    if not abs(full - short) <= tol * abs(full):
        raise NotConverged(f"eta extrapolation unstable: {full} vs {short}")
    return full


def sweep_table(alphas: Sequence[float], lams: Sequence[float], etas: Sequence[float]) -> dict[str, np.ndarray]:
    """Columns ``alpha, lam, eta, C, I`` over the full parameter product."""
    rows = []
    for a in alphas:
        for l in lams:
            for e in etas:
                rows.append((a, l, e, solve_c_eta(a, l, e), rate_I(a, l, e)))
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    return {k: arr[:, i] for i, k in enumerate(("alpha", "lam", "eta", "C", "I"))}
