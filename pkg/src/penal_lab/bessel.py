"""The critical potential ``lam / (theta + x^2)`` seen through Bessel processes.

``n_mu = (-mu + sqrt(mu^2 + lam)) / 2`` sets the polynomial decay ``t^{-n_mu}``.
This module evaluates the hypergeometric ground state ``phi^{(mu)}_lam``, the limiting
gamma-ratio constant, and checks both limits by Monte Carlo (``theta = 0``) and by the
radial heat equation (``theta > 0``).  It also samples squared Bessel processes exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import gammaln, xlogy

from . import kernels
from .errors import InadmissibleParams, SeriesNotConverged
from .io import write_csv
from .paths import PathBundle

__all__ = [
    "BesselParams",
    "HypergeomProfile",
    "n_mu",
    "k_mu",
    "phi_hypergeom",
    "limit_constant",
    "verify_theorem1",
    "verify_theorem2",
    "sample_besq",
    "drift_bound_h",
    "sandwich_check",
    "exact_route_value",
]


@dataclass(frozen=True)
class BesselParams:
    """Index ``mu > -1`` (dimension ``2(mu + 1)``), coupling ``lam`` and shift ``theta``."""

    mu: float
    lam: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not self.mu > -1:
            raise InadmissibleParams(f"mu must exceed -1, got {self.mu}")
        if not self.lam > 0:
            raise InadmissibleParams(f"lam must be positive, got {self.lam}")
        if not self.theta >= 0:
            raise InadmissibleParams(f"theta must be >= 0, got {self.theta}")

    @property
    def dimension(self) -> float:
        return 2.0 * (self.mu + 1.0)

    @property
    def n(self) -> float:
        return n_mu(self)

    @property
    def nu(self) -> float:
        return math.sqrt(self.mu ** 2 + self.lam)

    @property
    def admissible(self) -> bool:
        """Whether ``lam < 8 mu^2 + 6 mu + 1`` (required for the ``theta > 0`` limit)."""
        return self.mu >= -0.5 and self.lam < 8 * self.mu ** 2 + 6 * self.mu + 1


def n_mu(params: BesselParams) -> float:
    mu, lam = params.mu, params.lam
    return 0.5 * (-mu + math.sqrt(mu * mu + lam))


def _is_integer(n: float, tol: float = 1e-12) -> bool:
    return abs(n - round(n)) < tol


def k_mu(params: BesselParams) -> float:
    """Normalisation making ``phi(x) ~ x^{2 n_mu}`` at infinity; equals ``phi(0)``."""
    mu, n = params.mu, params.n
    return math.exp(gammaln(mu + n) - gammaln(mu + 2 * n) + gammaln(mu + n + 1) - gammaln(mu + 1))


def limit_constant(params: BesselParams) -> float:
    """``2^{-n} Gamma(mu + n + 1) / Gamma(mu + 2n + 1)``."""
    mu, n = params.mu, params.n
    if n == 0.0:
        return 1.0
    return math.exp(-n * math.log(2.0) + gammaln(mu + n + 1) - gammaln(mu + 2 * n + 1))


# ---------------------------------------------------------------------------
# hypergeometric ground state


@dataclass(frozen=True, eq=False)
class HypergeomProfile:
    """``phi^{(mu)}_lam`` with its first two derivatives on ``grid``."""

    params: BesselParams
    branch: str
    coeff_count: int
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    second: np.ndarray
    k_mu: float

    def log_slope(self) -> np.ndarray:
        """``x phi'(x) / phi(x)``."""
        return self.grid * self.derivs / self.values

    def ode_residual(self) -> np.ndarray:
        """Relative defect of ``phi''/2 + (2mu+1) phi'/(2x) - lam phi / (2(1+x^2))``."""
        x, mu, lam = self.grid, self.params.mu, self.params.lam
        with np.errstate(divide="ignore", invalid="ignore"):
            first = np.where(x > 0, (2 * mu + 1) / (2 * x) * self.derivs, (2 * mu + 1) / 2 * self.second)
        res = 0.5 * self.second + first - 0.5 * lam * self.values / (1 + x * x)
        return res / self.values

    def rho(self) -> float:
        """Smallest ``rho`` with ``2n - rho/(1+x^2) <= x phi'/phi`` on the grid."""
        gap = (2 * self.params.n - self.log_slope()) * (1 + self.grid ** 2)
        return float(max(np.max(gap), 0.0))

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, {"x": self.grid, "phi": self.values, "dphi": self.derivs})


def _poly_branch(params: BesselParams, x: np.ndarray):
    mu, n = params.mu, int(round(params.n))
    a = [1.0]
    for k in range(n):
        a.append(a[-1] * (n + mu + k) * (n - k) / ((mu + 1 + k) * (k + 1)))
    a = np.array(a)
    x2 = x * x
    val = np.polynomial.polynomial.polyval(x2, a)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    for kk in range(1, n + 1):
        d1 += 2 * kk * a[kk] * x ** (2 * kk - 1)
        d2 += 2 * kk * (2 * kk - 1) * a[kk] * x ** (2 * kk - 2)
    return val, d1, d2, n + 1


def _series_branch(params: BesselParams, x: np.ndarray, tol: float, max_terms: int):
    mu, n = params.mu, params.n
    a, b, g = n + mu, mu + 1 + n, mu + 1
    z = x * x / (1 + x * x)
    F = np.ones_like(z)
    # at z = 0 only the first coefficients contribute to F' and F''
    F1 = np.full_like(z, a * b / g)
    F2 = np.full_like(z, a * (a + 1) * b * (b + 1) / (g * (g + 1)))
    pos = np.nonzero(z > 0)[0]
    F1[pos] = 0.0
    F2[pos] = 0.0
    term = np.ones(len(pos))  # c_k z^k at the last summed k
    active = np.arange(len(pos))
    k = 0
    block = 64
    while len(active):
        if k >= max_terms:
            raise SeriesNotConverged(f"hypergeometric series needs more than {max_terms} terms "
                                     f"at x = {float(np.max(x[pos[active]])):g}")
        blk = int(min(block, max_terms - k, max(64, 4_000_000 // len(active))))
        ks = k + np.arange(blk, dtype=float)  # ratio c_{k+1}/c_k for k in ks
        ratio = (a + ks) * (b + ks) / ((g + ks) * (ks + 1))
        zi = z[pos[active]]
        terms = term[active, None] * np.cumprod(ratio[None, :] * zi[:, None], axis=1)
        kk = ks + 1  # index of each new term
        F[pos[active]] += terms.sum(axis=1)
        F1[pos[active]] += (terms * kk).sum(axis=1) / zi
        F2[pos[active]] += (terms * (kk * (kk - 1))).sum(axis=1) / (zi * zi)
        term[active] = terms[:, -1]
        k += blk
        last = terms[:, -1]
        t2 = last * k * (k - 1) / (zi * zi)
        done = (np.abs(last) < tol * np.abs(F[pos[active]])) & \
               (np.abs(t2) < tol * np.abs(F2[pos[active]]) + 1e-300)
        active = active[~done]
        block *= 2
    s = 1 + x * x
    gx = s ** (-a)
    g1 = -2 * a * x * s ** (-a - 1)
    g2 = -2 * a * s ** (-a - 1) + 4 * a * (a + 1) * x * x * s ** (-a - 2)
    z1 = 2 * x / s ** 2
    z2 = (2 - 6 * x * x) / s ** 3
    val = gx * F
    d1 = g1 * F + gx * F1 * z1
    d2 = g2 * F + 2 * g1 * F1 * z1 + gx * (F2 * z1 * z1 + F1 * z2)
    return val, d1, d2, k


def phi_hypergeom(params: BesselParams, grid: Sequence[float] | np.ndarray,
                  branch: str | None = None, tol: float = 1e-14,
                  max_terms: int = 100_000_000) -> HypergeomProfile:
    """Ground state of ``phi''/2 + (2mu+1)phi'/(2x) = lam phi / (2(1 + x^2))``.

    Integer ``n_mu`` gives a polynomial of degree ``2 n_mu``; otherwise the series
    in ``x^2/(1+x^2)`` is summed until the next term drops below ``tol`` times the
    partial sum.  ``theta`` is ignored: the profile is for ``theta = 1`` and callers
    rescale by ``x / sqrt(theta)``.  ``branch`` forces ``"polynomial"`` or ``"series"``.
    """
    x = np.abs(np.asarray(grid, dtype=float))
    if branch is None:
        branch = "polynomial" if _is_integer(params.n) else "series"
    if branch == "polynomial":
        if not _is_integer(params.n):
            raise ValueError(f"n_mu = {params.n} is not an integer")
        val, d1, d2, count = _poly_branch(params, x)
    elif branch == "series":
        val, d1, d2, count = _series_branch(params, x, tol, max_terms)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    k = k_mu(params)
    return HypergeomProfile(params, branch, int(count), x, k * val, k * d1, k * d2, k)


def drift_bound_h(params: BesselParams, grid: Sequence[float] | np.ndarray) -> tuple[np.ndarray, float, float]:
    """``h = 2 x phi'/phi + 2(mu + 1)`` on ``grid`` with its bounds ``2(mu+1)``, ``2(2n+mu+1)``."""
    prof = phi_hypergeom(params, grid)
    mu, n = params.mu, params.n
    return 2 * prof.log_slope() + 2 * (mu + 1), 2 * (mu + 1), 2 * (2 * n + mu + 1)


# ---------------------------------------------------------------------------
# Limit checks


@dataclass(frozen=True, eq=False)
class LimitReport:
    """Rows of ``t``, scaled estimate ``t^n E[...]``, its stderr and the limit target."""

    t: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    target: float
    extra: Mapping[str, np.ndarray] = field(default_factory=dict)
    meta: Mapping[str, Any] = field(default_factory=dict)

    def z_scores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.estimate - self.target) / self.stderr

    def relative_error(self) -> np.ndarray:
        return np.abs(self.estimate - self.target) / abs(self.target)

    def to_csv(self, path: str | Path) -> Path:
        cols = {"t": self.t, "estimate": self.estimate, "stderr": self.stderr,
                "target": np.full(len(self.t), self.target)}
        cols.update(self.extra)
        return write_csv(path, cols)


def exact_route_value(params: BesselParams, x: float, t: float, terms: int = 400) -> float:
    """``x^{2n} E^nu_{x/sqrt t}[R_1^{-2n}]`` as a Poisson mixture of gamma moments.

    ``R_1^2`` is noncentral chi-square with ``2 nu + 2`` degrees of freedom and
    noncentrality ``x^2/t``; this is the finite-``t`` value of ``t^n E^mu_x[...]``.
    """
    n, nu = params.n, params.nu
    nc = x * x / t
    j = np.arange(terms)
    logp = xlogy(j, 0.5 * nc) - 0.5 * nc - gammaln(j + 1)
    k = nu + 1 + j
    mom = np.exp(-n * math.log(2.0) + gammaln(k - n) - gammaln(k))
    return float(x ** (2 * n) * np.sum(np.exp(logp) * mom))


def verify_theorem1(params: BesselParams, x: float, t_list: Sequence[float], n_paths: int,
                    seed: int, h_rel: float = 0.01, dt_max: float = 0.05,
                    backend: str | None = None) -> LimitReport:
    """``t^n E^mu_x[exp(-lam/2 int_0^t ds/R_s^2)]`` by simulation, against ``x^{2n} C``.

    Two routes: Bessel paths with step ``min(h_rel R^2, dt_max)`` (integral killed at
    ``50/lam``, weight recorded as zero), and exact sampling of ``R_1^2`` under the index
    ``nu = sqrt(mu^2 + lam)`` started at ``x/sqrt(t)``.  Both are in ``extra``.
    """
    if params.theta != 0:
        raise InadmissibleParams("verify_theorem1 needs theta = 0")
    if x <= 0:
        raise ValueError("x must be positive")
    n, mu, lam = params.n, params.mu, params.lam
    d = params.dimension
    dim = int(round(d)) if abs(d - round(d)) < 1e-12 and 1 <= round(d) <= 3 else 0
    target = x ** (2 * n) * limit_constant(params)
    est, se, ex, exse, exv = [], [], [], [], []
    for i, t in enumerate(t_list):
        integral, _ = kernels.bessel_integral(seed + i, n_paths, x, float(t), dim, mu, h_rel,
                                              dt_max, 50.0 / lam, backend=backend)
        w = np.where(np.isfinite(integral), np.exp(-0.5 * lam * integral), 0.0)
        scale = float(t) ** n
        est.append(scale * w.mean())
        se.append(scale * w.std(ddof=1) / math.sqrt(n_paths))
        rng = np.random.Generator(np.random.Philox(key=int(seed) + 7919 * (i + 1)))
        y = rng.noncentral_chisquare(2 * params.nu + 2, x * x / float(t), size=n_paths)
        e = x ** (2 * n) * y ** (-n)
        ex.append(e.mean())
        exse.append(e.std(ddof=1) / math.sqrt(n_paths))
        exv.append(exact_route_value(params, x, float(t)))
    return LimitReport(np.asarray(t_list, float), np.array(est), np.array(se), target,
                       {"exact_route": np.array(ex), "exact_stderr": np.array(exse),
                        "exact_value": np.array(exv)},
                       {"dim": dim, "h_rel": h_rel, "dt_max": dt_max, "n_paths": n_paths, "seed": seed})


def verify_theorem2(params: BesselParams, x: float, t_list: Sequence[float],
                    override: bool = False, dx: float = 0.01, dt: float = 0.01,
                    dt_growth: float = 1.02, dt_max: float = 1.0, r_max: float | None = None,
                    boundary_tol: float = 1e-4) -> LimitReport:
    """``t^n psi(t, x)`` from the radial heat equation against ``theta^n phi(x/sqrt theta) C``.

    ``psi`` solves ``psi_t = psi''/2 + (2mu+1)psi'/(2x) - lam psi/(2(theta + x^2))``.
    Parameters violating ``lam < 8mu^2 + 6mu + 1`` raise unless ``override`` is set, in
    which case ``meta["verified"]`` is False.
    """
    from .feynman_kac import solve_pde_z
    from .potential import critical_bessel

    if params.theta <= 0:
        raise InadmissibleParams("verify_theorem2 needs theta > 0")
    if not params.admissible and not override:
        raise InadmissibleParams(
            f"lam = {params.lam} violates lam < 8mu^2 + 6mu + 1 = {8 * params.mu ** 2 + 6 * params.mu + 1}")
    n, th = params.n, params.theta
    t_max = float(max(t_list))
    r_max = r_max if r_max is not None else 40.0 * math.sqrt(t_max) + 50.0
    v = critical_bessel(params.lam, th)
    zs = solve_pde_z(v, (0.0, r_max), t_max, dt, dx, times=t_list, dt_growth=dt_growth,
                     dt_max=dt_max, core=(0.0, max(10.0, 2 * x)), radial_mu=params.mu,
                     boundary_tol=boundary_tol, dx_max=5.0, growth=1.03)
    prof = phi_hypergeom(params, [x / math.sqrt(th)])
    target = th ** n * float(prof.values[0]) * limit_constant(params)
    vals = np.array([zs.value(float(t), x) for t in t_list])
    est = np.asarray(t_list, float) ** n * vals
    return LimitReport(np.asarray(t_list, float), est, np.zeros_like(est), target,
                       {"psi": vals}, {"verified": params.admissible, "n_nodes": zs.meta["n_nodes"]})


# ---------------------------------------------------------------------------
# squared Bessel processes


def _philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))


def sample_besq(delta: float, x0: float, times: Sequence[float], n_paths: int,
                seed: int) -> PathBundle:
    """Exact BESQ^delta paths at ``times`` started from ``x0``.

    Each transition over ``h`` from ``y`` adds a BESQ^0 move (gamma with Poisson
    shape ``N ~ Poisson(y/2h)``, scale ``2h``) to an independent BESQ^delta move from
    zero (gamma with shape ``delta/2``), the additivity decomposition of the law.
    """
    if delta < 0 or x0 < 0:
        raise ValueError("delta and x0 must be nonnegative")
    ts = np.asarray(times, dtype=float)
    if np.any(np.diff(ts) <= 0) or (len(ts) and ts[0] < 0):
        raise ValueError("times must be increasing and nonnegative")
    rng = _philox(seed)
    out = np.empty((n_paths, len(ts)))
    y = np.full(n_paths, float(x0))
    prev = 0.0
    for j, t in enumerate(ts):
        h = t - prev
        if h > 0:
            pn = rng.poisson(y / (2 * h))
            g0 = np.where(pn > 0, rng.gamma(np.maximum(pn, 1), 2 * h), 0.0)
            gd = rng.gamma(0.5 * delta, 2 * h, size=n_paths) if delta > 0 else np.zeros(n_paths)
            y = g0 + gd
        out[:, j] = y
        prev = t
    dt = float(np.min(np.diff(np.concatenate([[0.0], ts])))) if len(ts) else 0.0
    return PathBundle(ts, out, dt, int(seed), "besq", {}, {"delta": delta, "x0": x0})


# ---------------------------------------------------------------------------
# comparison with Bessel processes


@dataclass(frozen=True, eq=False)
class SandwichReport:
    max_lower_violation: float
    max_upper_violation: float
    n_paths: int
    n_steps: int

    @property
    def holds(self) -> bool:
        return self.max_lower_violation <= 0.0 and self.max_upper_violation <= 0.0


def _implicit_step(r: np.ndarray, db: np.ndarray, c: np.ndarray | float, dt: float) -> np.ndarray:
    # drift-implicit step of dR = dB + (c - 1)/(2R) dt; increasing in r and in c
    y = r + db
    return 0.5 * (y + np.sqrt(y * y + 2.0 * (c - 1.0) * dt))


def sandwich_check(params: BesselParams, x: float, t: float, dt: float, n_paths: int,
                   seed: int, table_max: float = 12.0, backend: str | None = None) -> SandwichReport:
    """Coupled ``R^mu``, ``X`` and ``R^{mu+2n}`` under one Brownian motion.

    ``X`` has drift ``(2mu+1)/(2X) + phi'/phi(X)``.  All three use the same
    drift-implicit step, which is monotone in the state and in the drift constant,
    so ``(R^mu)^2 <= X^2 <= (R^{mu+2n})^2`` must hold at every step.
    """
    if params.mu < -0.5:
        raise InadmissibleParams("the comparison needs mu >= -1/2")
    n_steps = max(1, int(round(t / dt)))
    dt = t / n_steps
    grid = np.linspace(0.0, table_max, 4001)
    hgrid, lo, hi = drift_bound_h(params, grid)
    z = kernels.normals(seed, n_paths, n_steps, backend=backend) * math.sqrt(dt)
    r_lo = np.full(n_paths, float(x))
    xx = r_lo.copy()
    r_hi = r_lo.copy()
    worst_lo = worst_hi = -np.inf
    for k in range(n_steps):
        hx = np.interp(xx, grid, hgrid, right=hi)
        db = z[:, k]
        r_lo = _implicit_step(r_lo, db, lo, dt)
        xx = _implicit_step(xx, db, hx, dt)
        r_hi = _implicit_step(r_hi, db, hi, dt)
        worst_lo = max(worst_lo, float(np.max(r_lo ** 2 - xx ** 2)))
        worst_hi = max(worst_hi, float(np.max(xx ** 2 - r_hi ** 2)))
    return SandwichReport(worst_lo, worst_hi, n_paths, n_steps)
