"""The limiting diffusion ``dX = dB + (phi'/phi)(X) dt`` and checks of its laws.

Paths come from the Euler-Maruyama kernels with a tabulated drift; beyond the table
the drift follows the analytic asymptote declared by the profile.  The checks compare
Monte Carlo output with deterministic quantities: the normalisation ``Z_t`` from the
heat equation, the scale function, the invariant density ``phi^2`` and, for the
bang-bang process, an exactly sampled reflected Brownian motion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from . import kernels
from .bessel import BesselParams, phi_hypergeom
from .errors import DivergentScale, NonPositivePhi
from .io import write_csv
from .paths import PathBundle
from .potential import RegimeKind
from .sturm import PhiProfile, catalogue_profile

__all__ = [
    "DiffusionSpec",
    "ScaleData",
    "simulate",
    "h_transform_check",
    "exit_probabilities",
    "window_exit_probability",
    "exit_mc",
    "invariant_density_check",
    "bang_bang_identity_check",
    "martingale_check",
]


# ---------------------------------------------------------------------------
# diffusion description


@dataclass(frozen=True, eq=False)
class DiffusionSpec:
    """Drift table ``(lo, dx, values)`` with kernel tail coefficients and run settings.

    ``extra_drift`` is the coefficient ``b`` of an added ``b / x`` term; with it the
    process lives on ``x > 0`` and ``reflect`` must be set (the Euler proposal is
    replaced by its absolute value).
    """

    phi: Any
    drift: tuple[float, float, np.ndarray]
    tail: np.ndarray
    x0: float
    dt: float
    t_max: float
    extra_drift: float = 0.0
    reflect: bool = False
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.drift[2])):
            raise NonPositivePhi("drift is not finite on the table (phi vanishes)")
        if self.dt <= 0 or self.t_max < 0:
            raise ValueError("dt must be positive and t_max nonnegative")
        if self.extra_drift != 0.0 and not self.reflect:
            raise ValueError("a Bessel drift term needs reflect=True")

    @classmethod
    def from_phi(cls, phi: PhiProfile, x0: float, dt: float, t_max: float,
                 lo: float | None = None, hi: float | None = None, dx: float = 1e-3) -> "DiffusionSpec":
        if not phi.positive():
            raise NonPositivePhi("phi must be positive on its grid")
        return cls(phi, phi.drift_table(lo, hi, dx), phi.drift_tail(), float(x0), dt, t_max,
                   meta={"regime": phi.regime.kind.value})

    @classmethod
    def free(cls, x0: float, dt: float, t_max: float) -> "DiffusionSpec":
        """``phi = 1``: Brownian motion."""
        return cls(None, (-1.0, 1.0, np.zeros(3)), np.zeros(8), float(x0), dt, t_max,
                   meta={"regime": "free"})

    @classmethod
    def bang_bang(cls, lam: float, x0: float, dt: float, t_max: float) -> "DiffusionSpec":
        """Drift ``-lam sgn(x)`` from the profile ``exp(-lam |x|)``."""
        if lam == 0:
            return cls.free(x0, dt, t_max)
        return cls.from_phi(catalogue_profile("ex3.5", {"lam": lam}), x0, dt, t_max)

    @classmethod
    def bessel(cls, params: BesselParams, x0: float, dt: float, t_max: float,
               x_max: float = 50.0, dx: float = 1e-3) -> "DiffusionSpec":
        """``dX = dB + ((2mu+1)/(2X) + phi'/phi(X)) dt`` for the critical potential."""
        if not -0.5 <= params.mu <= 0.0:
            raise ValueError("the reflecting scheme is declared for mu in [-1/2, 0]")
        th = params.theta if params.theta > 0 else 1.0
        n = int(math.ceil(x_max / dx)) + 1
        xs = dx * np.arange(n)
        # the series is costly at large x; the smooth log-derivative is splined from a coarse grid
        coarse = np.linspace(0.0, xs[-1], int(math.ceil(xs[-1] / 0.025)) + 1)
        prof = phi_hypergeom(params, coarse / math.sqrt(th))
        drift = CubicSpline(coarse, prof.derivs / prof.values / math.sqrt(th))(xs)
        tail = np.zeros(8)
        tail[6] = 2.0 * params.n  # phi'/phi ~ 2n/x
        return cls(prof, (0.0, dx, drift), tail, float(x0), dt, t_max,
                   extra_drift=params.mu + 0.5, reflect=True, meta={"regime": "critical_bessel"})


def _segment_seed(seed: int, j: int) -> int:
    # distinct stream families for successive recording intervals
    return (int(seed) * 0x9E3779B1 + 0x632BE5AB * (j + 1)) & 0xFFFFFFFFFFFFFFFF


def simulate(spec: DiffusionSpec, n_paths: int, seed: int, times: Sequence[float] | None = None,
             backend: str | None = None) -> PathBundle:
    """Euler-Maruyama paths stored at ``times`` (default: ``t_max`` only)."""
    ts = np.asarray([spec.t_max] if times is None else times, dtype=float)
    if np.any(np.diff(ts) <= 0) or (len(ts) and ts[0] < 0):
        raise ValueError("times must be increasing and nonnegative")
    x = np.full(n_paths, spec.x0)
    out = np.empty((n_paths, len(ts)))
    prev = 0.0
    for j, t in enumerate(ts):
        steps = int(round((t - prev) / spec.dt))
        if steps > 0:
            h = (t - prev) / steps
            x = kernels.em_paths(_segment_seed(seed, j), x, h, steps, spec.drift, spec.tail,
                                 spec.extra_drift, spec.reflect, backend)
        out[:, j] = x
        prev = t
    return PathBundle(ts, out, spec.dt, int(seed), "diffusion", {}, dict(spec.meta))


# ---------------------------------------------------------------------------
# h-transform identity and martingale


@dataclass(frozen=True)
class HTransformReport:
    """``e^{gamma t/2} Z_t(x)`` against ``phi(x) E[1/phi(X_t)]``."""

    z_pde: float
    z_shifted: float
    h_estimate: float
    h_stderr: float
    gamma_shift: float

    @property
    def z_score(self) -> float:
        return (self.h_estimate - self.z_shifted) / self.h_stderr if self.h_stderr > 0 else 0.0

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, {k: [v] for k, v in self.__dict__.items()})


def h_transform_check(v, phi: PhiProfile | None, x: float, t: float, n_paths: int, seed: int,
                      dt: float = 5e-3, pde_dt: float = 1e-2, pde_dx: float = 1e-2,
                      backend: str | None = None) -> HTransformReport:
    """Compare the heat-equation ``Z_t(x)`` with the diffusion side of the h-transform.

    ``phi = None`` stands for ``phi = 1`` (then ``v`` should vanish).
    """
    from .feynman_kac import solve_pde_z

    gamma = phi.gamma_shift if phi is not None else 0.0
    if t == 0:
        return HTransformReport(1.0, 1.0, 1.0, 0.0, gamma)
    if v is None or (v.total_mass() == 0 if hasattr(v, "total_mass") else False):
        z = 1.0
    else:
        zs = solve_pde_z(v, None, t, pde_dt, pde_dx, times=[t])
        z = float(zs.value(t, x))
    zshift = z * math.exp(0.5 * gamma * t)
    if phi is None:
        return HTransformReport(z, zshift, 1.0, 0.0, 0.0)
    spec = DiffusionSpec.from_phi(phi, x, dt, t)
    xt = simulate(spec, n_paths, seed, backend=backend).final
    r = float(phi(x)) / phi(xt)
    se = float(r.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return HTransformReport(z, zshift, float(r.mean()), se, gamma)


@dataclass(frozen=True)
class MartingaleReport:
    t: float
    mean: float
    stderr: float
    target: float

    @property
    def z_score(self) -> float:
        return (self.mean - self.target) / self.stderr if self.stderr > 0 else 0.0


def martingale_check(v, phi: PhiProfile, x: float, t: float, n_paths: int, seed: int,
                     dt: float = 5e-3, backend: str | None = None) -> MartingaleReport:
    """Monte Carlo mean of ``phi(B_t) exp(-1/2 int L^y_t V(dy) + gamma t/2)``."""
    from .feynman_kac import mc_log_weights

    logw, logw2, bt = mc_log_weights(v, x, t, n_paths, dt, seed, backend=backend)
    m = phi(bt) * np.exp(logw + 0.5 * phi.gamma_shift * t)
    if len(v.atoms):
        m = 2.0 * m - phi(bt) * np.exp(logw2 + 0.5 * phi.gamma_shift * t)
    se = float(m.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return MartingaleReport(t, float(m.mean()), se, float(phi(x)))


# ---------------------------------------------------------------------------
# scale function and exit laws


@dataclass(frozen=True, eq=False)
class ScaleData:
    """``S(x) = int_{-inf}^x dy/phi^2``, ``rho = S(inf)`` and the limit probabilities."""

    rho: float
    x: np.ndarray
    s: np.ndarray
    p_minus: np.ndarray
    p_plus: np.ndarray

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, {"x": self.x, "s": self.s, "p_minus": self.p_minus, "p_plus": self.p_plus})


def _affine_tail_mass(phi: PhiProfile, side: str) -> float:
    i = 0 if side == "left" else -1
    y0 = float(phi.values[i])
    d0 = phi.dphi_minus[i] if side == "left" else phi.dphi_plus[i]
    spec = phi.asym.get(side, ("affine", d0))
    slope = spec[1] if spec[0] == "affine" else 0.0
    outward = -slope if side == "left" else slope
    if spec[0] != "affine" or not outward > 0:
        raise DivergentScale(f"int dy/phi^2 diverges on the {side}: the process is recurrent")
    return 1.0 / (outward * y0)


def _scale_on_grid(phi: PhiProfile) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Cumulative ``int_{g0}^x dy/phi^2`` at the grid nodes, plus the two tail masses."""
    left = _affine_tail_mass(phi, "left")
    right = _affine_tail_mass(phi, "right")
    g = phi.grid
    # three-point Gauss-Legendre per cell on the Hermite interpolant
    u, w = np.polynomial.legendre.leggauss(3)
    a, b = g[:-1, None], g[1:, None]
    pts = 0.5 * (a + b) + 0.5 * (b - a) * u
    cell = (0.5 * (b - a)[:, 0]) * (phi(pts.ravel()).reshape(pts.shape) ** -2 @ w)
    return g, np.concatenate([[0.0], np.cumsum(cell)]), left, right


def _scale_at(phi: PhiProfile, xs: np.ndarray) -> tuple[np.ndarray, float]:
    g, cum, left, right = _scale_on_grid(phi)
    rho = left + cum[-1] + right
    xs = np.asarray(xs, dtype=float)
    out = np.empty_like(xs)
    for k, xv in enumerate(xs.ravel()):
        if xv <= g[0]:
            y0, d0 = phi.evaluate(xv)
            out.flat[k] = 1.0 / (abs(float(d0)) * float(y0))
        elif xv >= g[-1]:
            y0, d0 = phi.evaluate(xv)
            out.flat[k] = rho - 1.0 / (abs(float(d0)) * float(y0))
        else:
            i = int(np.searchsorted(g, xv, side="right") - 1)
            part, _ = quad(lambda y: float(phi(y)) ** -2, g[i], xv, epsabs=0.0, epsrel=1e-12)
            out.flat[k] = left + cum[i] + part
    return out, rho


def exit_probabilities(phi: PhiProfile, x: np.ndarray | float) -> ScaleData:
    """``p_plus(x) = S(x)/rho``, ``p_minus = 1 - p_plus`` with closed-form affine tails."""
    if phi.regime.kind is not RegimeKind.INTEGRABLE:
        raise DivergentScale(f"exit probabilities need the integrable regime, got {phi.regime.kind.value}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    s, rho = _scale_at(phi, xs)
    p_plus = np.clip(s / rho, 0.0, 1.0)
    return ScaleData(float(rho), xs, s, 1.0 - p_plus, p_plus)


def window_exit_probability(phi: PhiProfile, x: float, lo: float, hi: float) -> float:
    """Probability of leaving ``[lo, hi]`` through ``hi``: ``(S(x) - S(lo))/(S(hi) - S(lo))``."""
    s, _ = _scale_at(phi, np.array([lo, x, hi]))
    return float((s[1] - s[0]) / (s[2] - s[0]))


def _curved_hull(phi: PhiProfile, margin: float = 0.5) -> tuple[float, float]:
    """Smallest interval (plus ``margin``) outside of which ``phi`` is affine on its grid."""
    # phi''/phi is the potential density; finite differences leave ~1e-9 roundoff on affine parts
    dd = np.abs(phi.second_differences()) / phi.values[1:-1]
    jump = np.abs(phi.dphi_plus - phi.dphi_minus) / phi.values
    bent = np.concatenate([[False], dd > 1e-6 * max(dd.max(), 1e-300), [False]]) | (jump > 1e-10)
    if not bent.any():
        return float(phi.grid[0]), float(phi.grid[0])
    g = phi.grid[bent]
    return float(g.min()) - margin, float(g.max()) + margin


def exit_mc(phi: PhiProfile, x: float, n_paths: int, seed: int, window: tuple[float, float] = (-50.0, 50.0),
            dt_min: float = 1e-3, dt_scale: float = 1e-2, max_steps: int = 2_000_000,
            backend: str | None = None) -> tuple[float, float, int]:
    """Fraction of paths leaving ``window`` on the right, its stderr, and unfinished count.

    The step is ``dt_min`` where ``phi`` bends and grows like the squared distance to
    that core outside it, where ``phi`` is affine and the drift a smooth ``1/(x - r)``.
    """
    spec = DiffusionSpec.from_phi(phi, x, dt_min, 0.0)
    core = _curved_hull(phi)
    side, _ = kernels.em_exit(seed, n_paths, x, dt_min, dt_scale, core, window, max_steps,
                              spec.drift, spec.tail, backend)
    done = side != 0
    n = int(done.sum())
    p = float(np.mean(side[done] > 0)) if n else float("nan")
    se = math.sqrt(p * (1 - p) / n) if n else float("nan")
    return p, se, int(n_paths - n)


# ---------------------------------------------------------------------------
# invariant density


@dataclass(frozen=True, eq=False)
class DensityReport:
    edges: np.ndarray
    counts: np.ndarray
    expected: np.ndarray
    chi2: float
    dof: int
    quantile99: float

    @property
    def passed(self) -> bool:
        return self.chi2 < self.quantile99

    @property
    def pvalue(self) -> float:
        return float(stats.chi2.sf(self.chi2, self.dof))

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, {"lo": self.edges[:-1], "hi": self.edges[1:], "count": self.counts,
                                "expected": self.expected})


def _target_cdf(spec: DiffusionSpec, n: int = 200001) -> tuple[np.ndarray, np.ndarray]:
    phi = spec.phi
    g = phi.grid
    lo, hi = float(g[0]) - 20.0, float(g[-1]) + 20.0
    if spec.reflect:
        lo = 0.0
    xs = np.linspace(lo, hi, n)
    if isinstance(phi, PhiProfile):
        dens = phi(xs) ** 2
    else:
        raise ValueError("invariant densities are checked for PhiProfile-based diffusions")
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))])
    return xs, cdf / cdf[-1]


def invariant_density_check(spec: DiffusionSpec, burn_in: float, n_samples: int, seed: int = 0,
                            bins: int = 40, backend: str | None = None) -> DensityReport:
    """Chi-square of ``X_{burn_in}`` over ``n_samples`` independent paths against ``phi^2``.

    Bins are equiprobable under the target, so every expected count is ``n/bins``.
    """
    if spec.phi is None:
        raise DivergentScale("phi = 1 has no finite invariant measure")
    xs, cdf = _target_cdf(spec)
    qs = np.linspace(0.0, 1.0, bins + 1)[1:-1]
    inner = np.interp(qs, cdf, xs)
    edges = np.concatenate([[-np.inf], inner, [np.inf]])
    run = DiffusionSpec(spec.phi, spec.drift, spec.tail, spec.x0, spec.dt, burn_in,
                        spec.extra_drift, spec.reflect, spec.meta)
    samples = simulate(run, n_samples, seed, backend=backend).final
    counts = np.histogram(samples, edges)[0].astype(float)
    expected = np.full(bins, n_samples / bins)
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    dof = bins - 1
    return DensityReport(edges, counts, expected, chi2, dof, float(stats.chi2.ppf(0.99, dof)))


# ---------------------------------------------------------------------------
# bang-bang identity


@dataclass(frozen=True)
class KSReport:
    statistic: float
    pvalue: float
    n: int
    lam: float
    t: float

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, {k: [v] for k, v in self.__dict__.items()})


def sample_max_minus_value(lam: float, t: float, n: int, seed: int) -> np.ndarray:
    """Exact ``S_t - W_t`` for ``W_t = B_t + lam t`` with running maximum ``S``.

    Given ``W_t = w`` the maximum of the bridge is ``(w + sqrt(w^2 - 2 t log U))/2``.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))
    w = lam * t + math.sqrt(t) * rng.standard_normal(n)
    u = 1.0 - rng.random(n)
    s = 0.5 * (w + np.sqrt(w * w - 2.0 * t * np.log(u)))
    return s - w


def bang_bang_identity_check(lam: float, t: float, n_paths: int, seed: int, dt: float = 1e-3,
                             backend: str | None = None) -> KSReport:
    """Two-sample KS between ``|X_t|`` (bang-bang from 0) and ``S_t - W_t``."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if t == 0:
        return KSReport(0.0, 1.0, n_paths, lam, t)
    spec = DiffusionSpec.bang_bang(lam, 0.0, dt, t)
    a = np.abs(simulate(spec, n_paths, seed, backend=backend).final)
    b = sample_max_minus_value(lam, t, n_paths, seed + 1)
    res = stats.ks_2samp(a, b)
    return KSReport(float(res.statistic), float(res.pvalue), n_paths, lam, t)
