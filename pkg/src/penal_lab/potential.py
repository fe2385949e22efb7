"""Penalization potentials: positive Radon measures made of a density plus Dirac atoms.

A potential carries a sampled density, an optional exact density callable (used by the
ODE/PDE solvers so that discontinuities are resolved exactly), a list of atoms and a
declaration of its tail behaviour.  Tail behaviour cannot be read off a finite grid, so
the regime classifier trusts the declaration after a consistency check against the
outermost part of the grid.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import InvalidPotential, NonPositivePhi, UnclassifiablePotential

__all__ = [
    "Tail",
    "TailInfo",
    "RegimeKind",
    "RegimeTag",
    "RadonPotential",
    "SignedPotential",
    "box",
    "dirac",
    "half_line",
    "gaussian_tail",
    "outside_indicator",
    "triangle",
    "slow_decay",
    "critical_bessel",
    "constant",
    "zero",
    "from_samples",
    "from_spec",
    "validate",
    "require_valid",
    "classify_regime",
    "potential_from_phi",
]

DensityFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Tail:
    """Declared behaviour of the density at one end of the line.

    ``moment_finite`` tells whether ``int (1+|y|) V(dy)`` is finite on this side,
    ``limit`` is the limit of the density (``math.inf`` allowed) and ``power`` a declared
    decay exponent ``p`` with ``V_a(x) ~ c |x|^{-p}`` (negative for growing densities).
    """

    moment_finite: bool | None = None
    limit: float | None = None
    power: float | None = None

    @classmethod
    def compact(cls) -> "Tail":
        return cls(moment_finite=True, limit=0.0, power=math.inf)

    @classmethod
    def level(cls, value: float) -> "Tail":
        if value == 0:
            return cls.compact()
        return cls(moment_finite=False, limit=float(value), power=0.0)


@dataclass(frozen=True)
class TailInfo:
    left: Tail = field(default_factory=Tail)
    right: Tail = field(default_factory=Tail)

    @classmethod
    def compact(cls) -> "TailInfo":
        return cls(Tail.compact(), Tail.compact())

    @property
    def is_compact(self) -> bool:
        """Both sides declared to vanish identically beyond some point."""
        return all(t.moment_finite is True and t.limit == 0.0 and t.power == math.inf
                   for t in (self.left, self.right))


class RegimeKind(enum.Enum):
    SMALL_PHI = "small_phi"
    INTEGRABLE = "integrable"
    UNILATERAL = "unilateral"
    CRITICAL_BESSEL = "critical_bessel"
    SLOW_DECAY = "slow_decay"
    BILATERAL = "bilateral"


@dataclass(frozen=True)
class RegimeTag:
    """Asymptotic regime of ``Z_t^V`` with the parameters it carries.

    ``k`` is the polynomial exponent of ``t^k Z_t -> phi``, ``rate`` the exponential rate
    ``gamma`` of ``Z_t ~ e^{-gamma t/2}`` (bilateral only, filled in once solved) and
    ``log_rate_exponent`` the exponent ``(alpha-2)/(alpha+2)`` of the slow-decay regime.
    """

    kind: RegimeKind
    k: float | None = None
    rate: float | None = None
    log_rate_exponent: float | None = None
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("k", "rate"):
            val = getattr(self, name)
            if val is not None and not (math.isfinite(val) and val >= 0):
                raise ValueError(f"RegimeTag.{name} must be finite and >= 0, got {val}")

    @classmethod
    def small_phi(cls) -> "RegimeTag":
        return cls(RegimeKind.SMALL_PHI, k=0.0, rate=0.0)

    @classmethod
    def integrable(cls) -> "RegimeTag":
        return cls(RegimeKind.INTEGRABLE, k=0.5, rate=0.0)

    @classmethod
    def unilateral(cls) -> "RegimeTag":
        return cls(RegimeKind.UNILATERAL, k=0.5, rate=0.0)

    @classmethod
    def bilateral(cls, gamma0: float | None = None, **params: float) -> "RegimeTag":
        return cls(RegimeKind.BILATERAL, k=0.0, rate=gamma0, params=params)

    @classmethod
    def critical_bessel(cls, lam: float, theta: float, mu: float = -0.5) -> "RegimeTag":
        n = (-mu + math.sqrt(mu * mu + lam)) / 2.0
        return cls(RegimeKind.CRITICAL_BESSEL, k=n, rate=0.0,
                   params={"lam": lam, "theta": theta, "mu": mu})

    @classmethod
    def slow_decay(cls, lam: float, alpha: float) -> "RegimeTag":
        return cls(RegimeKind.SLOW_DECAY, log_rate_exponent=(alpha - 2.0) / (alpha + 2.0),
                   params={"lam": lam, "alpha": alpha})

    def with_rate(self, gamma: float) -> "RegimeTag":
        return replace(self, rate=gamma)


def _frozen(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


class _MeasureBase:
    """Shared evaluation helpers for positive and signed potentials."""

    grid: np.ndarray
    density: np.ndarray
    atoms: tuple[tuple[float, float], ...]
    density_fn: DensityFn | None
    breakpoints: tuple[float, ...]

    def density_at(self, x: np.ndarray | float) -> np.ndarray:
        """Density at arbitrary points; constant extension beyond the grid."""
        x = np.asarray(x, dtype=float)
        if self.density_fn is not None:
            return np.asarray(self.density_fn(x), dtype=float) * np.ones_like(x)
        return np.interp(x, self.grid, self.density)

    @property
    def atom_locations(self) -> np.ndarray:
        return np.array([a for a, _ in self.atoms], dtype=float)

    @property
    def atom_masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms], dtype=float)

    def density_integral(self, lo: float, hi: float, n: int = 1000) -> float:
        """``int_lo^hi V_a(y) dy`` by 3-point Gauss-Legendre on ``n`` cells per piece.

        Gauss nodes avoid the breakpoints, where a piecewise density may take the
        value of either neighbouring piece.
        """
        u, w = np.polynomial.legendre.leggauss(3)
        cuts = sorted({lo, hi, *[b for b in self.breakpoints if lo < b < hi]})
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            e = np.linspace(a, b, n + 1)
            mid, half = 0.5 * (e[1:] + e[:-1]), 0.5 * np.diff(e)
            xs = (mid[:, None] + half[:, None] * u[None, :]).ravel()
            total += float(np.sum(self.density_at(xs).reshape(n, 3) * w[None, :] * half[:, None]))
        return float(total)


@dataclass(frozen=True, eq=False)
class RadonPotential(_MeasureBase):
    """Positive measure ``V(dy) = V_a(y) dy + sum_i m_i delta_{a_i}``.

    Construction is permissive so that :func:`validate` can report problems; solvers
    call :func:`require_valid` before using a potential.
    """

    grid: np.ndarray
    density: np.ndarray
    atoms: tuple[tuple[float, float], ...] = ()
    tails: TailInfo = field(default_factory=TailInfo)
    support: tuple[float, float] | None = None
    density_fn: DensityFn | None = None
    breakpoints: tuple[float, ...] = ()
    form: tuple[str, Mapping[str, float]] | None = None
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", _frozen(self.grid))
        object.__setattr__(self, "density", _frozen(self.density))
        object.__setattr__(self, "atoms", tuple((float(a), float(m)) for a, m in self.atoms))
        object.__setattr__(self, "breakpoints", tuple(sorted(float(b) for b in self.breakpoints)))

    def scaled(self, factor: float) -> "RadonPotential":
        """The measure ``factor * V``."""
        fn = self.density_fn
        new_fn = None if fn is None else (lambda x, fn=fn: factor * fn(x))
        form = None
        if self.form is not None and "lam" in self.form[1]:
            params = dict(self.form[1])
            params["lam"] = params["lam"] * factor
            form = (self.form[0], params)
        return replace(self, density=factor * self.density,
                       atoms=tuple((a, factor * m) for a, m in self.atoms),
                       density_fn=new_fn, form=form, name=f"{factor:g}*{self.name}")

    def reflected(self) -> "RadonPotential":
        """Image of ``V`` under ``x -> -x``."""
        fn = self.density_fn
        new_fn = None if fn is None else (lambda x, fn=fn: fn(-np.asarray(x)))
        sup = None if self.support is None else (-self.support[1], -self.support[0])
        return replace(self, grid=-self.grid[::-1], density=self.density[::-1],
                       atoms=tuple(sorted((-a, m) for a, m in self.atoms)),
                       tails=TailInfo(self.tails.right, self.tails.left), support=sup,
                       density_fn=new_fn, breakpoints=tuple(-b for b in self.breakpoints),
                       name=f"reflect({self.name})")

    def total_mass(self) -> float:
        lo, hi = self._finite_hull()
        return self.density_integral(lo, hi) + float(self.atom_masses.sum())

    def first_moment_integral(self, x0: float = 0.0) -> float:
        """``int (1+|y-x0|) V(dy)`` over the finite hull (support or grid)."""
        from scipy.integrate import simpson

        lo, hi = self._finite_hull()
        cuts = sorted({lo, hi, x0, *[b for b in self.breakpoints if lo < b < hi]})
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            if not lo <= a < b <= hi:
                continue
            xs = np.linspace(a, b, 4001)
            total += simpson((1 + np.abs(xs - x0)) * self.density_at(xs), x=xs)
        total += sum((1 + abs(a - x0)) * m for a, m in self.atoms)
        return float(total)

    def _finite_hull(self) -> tuple[float, float]:
        if self.support is not None:
            return self.support
        return float(self.grid[0]), float(self.grid[-1])

    def integrate_against(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """``int f(y) V(dy)`` over the finite hull."""
        from scipy.integrate import simpson

        lo, hi = self._finite_hull()
        cuts = sorted({lo, hi, *[b for b in self.breakpoints if lo < b < hi]})
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            xs = np.linspace(a, b, 8001)
            total += simpson(f(xs) * self.density_at(xs), x=xs)
        for a, m in self.atoms:
            total += m * float(f(np.array([a]))[0])
        return float(total)


_SIGNED_TOKEN = object()


@dataclass(frozen=True, eq=False)
class SignedPotential(_MeasureBase):
    """``V_phi(dx) = phi''(dx)/phi(x)``; density and atom masses may be negative.

    Only :func:`potential_from_phi` builds these.
    """

    grid: np.ndarray
    density: np.ndarray
    atoms: tuple[tuple[float, float], ...] = ()
    regime: RegimeTag | None = None
    density_fn: DensityFn | None = None
    breakpoints: tuple[float, ...] = ()
    _token: object = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self._token is not _SIGNED_TOKEN:
            raise TypeError("SignedPotential is built by potential_from_phi only")
        object.__setattr__(self, "grid", _frozen(self.grid))
        object.__setattr__(self, "density", _frozen(self.density))
        object.__setattr__(self, "atoms", tuple((float(a), float(m)) for a, m in self.atoms))


# ---------------------------------------------------------------------------
# factories


def _default_grid(lo: float, hi: float, margin: float = 2.0, n: int = 2001) -> np.ndarray:
    return np.linspace(lo - margin, hi + margin, n)


def box(level: float, a: float, b: float, grid: np.ndarray | None = None) -> RadonPotential:
    """``level * 1_[a,b](x) dx``."""
    if not a < b:
        raise InvalidPotential(f"box needs a < b, got {a}, {b}")

    def fn(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where((x >= a) & (x <= b), level, 0.0)

    g = _default_grid(a, b) if grid is None else np.asarray(grid, dtype=float)
    return RadonPotential(g, fn(g), (), TailInfo.compact(), (a, b), fn, (a, b),
                          name=f"box({level:g},{a:g},{b:g})")


def dirac(atoms: Sequence[tuple[float, float]], grid: np.ndarray | None = None) -> RadonPotential:
    """Pure atomic measure ``sum m_i delta_{a_i}``."""
    atoms = tuple(sorted((float(a), float(m)) for a, m in atoms))
    if not atoms:
        raise InvalidPotential("dirac needs at least one atom")
    lo, hi = atoms[0][0], atoms[-1][0]
    g = _default_grid(lo, hi) if grid is None else np.asarray(grid, dtype=float)

    def fn(x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    return RadonPotential(g, np.zeros_like(g), atoms, TailInfo.compact(), (lo, hi), fn,
                          tuple(a for a, _ in atoms), name="dirac")


def half_line(level: float, start: float = 0.0, grid: np.ndarray | None = None) -> RadonPotential:
    """``level * 1_[start, inf)(x) dx``."""

    def fn(x: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(x, dtype=float) >= start, level, 0.0)

    g = np.linspace(start - 10.0, start + 10.0, 2001) if grid is None else np.asarray(grid, float)
    return RadonPotential(g, fn(g), (), TailInfo(Tail.compact(), Tail.level(level)), None, fn,
                          (start,), name=f"half_line({level:g})")


def gaussian_tail(grid: np.ndarray | None = None) -> RadonPotential:
    """``(y^2 - 1) 1_{y >= 1} dy`` whose profile has a Gaussian right tail."""

    def fn(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x >= 1.0, x * x - 1.0, 0.0)

    g = np.linspace(-8.0, 8.0, 2001) if grid is None else np.asarray(grid, float)
    right = Tail(moment_finite=False, limit=math.inf, power=-2.0)
    return RadonPotential(g, fn(g), (), TailInfo(Tail.compact(), right), None, fn, (1.0,),
                          name="gaussian_tail")


def outside_indicator(a: float, level: float = 1.0, grid: np.ndarray | None = None) -> RadonPotential:
    """``level * 1_{|x| > a}``, the bilateral example."""

    def fn(x: np.ndarray) -> np.ndarray:
        # right-continuous on [0, inf), mirrored on (-inf, 0]
        return np.where(np.abs(np.asarray(x, dtype=float)) >= a, level, 0.0)

    g = np.linspace(-a - 8.0, a + 8.0, 2001) if grid is None else np.asarray(grid, float)
    return RadonPotential(g, fn(g), (), TailInfo(Tail.level(level), Tail.level(level)), None, fn,
                          (-a, a), name=f"outside_indicator({a:g})")


def triangle(height: float, a: float, b: float, grid: np.ndarray | None = None) -> RadonPotential:
    """Tent-shaped density on ``[a, b]`` peaking at the midpoint."""
    c = 0.5 * (a + b)
    half = 0.5 * (b - a)

    def fn(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.clip(height * (1.0 - np.abs(x - c) / half), 0.0, None)

    g = _default_grid(a, b) if grid is None else np.asarray(grid, float)
    return RadonPotential(g, fn(g), (), TailInfo.compact(), (a, b), fn, (a, c, b),
                          name=f"triangle({height:g},{a:g},{b:g})")


def slow_decay(lam: float, alpha: float, grid: np.ndarray | None = None) -> RadonPotential:
    """``lam / (1 + |x|^alpha)``."""

    def fn(x: np.ndarray) -> np.ndarray:
        return lam / (1.0 + np.abs(np.asarray(x, dtype=float)) ** alpha)

    g = np.linspace(-50.0, 50.0, 4001) if grid is None else np.asarray(grid, float)
    finite = alpha > 2
    t = Tail(moment_finite=finite, limit=0.0, power=alpha)
    return RadonPotential(g, fn(g), (), TailInfo(t, t), None, fn, (0.0,),
                          form=("slow_decay", {"lam": lam, "alpha": alpha}),
                          name=f"slow_decay({lam:g},{alpha:g})")


def critical_bessel(lam: float, theta: float = 1.0, grid: np.ndarray | None = None) -> RadonPotential:
    """``lam / (theta + x^2)``."""
    if theta <= 0:
        raise InvalidPotential("critical_bessel on the line needs theta > 0")

    def fn(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return lam / (theta + x * x)

    g = np.linspace(-50.0, 50.0, 4001) if grid is None else np.asarray(grid, float)
    t = Tail(moment_finite=False, limit=0.0, power=2.0)
    return RadonPotential(g, fn(g), (), TailInfo(t, t), None, fn, (),
                          form=("critical_bessel", {"lam": lam, "theta": theta}),
                          name=f"critical_bessel({lam:g},{theta:g})")


def constant(c: float, lo: float = -20.0, hi: float = 20.0, n: int = 2001) -> RadonPotential:
    """Constant density ``c`` on the whole line (sampled on ``[lo, hi]``)."""

    def fn(x: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(x, dtype=float), c)

    g = np.linspace(lo, hi, n)
    return RadonPotential(g, fn(g), (), TailInfo(Tail.level(c), Tail.level(c)), None, fn, (),
                          name=f"constant({c:g})")


def zero(lo: float = -10.0, hi: float = 10.0, n: int = 201) -> RadonPotential:
    """The null measure.  Invalid as a penalization (see :func:`validate`) but handy in checks."""

    def fn(x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    g = np.linspace(lo, hi, n)
    return RadonPotential(g, np.zeros_like(g), (), TailInfo.compact(), None, fn, (), name="zero")


def from_samples(grid: Sequence[float], values: Sequence[float],
                 atoms: Sequence[tuple[float, float]] = (), tails: TailInfo | None = None,
                 support: tuple[float, float] | None = None) -> RadonPotential:
    """Potential given only by samples; the solvers interpolate linearly."""
    return RadonPotential(np.asarray(grid, float), np.asarray(values, float), tuple(atoms),
                          tails or TailInfo(), support, None, (), name="samples")


def _piecewise(params: Mapping[str, Any]) -> RadonPotential:
    breaks = np.asarray(params["breaks"], dtype=float)
    values = np.asarray(params["values"], dtype=float)
    mode = params.get("mode", "constant")
    if mode == "constant":
        if len(values) != len(breaks) - 1:
            raise InvalidPotential("piecewise constant needs len(values) == len(breaks) - 1")

        def fn(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            idx = np.searchsorted(breaks, x, side="right") - 1
            inside = (idx >= 0) & (idx < len(values))
            out = np.zeros_like(x)
            out[inside] = values[idx[inside]]
            # closed right end of the last piece
            out[x == breaks[-1]] = values[-1]
            return out
    elif mode == "linear":
        if len(values) != len(breaks):
            raise InvalidPotential("piecewise linear needs len(values) == len(breaks)")

        def fn(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            return np.interp(x, breaks, values, left=0.0, right=0.0)
    else:
        raise InvalidPotential(f"unknown piecewise mode {mode!r}")
    g = _default_grid(float(breaks[0]), float(breaks[-1]))
    return RadonPotential(g, fn(g), (), TailInfo.compact(), (float(breaks[0]), float(breaks[-1])),
                          fn, tuple(breaks), name="piecewise")


_FORMULA_FACTORIES: dict[str, Callable[..., RadonPotential]] = {
    "box": lambda level=1.0, a=-1.0, b=1.0: box(level, a, b),
    "half_line": lambda level=1.0, start=0.0: half_line(level, start),
    "gaussian_tail": lambda: gaussian_tail(),
    "outside_indicator": lambda a=1.0, level=1.0: outside_indicator(a, level),
    "triangle": lambda height=1.0, a=-1.0, b=1.0: triangle(height, a, b),
    "slow_decay": lambda lam=1.0, alpha=1.0: slow_decay(lam, alpha),
    "critical_bessel": lambda lam=1.0, theta=1.0: critical_bessel(lam, theta),
    "constant": lambda c=1.0: constant(c),
    "zero": lambda: zero(),
    # catalogue entries (see sturm.CATALOGUE)
    "ex4.1": lambda gamma=1.0, a=-1.0, b=1.0: box(gamma ** 2, a, b),
    "ex4.2": lambda gamma=1.0, a=-1.0, b=1.0: dirac([(a, gamma ** 2), (b, gamma ** 2)]),
    "ex5.1": lambda lam=1.0: half_line(lam ** 2),
    "ex5.2": lambda: gaussian_tail(),
    "ex8.1": lambda a=1.0: outside_indicator(a),
}

_SPEC_KEYS = {"density", "atoms", "tails", "support", "grid"}


def _tail_from_spec(d: Mapping[str, Any]) -> Tail:
    unknown = set(d) - {"moment_finite", "limit", "power"}
    if unknown:
        raise InvalidPotential(f"unknown tail keys {sorted(unknown)}")
    lim = d.get("limit")
    if isinstance(lim, str):
        lim = math.inf if lim in ("inf", "+inf", "infinity") else float(lim)
    pw = d.get("power")
    if isinstance(pw, str):
        pw = math.inf if pw in ("inf", "+inf") else float(pw)
    return Tail(d.get("moment_finite"), lim, pw)


def from_spec(spec: Mapping[str, Any]) -> RadonPotential:
    """Build a potential from its JSON description.

    ``{"density": {"kind": "piecewise" | "formula-id", "params": {...}},
    "atoms": [[a, m], ...], "tails": {"left": {...}, "right": {...}}}``.  For
    ``kind == "formula-id"`` the params must contain ``"id"`` (a factory or catalogue
    name) and the remaining entries are passed to the factory.
    """
    unknown = set(spec) - _SPEC_KEYS
    if unknown:
        raise InvalidPotential(f"unknown potential keys {sorted(unknown)}")
    dens = spec.get("density")
    atoms = [tuple(map(float, p)) for p in spec.get("atoms", [])]
    if dens is None:
        if not atoms:
            raise InvalidPotential("potential spec needs a density or atoms")
        base = dirac(atoms)
        atoms = []
    else:
        kind = dens.get("kind")
        params = dict(dens.get("params", {}))
        if kind == "piecewise":
            base = _piecewise(params)
        elif kind == "formula-id":
            fid = params.pop("id", None)
            if fid not in _FORMULA_FACTORIES:
                raise InvalidPotential(f"unknown formula id {fid!r}")
            base = _FORMULA_FACTORIES[fid](**params)
        else:
            raise InvalidPotential(f"unknown density kind {kind!r}")
    if atoms:
        merged = tuple(sorted(base.atoms + tuple((a, m) for a, m in atoms)))
        locs = [a for a, _ in merged]
        sup = base.support
        if sup is not None:
            sup = (min(sup[0], *locs), max(sup[1], *locs))
        base = replace(base, atoms=merged, support=sup,
                       breakpoints=tuple(sorted(set(base.breakpoints) | set(locs))))
    if "tails" in spec:
        t = spec["tails"]
        base = replace(base, tails=TailInfo(_tail_from_spec(t.get("left", {})),
                                            _tail_from_spec(t.get("right", {}))))
    if "support" in spec:
        s = spec["support"]
        base = replace(base, support=None if s is None else (float(s[0]), float(s[1])))
    if "grid" in spec:
        g = spec["grid"]
        grid = np.linspace(float(g[0]), float(g[1]), int(g[2]))
        base = replace(base, grid=grid, density=base.density_at(grid))
    return base


# ---------------------------------------------------------------------------
# validation and classification


def validate(v: RadonPotential) -> list[str]:
    """Names of the violated invariants; empty iff ``v`` is a valid potential."""
    diags: list[str] = []
    g = np.asarray(v.grid)
    if g.ndim != 1 or len(g) < 2 or np.any(np.diff(g) <= 0):
        diags.append("GridNotSorted")
    if np.asarray(v.density).shape != g.shape:
        diags.append("DensityShapeMismatch")
    elif np.any(~np.isfinite(v.density)) or np.any(np.asarray(v.density) < 0):
        diags.append("NegativeDensity")
    if any(m < 0 for _, m in v.atoms):
        diags.append("NegativeAtomMass")
    if any(not math.isfinite(m) or not math.isfinite(a) for a, m in v.atoms):
        diags.append("NonFiniteAtom")
    if "GridNotSorted" not in diags and v.atoms:
        lo, hi = g[0], g[-1]
        if any(a < lo or a > hi for a, _ in v.atoms):
            diags.append("AtomOutsideGrid")
    if v.support is not None and "GridNotSorted" not in diags:
        lo, hi = v.support
        if lo > hi:
            diags.append("BadSupport")
        else:
            outside = (g < lo) | (g > hi)
            if "DensityShapeMismatch" not in diags and np.any(np.asarray(v.density)[outside] != 0):
                diags.append("DensityOutsideSupport")
            if any((a < lo or a > hi) and m != 0 for a, m in v.atoms):
                diags.append("AtomOutsideSupport")
    return diags


def require_valid(v: RadonPotential) -> None:
    diags = validate(v)
    if diags:
        raise InvalidPotential(", ".join(diags))


def _outer_samples(v: RadonPotential, side: str) -> np.ndarray:
    n = len(v.grid)
    k = max(2, n // 10)
    return np.asarray(v.density[:k] if side == "left" else v.density[-k:])


def _check_tail(v: RadonPotential, side: str) -> None:
    t: Tail = getattr(v.tails, side)
    if t.moment_finite is None:
        raise UnclassifiablePotential(f"{side} tail: first-moment finiteness not declared")
    if t.moment_finite:
        if t.limit not in (None, 0.0):
            raise UnclassifiablePotential(f"{side} tail: finite moment but nonzero limit {t.limit}")
        if t.power is not None and t.power <= 2:
            raise UnclassifiablePotential(f"{side} tail: finite moment but power {t.power} <= 2")
    else:
        if t.limit is None and t.power is None:
            raise UnclassifiablePotential(f"{side} tail: infinite moment without limit or power")
        if t.power is not None and t.power > 2:
            raise UnclassifiablePotential(f"{side} tail: power {t.power} > 2 has a finite moment")
    outer = _outer_samples(v, side)
    scale = float(np.max(v.density)) if np.max(v.density) > 0 else 1.0
    if t.limit == 0.0 and t.power in (None, math.inf) and np.max(outer) > 0.5 * scale:
        raise UnclassifiablePotential(f"{side} tail declared vanishing, grid end disagrees")
    if t.limit is not None and 0 < t.limit < math.inf:
        if abs(float(np.mean(outer)) - t.limit) > 0.5 * t.limit:
            raise UnclassifiablePotential(f"{side} tail limit {t.limit} disagrees with the grid")


def _is_bilateral(v: RadonPotential) -> bool:
    if v.atoms:
        return False
    lt, rt = v.tails.left, v.tails.right
    if lt.limit is None or rt.limit is None:
        return False
    if not (math.isfinite(lt.limit) and math.isfinite(rt.limit)) or lt.limit != rt.limit:
        return False
    xs = v.grid[v.grid >= 0]
    if len(xs) < 3:
        return False
    right = v.density_at(xs)
    left = v.density_at(-xs)
    if not np.allclose(left, right, rtol=1e-9, atol=1e-12):
        return False
    if np.any(np.diff(right) < -1e-12):
        return False
    return bool(right[-1] > right[0]) or bool(np.all(right == right[0]))


def classify_regime(v: RadonPotential) -> RegimeTag:
    """Asymptotic regime of ``Z_t^V`` from the declared tails (deterministic)."""
    require_valid(v)
    if v.form is not None:
        name, p = v.form
        if name == "critical_bessel":
            return RegimeTag.critical_bessel(p["lam"], p["theta"])
        if name == "slow_decay":
            alpha = p["alpha"]
            if 0 < alpha < 2:
                return RegimeTag.slow_decay(p["lam"], alpha)
            if alpha == 2:
                return RegimeTag.critical_bessel(p["lam"], 1.0)
            # alpha > 2 falls through to the integrable rules
    if not np.any(np.asarray(v.density) > 0) and not np.any(v.atom_masses > 0):
        # V = 0: Z = 1 and phi = 1, the bounded small-phi case
        return RegimeTag.small_phi()
    _check_tail(v, "left")
    _check_tail(v, "right")
    lt, rt = v.tails.left, v.tails.right
    if lt.moment_finite and rt.moment_finite:
        return RegimeTag.integrable()
    if lt.moment_finite and not rt.moment_finite:
        big = (rt.power is not None and rt.power < 2) or (rt.limit is not None and rt.limit > 0)
        if big:
            return RegimeTag.unilateral()
        raise UnclassifiablePotential("right tail neither integrable nor large enough (power < 2)")
    if rt.moment_finite and not lt.moment_finite:
        raise UnclassifiablePotential(
            "large left tail with integrable right tail: reflect the potential first")
    if _is_bilateral(v):
        lo = float(v.density_at(np.array([0.0]))[0])
        return RegimeTag.bilateral(None, v_min=lo, v_max=float(rt.limit))
    raise UnclassifiablePotential("two-sided non-integrable potential without a declared form")


# ---------------------------------------------------------------------------
# V_phi = phi'' / phi


def potential_from_phi(phi: Any, jump_tol: float | None = None) -> SignedPotential:
    """Signed potential ``phi''(dx)/phi(x)`` of a positive profile.

    ``phi`` is a profile object with ``grid``, ``values`` and optionally one-sided
    derivative arrays ``dphi_minus``/``dphi_plus``.  Second differences use the
    three-point stencil on the (possibly nonuniform) grid; a node is an atom when the
    one-sided slopes differ by more than ten times the grid-scale tolerance, and the
    atom mass is ``(phi'(a+) - phi'(a-))/phi(a)``.
    """
    x = np.asarray(phi.grid, dtype=float)
    y = np.asarray(phi.values, dtype=float)
    if np.any(y <= 0):
        raise NonPositivePhi("phi must be strictly positive on its grid")
    if len(x) < 5:
        raise ValueError("need at least five grid points")
    h = np.diff(x)
    s = np.diff(y) / h  # slope on each cell
    hm, hp = h[:-1], h[1:]
    d2 = 2.0 * (s[1:] - s[:-1]) / (hm + hp)  # interior nodes 1..n-2

    dm = getattr(phi, "dphi_minus", None)
    dp = getattr(phi, "dphi_plus", None)
    if dm is not None and dp is not None:
        jump = (np.asarray(dp) - np.asarray(dm))[1:-1]
    else:
        # smooth part of the slope change predicted from the neighbouring curvature
        smooth = np.zeros_like(d2)
        smooth[1:-1] = 0.5 * (d2[:-2] + d2[2:]) * 0.5 * (hm[1:-1] + hp[1:-1])
        raw = s[1:] - s[:-1]
        jump = raw - smooth
        hmax = float(h.max())
        curv = float(np.max(np.abs(d2))) if len(d2) else 0.0
        tol = jump_tol if jump_tol is not None else hmax * hmax * curv + 1e-12 * float(np.max(np.abs(s)))
        jump = np.where(np.abs(jump) > 10.0 * tol, jump, 0.0)
    if jump_tol is not None:
        jump = np.where(np.abs(jump) > 10.0 * jump_tol, jump, 0.0)
    else:
        scale = 1e-12 * max(1.0, float(np.max(np.abs(s))))
        jump = np.where(np.abs(jump) > 10.0 * scale, jump, 0.0)

    curvature = 2.0 * ((s[1:] - s[:-1]) - jump) / (hm + hp)
    dens = np.empty_like(y)
    dens[1:-1] = curvature / y[1:-1]
    dens[0], dens[-1] = dens[1], dens[-2]
    atoms = tuple((float(x[i + 1]), float(jump[i] / y[i + 1])) for i in np.nonzero(jump)[0])
    regime = getattr(phi, "regime", None)
    return SignedPotential(x, dens, atoms, regime, None, tuple(a for a, _ in atoms),
                           _token=_SIGNED_TOKEN)
