"""Command line entry point: ``penal-lab run <config.json>`` and ``penal-lab catalogue``.

A config is a JSON object::

    {"schema_version": 1, "pipeline": "crosscheck-all",
     "potential": {...}, "regime": null, "solver": {...}, "mc": {...}, "model": {...},
     "outputs": {"dir": "out"}}

Every section accepts only the keys its pipeline declares; anything else is a config
error (exit 2).  A pipeline returns tables, written as CSV, and named checks, written to
``summary.csv``; a failed check gives exit 1.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, InvalidPotential, PenalLabError
from .io import write_csv

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2

_TOP_KEYS = {"schema_version", "pipeline", "potential", "profile", "regime", "solver", "mc",
             "model", "outputs"}
_REGIMES = ("integrable", "unilateral", "bilateral")


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    reference: float
    tolerance: float
    detail: str = ""


@dataclass
class Result:
    tables: dict[str, Mapping[str, Sequence[Any]]] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    def check(self, name: str, value: float, reference: float, tolerance: float,
              relative: bool = False, detail: str = "") -> None:
        gap = abs(value - reference)
        if relative:
            gap /= abs(reference)
        self.checks.append(Check(name, bool(gap <= tolerance), float(value), float(reference),
                                 float(tolerance), detail))

    def flag(self, name: str, ok: bool, value: float = float("nan"), detail: str = "") -> None:
        self.checks.append(Check(name, bool(ok), float(value), float("nan"), float("nan"), detail))

    def merge(self, other: "Result", prefix: str = "") -> None:
        for k, t in other.tables.items():
            self.tables[prefix + k] = t
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.value, c.reference, c.tolerance, c.detail))


# ---------------------------------------------------------------------------
# config handling


def _section(cfg: Mapping[str, Any], name: str, defaults: Mapping[str, Any]) -> dict[str, Any]:
    given = cfg.get(name) or {}
    if not isinstance(given, Mapping):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}; allowed {sorted(defaults)}")
    out = dict(defaults)
    out.update(given)
    return out


def _potential(cfg: Mapping[str, Any]):
    from .potential import from_spec, require_valid

    spec = cfg.get("potential")
    if spec is None:
        raise ConfigError("this pipeline needs a 'potential'")
    if not isinstance(spec, Mapping):
        raise ConfigError("'potential' must be an object")
    v = from_spec(spec)
    require_valid(v)
    return v


def _formula_id(cfg: Mapping[str, Any]) -> tuple[str | None, dict[str, float]]:
    """Catalogue id and parameters when the potential is a plain catalogue entry."""
    from .sturm import CATALOGUE

    spec = cfg.get("potential") or {}
    dens = spec.get("density") or {}
    if dens.get("kind") != "formula-id" or spec.get("atoms"):
        return None, {}
    params = dict(dens.get("params", {}))
    fid = params.pop("id", None)
    return (fid, params) if fid in CATALOGUE else (None, {})


def _solve_phi(v, regime: str | None, hmax: float):
    from . import sturm

    if regime is None:
        return sturm.solve_phi(v, hmax=hmax)
    if regime == "integrable":
        return sturm.solve_integrable_bvp(v, hmax=hmax)
    if regime == "unilateral":
        return sturm.solve_unilateral_bvp(v, hmax=hmax)
    return sturm.solve_bilateral_eigen(v, hmax=hmax).phi


def _regime(cfg: Mapping[str, Any]) -> str | None:
    r = cfg.get("regime")
    if r is not None and r not in _REGIMES:
        raise ConfigError(f"regime must be one of {_REGIMES} or null, got {r!r}")
    return r


# ---------------------------------------------------------------------------
# pipelines


def _phi_solve(cfg: Mapping[str, Any]) -> Result:
    from .sturm import SQRT_2_OVER_PI, closed_form_oracle

    s = _section(cfg, "solver", {"hmax": 1e-3, "oracle_tol": 1e-6, "norm_tol": 1e-6,
                                 "x_range": [-10.0, 10.0], "n_eval": 2001})
    v = _potential(cfg)
    phi = _solve_phi(v, _regime(cfg), float(s["hmax"]))
    res = Result()
    res.tables["phi"] = {"x": phi.grid, "phi": phi.values, "dphi": phi.dphi_plus}
    res.flag("positivity", phi.positive(), float(np.min(phi.values)))
    if phi.regime.kind.value == "integrable":
        res.check("normalization", v.integrate_against(phi), 2.0 * SQRT_2_OVER_PI, float(s["norm_tol"]))
    fid, params = _formula_id(cfg)
    if fid is not None:
        xs = np.linspace(*map(float, s["x_range"]), int(s["n_eval"]))
        err = float(np.max(np.abs(phi(xs) - closed_form_oracle(fid, params, xs))))
        res.check("oracle-match", err, 0.0, float(s["oracle_tol"]), detail=fid)
    return res


def _z_pde(cfg: Mapping[str, Any]) -> Result:
    from .feynman_kac import solve_pde_z

    s = _section(cfg, "solver", {"t_max": 10.0, "dt": 1e-2, "dx": 1e-2, "dt_growth": None,
                                 "dt_max": 5.0, "domain": None, "x": [0.0], "times": []})
    v = _potential(cfg)
    dom = None if s["domain"] is None else tuple(map(float, s["domain"]))
    zs = solve_pde_z(v, dom, float(s["t_max"]), float(s["dt"]), float(s["dx"]),
                     times=[float(t) for t in s["times"]], dt_growth=s["dt_growth"],
                     dt_max=float(s["dt_max"]))
    res = Result()
    cols: dict[str, Any] = {"t": zs.times}
    for x in s["x"]:
        series = zs.at(float(x))
        cols[f"Z(x={float(x):g})"] = series
        res.flag(f"bounds(x={float(x):g})", bool(np.all(series > 0) and np.all(series <= 1 + 1e-12)),
                 float(series[-1]))
        res.flag(f"monotone(x={float(x):g})", bool(np.all(np.diff(series) <= 1e-12)))
    res.tables["z_pde"] = cols
    return res


def _z_mc(cfg: Mapping[str, Any]) -> Result:
    from .feynman_kac import estimate_z_mc, solve_pde_z

    m = _section(cfg, "mc", {"n_paths": 20000, "seed": 0, "dt": 1e-3, "x": 0.0, "t": [1.0],
                             "eps_c": 1.0, "band_extrapolate": True, "compare_pde": True,
                             "n_sigma": 3.0})
    v = _potential(cfg)
    ts = [float(t) for t in (m["t"] if isinstance(m["t"], list) else [m["t"]])]
    x = float(m["x"])
    res = Result()
    means, ses, refs = [], [], []
    zs = solve_pde_z(v, None, max(ts), 1e-2, 1e-2, times=ts) if m["compare_pde"] else None
    for i, t in enumerate(ts):
        mean, se = estimate_z_mc(v, x, t, int(m["n_paths"]), float(m["dt"]), int(m["seed"]) + i,
                                 float(m["eps_c"]), band_extrapolate=bool(m["band_extrapolate"]))
        means.append(mean)
        ses.append(se)
        res.flag(f"bounds(t={t:g})", 0.0 <= mean <= 1.0 + 3 * se, mean)
        if zs is not None:
            ref = zs.value(t, x)
            refs.append(ref)
            res.check(f"mc-vs-pde(t={t:g})", mean, ref, float(m["n_sigma"]) * se)
    cols = {"t": ts, "x": [x] * len(ts), "mean": means, "stderr": ses}
    if refs:
        cols["pde"] = refs
    res.tables["z_mc"] = cols
    return res


def _rate_fit(cfg: Mapping[str, Any]) -> Result:
    from .feynman_kac import fit_decay, solve_pde_z
    from .potential import RegimeKind, classify_regime

    s = _section(cfg, "solver", {"t_max": 400.0, "dt": 1e-2, "dx": 1e-2, "dt_growth": 1.02,
                                 "dt_max": 2.0, "x": 0.0, "window": [40.0, 400.0],
                                 "constant_tol": 0.1, "hmax": 1e-3})
    v = _potential(cfg)
    tag = classify_regime(v)
    x = float(s["x"])
    w = tuple(map(float, s["window"]))
    zs = solve_pde_z(v, None, float(s["t_max"]), float(s["dt"]), float(s["dx"]),
                     dt_growth=s["dt_growth"], dt_max=float(s["dt_max"]), times=list(w))
    res = Result()
    est = fit_decay(zs, x, tag, w)
    series = zs.at(x)
    res.tables["decay"] = {"k": [est.k], "gamma": [est.gamma], "constant": [est.constant],
                           "regime": [tag.kind.value]}
    if tag.kind is RegimeKind.INTEGRABLE:
        phi = _solve_phi(v, _regime(cfg), float(s["hmax"]))
        scaled = np.sqrt(zs.times) * series
        m = (zs.times >= w[0]) & (zs.times <= w[1])
        res.tables["scaled"] = {"t": zs.times[m], "sqrt_t_Z": scaled[m]}
        gaps = np.abs(scaled[m] - phi(x))
        res.flag("monotone-approach", bool(np.all(np.diff(gaps) <= 1e-12)))
        res.check("constant", float(scaled[m][-1]), float(phi(x)), float(s["constant_tol"]), relative=True)
        res.check("exponent", est.k, 0.5, 0.05)
    elif tag.kind is RegimeKind.BILATERAL:
        from .sturm import solve_bilateral_eigen

        g0 = solve_bilateral_eigen(v).gamma0
        res.check("gamma", est.gamma, g0, 0.05 * g0)
    return res


def _gamma0(cfg: Mapping[str, Any]) -> Result:
    from .sturm import outside_indicator_gamma0, solve_bilateral_eigen

    s = _section(cfg, "solver", {"hmax": 1e-3, "tol": 1e-10, "bracket": None, "oracle_tol": 1e-8})
    v = _potential(cfg)
    br = None if s["bracket"] is None else tuple(map(float, s["bracket"]))
    e = solve_bilateral_eigen(v, br, tol=float(s["tol"]), hmax=float(s["hmax"]))
    res = Result()
    res.tables["gamma0"] = {"gamma0": [e.gamma0], "bracket_lo": [e.bracket[0]], "bracket_hi": [e.bracket[1]]}
    res.tables["phi"] = {"x": e.phi.grid, "phi": e.phi.values, "dphi": e.phi.dphi_plus}
    res.flag("positivity", e.phi.positive(), float(np.min(e.phi.values)))
    fid, params = _formula_id(cfg)
    if fid == "ex8.1":
        res.check("tan-root", e.gamma0, outside_indicator_gamma0(float(params.get("a", 1.0))),
                  float(s["oracle_tol"]))
    return res


def _bessel(cfg: Mapping[str, Any]) -> Result:
    from .bessel import BesselParams, phi_hypergeom, verify_theorem1, verify_theorem2

    md = _section(cfg, "model", {"mu": 0.0, "lam": 0.5, "theta": 1.0})
    s = _section(cfg, "solver", {"x": 1.0, "t": [25.0, 50.0, 100.0, 200.0], "dx": 0.01, "dt": 0.01,
                                 "grid": [0.0, 10.0, 101], "residual_tol": 1e-8, "limit_tol": 0.1,
                                 "override": False})
    m = _section(cfg, "mc", {"n_paths": 0, "seed": 0, "h_rel": 0.02, "x": 1.0, "t": [100.0],
                             "n_sigma": 3.0})
    p = BesselParams(float(md["mu"]), float(md["lam"]), float(md["theta"]))
    res = Result()
    grid = np.linspace(float(s["grid"][0]), float(s["grid"][1]), int(s["grid"][2]))
    prof = phi_hypergeom(p, grid)
    res.tables["phi_hypergeom"] = {"x": prof.grid, "phi": prof.values, "dphi": prof.derivs}
    res.check("ode-residual", float(np.max(np.abs(prof.ode_residual()))), 0.0, float(s["residual_tol"]),
              detail=prof.branch)
    if p.theta > 0:
        rep = verify_theorem2(p, float(s["x"]), [float(t) for t in s["t"]], override=bool(s["override"]),
                              dx=float(s["dx"]), dt=float(s["dt"]))
        res.tables["limit_pde"] = {"t": rep.t, "estimate": rep.estimate,
                                   "target": np.full(len(rep.t), rep.target)}
        res.check("pde-limit", float(rep.estimate[-1]), rep.target, float(s["limit_tol"]), relative=True)
    if int(m["n_paths"]) > 0:
        mp = BesselParams(p.mu, p.lam, 0.0)
        rep = verify_theorem1(mp, float(m["x"]), [float(t) for t in m["t"]], int(m["n_paths"]),
                              int(m["seed"]), h_rel=float(m["h_rel"]))
        res.tables["limit_mc"] = {"t": rep.t, "estimate": rep.estimate, "stderr": rep.stderr,
                                  "exact_route": rep.extra["exact_route"],
                                  "exact_stderr": rep.extra["exact_stderr"],
                                  "target": np.full(len(rep.t), rep.target)}
        k = float(m["n_sigma"])
        res.check("mc-limit", float(rep.estimate[-1]), rep.target, k * float(rep.stderr[-1]))
        res.check("exact-route", float(rep.extra["exact_route"][-1]), rep.target,
                  k * float(rep.extra["exact_stderr"][-1]))
    return res


def _ld(cfg: Mapping[str, Any]) -> Result:
    from .ld_rate import psi_profile, rate_I

    md = _section(cfg, "model", {"alpha": 1.0, "lams": [1.0], "etas": [0.1, 0.05, 0.01]})
    s = _section(cfg, "solver", {"residual_tol": 1e-8, "n": 101, "method": "extrapolate"})
    res = Result()
    rows: dict[str, list] = {"alpha": [], "lam": [], "eta": [], "C": [], "I": [], "first_integral_residual": []}
    a = float(md["alpha"])
    for lam in map(float, md["lams"]):
        vals = []
        for eta in map(float, md["etas"]):
            sol = psi_profile(a, lam, eta, n=int(s["n"]))
            val = rate_I(a, lam, eta, method=str(s["method"])) if eta == 0 else sol.I
            vals.append(val)
            for k, x in zip(rows, (a, lam, eta, sol.C, val, sol.first_integral_residual)):
                rows[k].append(x)
            res.check(f"first-integral(lam={lam:g},eta={eta:g})", sol.first_integral_residual, 0.0,
                      float(s["residual_tol"]))
            res.tables[f"psi_lam{lam:g}_eta{eta:g}"] = {"t": sol.t, "psi": sol.psi}
        order = np.argsort(md["etas"])
        ordered = np.asarray(vals)[order]
        res.flag(f"decreasing-in-eta(lam={lam:g})", bool(np.all(np.diff(ordered) < 0)))
    res.tables["ld_table"] = rows
    return res


def _phi_for_sde(cfg: Mapping[str, Any], hmax: float):
    from .sturm import catalogue_profile

    prof = cfg.get("profile")
    if prof is not None:
        if not isinstance(prof, Mapping) or set(prof) - {"id", "params"}:
            raise ConfigError("'profile' must be {\"id\": ..., \"params\": {...}}")
        return None, catalogue_profile(str(prof.get("id")), prof.get("params"))
    v = _potential(cfg)
    return v, _solve_phi(v, _regime(cfg), hmax)


def _sde(cfg: Mapping[str, Any]) -> Result:
    from .penalized import (DiffusionSpec, exit_mc, exit_probabilities, invariant_density_check,
                            martingale_check, simulate)

    s = _section(cfg, "solver", {"x0": 0.0, "dt": 5e-3, "times": [1.0, 5.0], "hmax": 1e-3,
                                 "burn_in": 5.0, "bins": 40})
    m = _section(cfg, "mc", {"n_paths": 20000, "seed": 0, "exit_paths": 0, "n_sigma": 3.0})
    v, phi = _phi_for_sde(cfg, float(s["hmax"]))
    times = [float(t) for t in s["times"]]
    x0, n, seed = float(s["x0"]), int(m["n_paths"]), int(m["seed"])
    k = float(m["n_sigma"])
    spec = DiffusionSpec.from_phi(phi, x0, float(s["dt"]), max(times))
    bundle = simulate(spec, n, seed, times)
    mean, se = bundle.moments()
    res = Result()
    res.tables["paths"] = {"t": bundle.times, "mean": mean, "stderr": se}
    kind = phi.regime.kind.value
    if kind == "integrable" and v is not None:
        for j, t in enumerate(times):
            r = martingale_check(v, phi, x0, t, n, seed + 101 + j)
            res.check(f"martingale(t={t:g})", r.mean, r.target, k * r.stderr)
        if int(m["exit_paths"]) > 0:
            p, pse, left = exit_mc(phi, x0, int(m["exit_paths"]), seed + 7)
            target = float(exit_probabilities(phi, x0).p_plus[0])
            res.tables["exit"] = {"x0": [x0], "p_plus_mc": [p], "stderr": [pse], "p_plus": [target]}
            res.check("exit-probability", p, target, k * pse)
            res.flag("exit-finished", left == 0, left)
    elif kind in ("small_phi", "bilateral"):
        d = invariant_density_check(spec, float(s["burn_in"]), n, seed + 3, int(s["bins"]))
        res.tables["invariant_histogram"] = {"lo": d.edges[:-1], "hi": d.edges[1:],
                                             "count": d.counts, "expected": d.expected}
        res.check("invariant-chi2", d.chi2, 0.0, d.quantile99)
    return res


def _rk(cfg: Mapping[str, Any]) -> Result:
    from .rayknight import crosscheck_sturm, h_of_v

    s = _section(cfg, "solver", {"hmax": 1e-3, "tol": 1e-4})
    v = _potential(cfg)
    hv = h_of_v(v)
    lhs, rhs = crosscheck_sturm(v, float(s["hmax"]))
    res = Result()
    mp, mm, np_, nm = hv.components
    res.tables["rk"] = {"H": [hv.h], "M_plus": [mp], "M_minus": [mm], "N_plus": [np_], "N_minus": [nm],
                        "sqrt_2_over_pi_H": [lhs], "phi_2V_0": [rhs]}
    res.check("rk-crosscheck", lhs, rhs, float(s["tol"]))
    return res


def _tauberian(cfg: Mapping[str, Any], v, phi) -> Result:
    from .feynman_kac import laplace_tilde_A, solve_pde_z

    s = _section(cfg, "solver", {"hmax": 1e-3, "oracle_tol": 1e-6, "norm_tol": 1e-6,
                                 "x_range": [-10.0, 10.0], "n_eval": 2001,
                                 "t_max": 4000.0, "lambdas": [1e-3, 1e-4, 1e-5, 1e-6],
                                 "value_tol": 0.02, "slope_tol": 0.05, "x_slope": 10.0, "rk_tol": 1e-4})
    lo, hi = v._finite_hull()
    core = (min(lo, -float(s["x_slope"])) - 2.0, max(hi, float(s["x_slope"])) + 2.0)
    zs = solve_pde_z(v, None, float(s["t_max"]), 1e-2, 1e-2, dt_growth=1.02, dt_max=5.0, core=core)
    tc = laplace_tilde_A(zs, [float(x) for x in s["lambdas"]], v=v, phi=phi)
    res = Result()
    res.tables["tauberian"] = {"lambda": tc.lambdas, "A_tilde_0": [tc.value(i, 0.0)[0] for i in range(len(tc.lambdas))],
                               "theta_sup": tc.theta_sup}
    i_val = int(np.argmin(np.abs(tc.lambdas - 1e-3)))
    a0 = tc.value(i_val, 0.0)[0] / math.sqrt(2 * math.pi)
    res.check("tauberian-value", a0, float(phi(0.0)), float(s["value_tol"]), relative=True,
              detail=f"lambda={tc.lambdas[i_val]:g}")
    last = len(tc.lambdas) - 1
    xs = float(s["x_slope"])
    for sign in (1.0, -1.0):
        d = tc.value(last, sign * xs)[1]
        res.check(f"tauberian-slope(x={sign * xs:g})", d, 2.0 * sign, float(s["slope_tol"]), relative=True,
                  detail=f"lambda={tc.lambdas[last]:g}")
    return res


def _crosscheck_all(cfg: Mapping[str, Any]) -> Result:
    from .potential import RegimeKind, classify_regime

    v = _potential(cfg)
    tag = classify_regime(v)
    res = Result()
    base = _phi_solve(_restrict(cfg, "solver", ("hmax", "oracle_tol", "norm_tol", "x_range", "n_eval")))
    res.merge(base)
    if tag.kind is RegimeKind.INTEGRABLE:
        s = _section(cfg, "solver", {"hmax": 1e-3, "oracle_tol": 1e-6, "norm_tol": 1e-6,
                                     "x_range": [-10.0, 10.0], "n_eval": 2001,
                                     "t_max": 4000.0, "lambdas": [1e-3, 1e-4, 1e-5, 1e-6],
                                     "value_tol": 0.02, "slope_tol": 0.05, "x_slope": 10.0, "rk_tol": 1e-4})
        phi = _solve_phi(v, _regime(cfg), float(s["hmax"]))
        jobs: list[tuple[str, Callable[[], Result]]] = [("", lambda: _tauberian(cfg, v, phi))]
        if v.tails.is_compact:
            rk_cfg = dict(cfg)
            rk_cfg["solver"] = {"hmax": s["hmax"], "tol": s["rk_tol"]}
            jobs.append(("", lambda: _rk(rk_cfg)))
        if cfg.get("mc"):
            jobs.append(("", lambda: _z_mc(cfg)))
        nt = min(kernels.thread_count(), len(jobs))
        with ThreadPoolExecutor(max_workers=max(nt, 1)) as ex:
            outs = list(ex.map(lambda job: job[1](), jobs))
        for (prefix, _), out in zip(jobs, outs):
            res.merge(out, prefix)
    return res


def _restrict(cfg: Mapping[str, Any], section: str, keys: Sequence[str]) -> dict[str, Any]:
    out = dict(cfg)
    out[section] = {k: v for k, v in (cfg.get(section) or {}).items() if k in keys}
    return out


PIPELINES: dict[str, Callable[[Mapping[str, Any]], Result]] = {
    "phi-solve": _phi_solve,
    "z-pde": _z_pde,
    "z-mc": _z_mc,
    "rate-fit": _rate_fit,
    "gamma0": _gamma0,
    "bessel": _bessel,
    "ld": _ld,
    "sde": _sde,
    "rk": _rk,
    "crosscheck-all": _crosscheck_all,
}


# ---------------------------------------------------------------------------
# driver


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    if cfg.get("pipeline") not in PIPELINES:
        raise ConfigError(f"pipeline must be one of {sorted(PIPELINES)}")
    return cfg


def _write(res: Result, out_dir: Path, wanted: Sequence[str] | None) -> list[Path]:
    paths = []
    for name, cols in res.tables.items():
        if wanted is not None and name not in wanted:
            continue
        paths.append(write_csv(out_dir / f"{name}.csv", cols))
    c = res.checks
    paths.append(write_csv(out_dir / "summary.csv", {
        "check": [x.name for x in c], "passed": [x.passed for x in c], "value": [x.value for x in c],
        "reference": [x.reference for x in c], "tolerance": [x.tolerance for x in c],
        "detail": [x.detail for x in c]}))
    return paths


def run(config_path: str | Path, out=None) -> int:
    """Execute one config; returns the process exit code."""
    out = sys.stdout if out is None else out
    try:
        cfg = load_config(config_path)
        o = _section(cfg, "outputs", {"dir": None, "tables": None})
        res = PIPELINES[cfg["pipeline"]](cfg)
    except InvalidPotential as exc:
        print(f"config error: invalid potential ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PenalLabError as exc:
        print(f"FAIL {type(exc).__name__}: {exc}", file=out)
        return EXIT_INVARIANT
    base = Path(config_path).resolve().parent
    out_dir = Path(o["dir"]) if o["dir"] else base / f"{Path(config_path).stem}_out"
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    _write(res, out_dir, o["tables"])
    for c in res.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={c.value:.10g}"
              + ("" if math.isnan(c.reference) else f" reference={c.reference:.10g} tol={c.tolerance:.3g}"),
              file=out)
    print(f"wrote {out_dir}", file=out)
    return EXIT_OK if all(c.passed for c in res.checks) else EXIT_INVARIANT


def list_catalogue() -> str:
    from .sturm import CATALOGUE

    width = max(len(k) for k in CATALOGUE)
    lines = [f"{fid:<{width}}  {e.regime:<11}  {e.description}" for fid, e in CATALOGUE.items()]
    return "\n".join(lines) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="penal-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the pipeline described by a JSON config")
    p_run.add_argument("config")
    sub.add_parser("catalogue", help="list the closed-form formula ids")
    args = ap.parse_args(argv)
    if args.command == "catalogue":
        sys.stdout.write(list_catalogue())
        return EXIT_OK
    return run(args.config)


if __name__ == "__main__":
    sys.exit(main())
