"""Backend selection and chunked, thread-parallel drivers for the Monte Carlo kernels.

The compiled extension is used when it imports; set ``PENAL_LAB_PURE_PYTHON=1`` to
force the numpy fallback.  Paths are processed in fixed-size chunks and every path
draws from its own counter-based stream, so results do not depend on the thread count.
``PENAL_LAB_THREADS`` caps the number of worker threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from . import _kernels_py

CHUNK = 8192

try:
    if os.environ.get("PENAL_LAB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure python backend requested")
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled
DEFAULT_BACKEND = "cython" if _compiled is not None else "python"


def backend_module(name: str | None = None):
    name = name or DEFAULT_BACKEND
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    return BACKENDS[name]


def thread_count() -> int:
    env = os.environ.get("PENAL_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _run_chunked(n_paths: int, work: Callable[[int, int], None]) -> None:
    starts = list(range(0, n_paths, CHUNK))
    jobs = [(s, min(s + CHUNK, n_paths)) for s in starts]
    nt = min(thread_count(), len(jobs))
    if nt <= 1:
        for s, e in jobs:
            work(s, e)
        return
    with ThreadPoolExecutor(max_workers=nt) as ex:
        list(ex.map(lambda se: work(*se), jobs))


def _seed64(seed: int) -> int:
    return int(seed) & 0xFFFFFFFFFFFFFFFF


def normals(seed: int, n_paths: int, n_steps: int, backend: str | None = None) -> np.ndarray:
    """Matrix of the standard normals consumed by each path (row) at each step."""
    mod = backend_module(backend)
    out = np.empty((n_paths, n_steps))
    mod.fill_normals(_seed64(seed), 0, out)
    return out


def killed_bm(seed: int, n_paths: int, x0: float, dt: float, n_steps: int,
              table: tuple[float, float, np.ndarray], atom_loc: np.ndarray,
              atom_mass: np.ndarray, eps: float, backend: str | None = None
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-path log weights ``-1/2 int L^y_t V(dy)`` with bands ``eps`` and ``2 eps``, and end points."""
    mod = backend_module(backend)
    tlo, tdx, tab = table
    tab = np.ascontiguousarray(tab, dtype=float)
    al = np.ascontiguousarray(atom_loc, dtype=float)
    am = np.ascontiguousarray(atom_mass, dtype=float)
    logw = np.empty(n_paths)
    logw2 = np.empty(n_paths)
    xend = np.empty(n_paths)
    s64 = _seed64(seed)

    def work(s: int, e: int) -> None:
        mod.killed_bm(s64, s, float(x0), float(dt), int(n_steps), float(tlo), float(tdx), tab,
                      al, am, float(eps), logw[s:e], logw2[s:e], xend[s:e])

    _run_chunked(n_paths, work)
    return logw, logw2, xend


def em_paths(seed: int, x0: np.ndarray, dt: float, n_steps: int,
             table: tuple[float, float, np.ndarray], tail: np.ndarray,
             bes_b: float = 0.0, reflect: bool = False, backend: str | None = None) -> np.ndarray:
    """End points of Euler-Maruyama paths started at ``x0`` (one per path)."""
    mod = backend_module(backend)
    tlo, tdx, tab = table
    tab = np.ascontiguousarray(tab, dtype=float)
    tail = np.ascontiguousarray(tail, dtype=float)
    x = np.array(x0, dtype=float, copy=True)
    s64 = _seed64(seed)

    def work(s: int, e: int) -> None:
        xs = x[s:e]
        mod.em_paths(s64, s, xs, float(dt), int(n_steps), float(tlo), float(tdx), tab, tail,
                     float(bes_b), int(bool(reflect)))

    _run_chunked(len(x), work)
    return x


def em_exit(seed: int, n_paths: int, x0: float, dt_min: float, dt_scale: float,
            core: tuple[float, float], window: tuple[float, float], max_steps: int,
            table: tuple[float, float, np.ndarray], tail: np.ndarray,
            backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Exit side (+1, -1, 0 if unfinished) and exit time of ``window``."""
    mod = backend_module(backend)
    tlo, tdx, tab = table
    tab = np.ascontiguousarray(tab, dtype=float)
    tail = np.ascontiguousarray(tail, dtype=float)
    side = np.empty(n_paths, dtype=np.int8)
    texit = np.empty(n_paths)
    s64 = _seed64(seed)

    def work(s: int, e: int) -> None:
        sd, te = side[s:e], texit[s:e]
        mod.em_exit(s64, s, float(x0), float(dt_min), float(dt_scale), float(core[0]),
                    float(core[1]), float(window[0]), float(window[1]), int(max_steps),
                    float(tlo), float(tdx), tab, tail, sd, te)

    _run_chunked(n_paths, work)
    return side, texit


def bessel_integral(seed: int, n_paths: int, x0: float, t_end: float, dim: int, mu: float,
                    h_rel: float, dt_max: float, kill_level: float,
                    backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^t ds/R_s^2`` per path (``inf`` for killed paths) and the final radius."""
    mod = backend_module(backend)
    integral = np.empty(n_paths)
    rend = np.empty(n_paths)
    s64 = _seed64(seed)

    def work(s: int, e: int) -> None:
        ig, re = integral[s:e], rend[s:e]
        mod.bessel_integral(s64, s, float(x0), float(t_end), int(dim), float(mu), float(h_rel),
                            float(dt_max), float(kill_level), ig, re)

    _run_chunked(n_paths, work)
    return integral, rend


def propagate(M: np.ndarray, jump: np.ndarray, y0: float, dy0: float,
              backend: str | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values and derivatives (before/after node jumps) from chained transfer matrices."""
    mod = backend_module(backend)
    M = np.ascontiguousarray(M, dtype=float)
    jump = np.ascontiguousarray(jump, dtype=float)
    n = M.shape[0] + 1
    val, dpre, dpost = np.empty(n), np.empty(n), np.empty(n)
    mod.propagate(M, jump, float(y0), float(dy0), val, dpre, dpost)
    return val, dpre, dpost
