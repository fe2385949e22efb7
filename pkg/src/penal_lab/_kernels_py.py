"""Pure numpy implementation of the Monte Carlo kernels.

Same signatures and the same random stream as the compiled ``_kernels`` module; the
loops run over time steps with all paths of a chunk vectorised.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
PATHMUL = np.uint64(0xD1B54A32D192ED03)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_ONE = np.uint64(1)
_TWO = np.uint64(2)
INV53 = 1.0 / 9007199254740992.0
TWO_PI = 6.283185307179586


def fmix(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _C1
        z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


def path_keys(seed: int, path0: int, n: int) -> np.ndarray:
    paths = np.arange(path0, path0 + n, dtype=np.uint64)
    s = fmix(np.array([seed], dtype=np.uint64) ^ GOLDEN)
    with np.errstate(over="ignore"):
        return fmix(s + paths * PATHMUL + GOLDEN)


def uniforms(keys: np.ndarray, c: np.ndarray | int) -> np.ndarray:
    c = np.asarray(c, dtype=np.uint64)
    with np.errstate(over="ignore"):
        w = fmix(keys + (c + _ONE) * GOLDEN)
    return (w >> _S11).astype(np.float64) * INV53


def normals(keys: np.ndarray, k: np.ndarray | int) -> np.ndarray:
    """Normal number ``k`` of each stream: Box-Muller on the word pair ``k >> 1``."""
    k = np.asarray(k, dtype=np.uint64)
    even = k & ~_ONE
    u1 = 1.0 - uniforms(keys, even)
    u2 = uniforms(keys, even + _ONE)
    r = np.sqrt(-2.0 * np.log(u1))
    th = TWO_PI * u2
    return np.where((k & _ONE) == 0, r * np.cos(th), r * np.sin(th))


def table_eval(x: np.ndarray, lo: float, dx: float, tab: np.ndarray) -> np.ndarray:
    n = len(tab)
    s = (x - lo) / dx
    i = np.clip(np.floor(s), 0, n - 2).astype(np.int64)
    f = s - i
    out = tab[i] + f * (tab[i + 1] - tab[i])
    out = np.where(s <= 0.0, tab[0], out)
    return np.where(s >= n - 1, tab[n - 1], out)


def drift_eval(x: np.ndarray, lo: float, dx: float, tab: np.ndarray, tail: np.ndarray) -> np.ndarray:
    hi = lo + (len(tab) - 1) * dx
    d = table_eval(x, lo, dx, tab)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = tail[0] + tail[1] * x
        if tail[2] != 0.0:
            left = left + tail[2] / (x - tail[3])
        right = tail[4] + tail[5] * x
        if tail[6] != 0.0:
            right = right + tail[6] / (x - tail[7])
    d = np.where(x < lo, left, d)
    return np.where(x > hi, right, d)


def fill_normals(seed: int, path0: int, out: np.ndarray) -> None:
    keys = path_keys(seed, path0, out.shape[0])
    for k in range(out.shape[1]):
        out[:, k] = normals(keys, k)


def killed_bm(seed, path0, x0, dt, n_steps, tlo, tdx, tab, atom_loc, atom_mass, eps, logw, logw2, xend):
    keys = path_keys(seed, path0, len(logw))
    tab = np.asarray(tab)
    sq = np.sqrt(dt)
    x = np.full(len(logw), float(x0))
    vd = table_eval(x, tlo, tdx, tab)
    acc = np.zeros_like(x)
    occ = np.zeros_like(x)
    occ2 = np.zeros_like(x)
    for k in range(n_steps):
        xn = x + sq * normals(keys, k)
        vdn = table_eval(xn, tlo, tdx, tab)
        acc += 0.5 * (vd + vdn)
        for a, m in zip(atom_loc, atom_mass):
            d0, d1 = np.abs(x - a), np.abs(xn - a)
            occ += 0.5 * m * ((d0 < eps).astype(float) + (d1 < eps))
            occ2 += 0.5 * m * ((d0 < 2 * eps).astype(float) + (d1 < 2 * eps))
        x, vd = xn, vdn
    logw[:] = -0.5 * dt * (acc + occ * (0.5 / eps))
    logw2[:] = -0.5 * dt * (acc + occ2 * (0.25 / eps))
    xend[:] = x


def em_paths(seed, path0, x, dt, n_steps, tlo, tdx, tab, tail, bes_b, reflect):
    keys = path_keys(seed, path0, len(x))
    tab, tail = np.asarray(tab), np.asarray(tail)
    sq = np.sqrt(dt)
    xi = np.array(x, dtype=float)
    for k in range(n_steps):
        d = drift_eval(xi, tlo, tdx, tab, tail)
        if bes_b != 0.0:
            d = d + bes_b / xi
        xi = xi + d * dt + sq * normals(keys, k)
        if reflect:
            xi = np.abs(xi)
    x[:] = xi


def em_exit(seed, path0, x0, dt_min, dt_scale, core_lo, core_hi, lo, hi, max_steps,
            tlo, tdx, tab, tail, side, texit):
    n = len(side)
    keys = path_keys(seed, path0, n)
    tab, tail = np.asarray(tab), np.asarray(tail)
    xi = np.full(n, float(x0))
    t = np.zeros(n)
    res = np.zeros(n, dtype=np.int8)
    active = np.ones(n, dtype=bool)
    for k in range(max_steps):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        xa = xi[idx]
        dist = np.where(xa < core_lo, core_lo - xa, np.where(xa > core_hi, xa - core_hi, 0.0))
        h = np.maximum(dt_scale * dist * dist, dt_min)
        xa = xa + drift_eval(xa, tlo, tdx, tab, tail) * h + np.sqrt(h) * normals(keys[idx], k)
        xi[idx] = xa
        t[idx] += h
        up = xa >= hi
        down = (xa <= lo) & ~up
        res[idx[up]] = 1
        res[idx[down]] = -1
        active[idx[up | down]] = False
    side[:] = res
    texit[:] = t


def bessel_integral(seed, path0, x0, t_end, dim, mu, h_rel, dt_max, kill_level, integral, rend):
    n = len(integral)
    keys = path_keys(seed, path0, n)
    b = mu + 0.5
    c = np.zeros(n, dtype=np.uint64)
    t = np.zeros(n)
    acc = np.zeros(n)
    nc = max(dim, 1)
    coords = np.zeros((n, nc))
    coords[:, 0] = x0
    r2 = np.full(n, float(x0) ** 2)
    active = np.ones(n, dtype=bool)
    while active.any():
        idx = np.nonzero(active)[0]
        h = np.minimum(h_rel * r2[idx], dt_max)
        h = np.where(t[idx] + h > t_end, t_end - t[idx], h)
        sq = np.sqrt(h)
        if dim >= 1:
            r2n = np.zeros(len(idx))
            killed = np.zeros(len(idx), dtype=bool)
            for j in range(dim):
                z = coords[idx, j] + sq * normals(keys[idx], c[idx])
                c[idx] += np.uint64(1)
                if dim == 1:
                    killed = z * coords[idx, 0] <= 0.0
                coords[idx, j] = z
                r2n += z * z
        else:
            z = np.sqrt(r2[idx])
            z = np.abs(z + b / z * h + sq * normals(keys[idx], c[idx]))
            c[idx] += np.uint64(1)
            r2n = z * z
            killed = np.zeros(len(idx), dtype=bool)
        a = acc[idx] + 0.5 * h * (1.0 / r2[idx] + 1.0 / r2n)
        # a killed path keeps its previous radius, as in the compiled loop
        r2[idx] = np.where(killed, r2[idx], r2n)
        t[idx] = np.where(killed, t[idx], t[idx] + h)
        a = np.where(killed | (a > kill_level), np.inf, a)
        acc[idx] = a
        done = killed | np.isinf(a) | (t[idx] >= t_end)
        active[idx[done]] = False
    integral[:] = acc
    rend[:] = np.sqrt(r2)


def propagate(M, jump, y0, dy0, val, dpre, dpost):
    n = M.shape[0]
    v, d = float(y0), float(dy0)
    val[0], dpre[0] = v, d
    d = d + jump[0] * v
    dpost[0] = d
    m = M.tolist()
    jmp = list(jump)
    for i in range(n):
        (m00, m01), (m10, m11) = m[i]
        v, d = m00 * v + m01 * d, m10 * v + m11 * d
        val[i + 1] = v
        dpre[i + 1] = d
        d = d + jmp[i + 1] * v
        dpost[i + 1] = d
