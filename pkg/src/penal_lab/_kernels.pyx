# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo kernels.

Every routine mirrors a function of ``_kernels_py`` line for line; both draw their
normals from the same counter-based generator so the two backends agree path by path.
"""
from libc.math cimport cos, fabs, floor, log, sin, sqrt, INFINITY
from libc.stdint cimport int64_t, uint64_t, int8_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t PATHMUL = 0xD1B54A32D192ED03ULL
cdef double TWO_PI = 6.283185307179586
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t fmix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t path_key(uint64_t seed, uint64_t path) noexcept nogil:
    return fmix(fmix(seed ^ GOLDEN) + path * PATHMUL + GOLDEN)


cdef inline double uniform(uint64_t key, uint64_t c) noexcept nogil:
    return <double>(fmix(key + (c + 1) * GOLDEN) >> 11) * INV53


cdef inline double normal(uint64_t key, uint64_t k, double* spare) noexcept nogil:
    # Box-Muller on the word pair of index k >> 1: cosine for even k, sine for odd k.
    # Streams are consumed in order, so the sine half is cached in ``spare``.
    cdef double u1, u2, r
    if k & 1:
        return spare[0]
    u1 = 1.0 - uniform(key, k)
    u2 = uniform(key, k + 1)
    r = sqrt(-2.0 * log(u1))
    spare[0] = r * sin(TWO_PI * u2)
    return r * cos(TWO_PI * u2)


cdef inline double table_eval(double x, double lo, double dx, const double[::1] tab) noexcept nogil:
    cdef Py_ssize_t n = tab.shape[0]
    cdef double s = (x - lo) / dx
    cdef Py_ssize_t i
    cdef double f
    if s <= 0.0:
        return tab[0]
    if s >= n - 1:
        return tab[n - 1]
    i = <Py_ssize_t>floor(s)
    f = s - i
    return tab[i] + f * (tab[i + 1] - tab[i])


cdef inline double drift_eval(double x, double lo, double dx, const double[::1] tab,
                              const double[::1] tail) noexcept nogil:
    # tail = [c0, c1, c2, r] for the left side then the right side; beyond the table
    # the drift is c0 + c1*x + c2/(x - r)
    cdef Py_ssize_t n = tab.shape[0]
    cdef double hi = lo + (n - 1) * dx
    cdef double d
    if x < lo:
        d = tail[0] + tail[1] * x
        if tail[2] != 0.0:
            d += tail[2] / (x - tail[3])
        return d
    if x > hi:
        d = tail[4] + tail[5] * x
        if tail[6] != 0.0:
            d += tail[6] / (x - tail[7])
        return d
    return table_eval(x, lo, dx, tab)


def fill_normals(uint64_t seed, int64_t path0, double[:, ::1] out):
    cdef Py_ssize_t i, k
    cdef uint64_t key
    cdef double spare = 0.0
    with nogil:
        for i in range(out.shape[0]):
            key = path_key(seed, <uint64_t>(path0 + i))
            for k in range(out.shape[1]):
                out[i, k] = normal(key, <uint64_t>k, &spare)


def killed_bm(uint64_t seed, int64_t path0, double x0, double dt, int64_t n_steps,
              double tlo, double tdx, const double[::1] tab,
              const double[::1] atom_loc, const double[::1] atom_mass, double eps,
              double[::1] logw, double[::1] logw2, double[::1] xend):
    """Log Feynman-Kac weight of Brownian paths from ``x0``.

    The density part is a trapezoid sum of ``-V/2 dt``; each atom contributes
    ``-(m/2)`` times the band occupation estimate ``|{s: |B_s - a| < eps}|/(2 eps)``
    (also trapezoidal in time).  ``logw2`` repeats the computation with band ``2 eps``.
    """
    cdef Py_ssize_t i, j, na = atom_loc.shape[0]
    cdef int64_t k
    cdef uint64_t key
    cdef double x, xn, vd, vdn, acc, occ, occ2, d0, d1, spare = 0.0
    cdef double sq = sqrt(dt), inv2e = 0.5 / eps, eps2 = 2.0 * eps
    with nogil:
        for i in range(logw.shape[0]):
            key = path_key(seed, <uint64_t>(path0 + i))
            x = x0
            vd = table_eval(x, tlo, tdx, tab)
            acc = 0.0
            occ = 0.0
            occ2 = 0.0
            for k in range(n_steps):
                xn = x + sq * normal(key, <uint64_t>k, &spare)
                vdn = table_eval(xn, tlo, tdx, tab)
                acc += 0.5 * (vd + vdn)
                for j in range(na):
                    d0 = fabs(x - atom_loc[j])
                    d1 = fabs(xn - atom_loc[j])
                    occ += 0.5 * atom_mass[j] * ((d0 < eps) + (d1 < eps))
                    occ2 += 0.5 * atom_mass[j] * ((d0 < eps2) + (d1 < eps2))
                x = xn
                vd = vdn
            logw[i] = -0.5 * dt * (acc + occ * inv2e)
            logw2[i] = -0.5 * dt * (acc + occ2 * 0.5 * inv2e)
            xend[i] = x


def em_paths(uint64_t seed, int64_t path0, double[::1] x, double dt, int64_t n_steps,
             double tlo, double tdx, const double[::1] tab, const double[::1] tail,
             double bes_b, int reflect):
    """Euler-Maruyama for dX = dB + b(X) dt (+ bes_b/X dt), updating ``x`` in place."""
    cdef Py_ssize_t i
    cdef int64_t k
    cdef uint64_t key
    cdef double xi, d, sq = sqrt(dt), spare = 0.0
    with nogil:
        for i in range(x.shape[0]):
            key = path_key(seed, <uint64_t>(path0 + i))
            xi = x[i]
            for k in range(n_steps):
                d = drift_eval(xi, tlo, tdx, tab, tail)
                if bes_b != 0.0:
                    d += bes_b / xi
                xi = xi + d * dt + sq * normal(key, <uint64_t>k, &spare)
                if reflect:
                    xi = fabs(xi)
            x[i] = xi


def em_exit(uint64_t seed, int64_t path0, double x0, double dt_min, double dt_scale,
            double core_lo, double core_hi, double lo, double hi, int64_t max_steps,
            double tlo, double tdx, const double[::1] tab, const double[::1] tail,
            int8_t[::1] side, double[::1] texit):
    """First exit of ``[lo, hi]`` with step ``max(dt_min, dt_scale * dist^2)``.

    ``dist`` is the distance to ``[core_lo, core_hi]``, the region where the drift
    varies on the unit scale.  ``side`` is +1/-1 for the exit end, 0 if unfinished.
    """
    cdef Py_ssize_t i
    cdef int64_t k
    cdef uint64_t key
    cdef double xi, t, h, dist, spare = 0.0
    with nogil:
        for i in range(side.shape[0]):
            key = path_key(seed, <uint64_t>(path0 + i))
            xi = x0
            t = 0.0
            side[i] = 0
            for k in range(max_steps):
                dist = 0.0
                if xi < core_lo:
                    dist = core_lo - xi
                elif xi > core_hi:
                    dist = xi - core_hi
                h = dt_scale * dist * dist
                if h < dt_min:
                    h = dt_min
                xi = xi + drift_eval(xi, tlo, tdx, tab, tail) * h + sqrt(h) * normal(key, <uint64_t>k, &spare)
                t += h
                if xi >= hi:
                    side[i] = 1
                    break
                if xi <= lo:
                    side[i] = -1
                    break
            texit[i] = t


def bessel_integral(uint64_t seed, int64_t path0, double x0, double t_end, int dim,
                    double mu, double h_rel, double dt_max, double kill_level,
                    double[::1] integral, double[::1] rend):
    """``int_0^t ds / R_s^2`` along Bessel paths started at ``x0 > 0``.

    ``dim`` in 1..3 uses exact Gaussian steps of a ``dim``-dimensional Brownian
    motion (its norm is Bessel of index ``dim/2 - 1``); ``dim == 0`` falls back to
    Euler steps of the Bessel SDE of index ``mu`` with reflection.  The step is
    ``min(h_rel R^2, dt_max)``.  Paths that change sign (dim 1) or whose integral
    exceeds ``kill_level`` are recorded as ``+inf``.
    """
    cdef Py_ssize_t i, j
    cdef uint64_t key, c
    cdef double r2, r2n, t, h, acc, sq, b = mu + 0.5, z, spare = 0.0
    cdef double coords[3]
    with nogil:
        for i in range(integral.shape[0]):
            key = path_key(seed, <uint64_t>(path0 + i))
            c = 0
            t = 0.0
            acc = 0.0
            coords[0] = x0
            coords[1] = 0.0
            coords[2] = 0.0
            r2 = x0 * x0
            while t < t_end:
                h = h_rel * r2
                if h > dt_max:
                    h = dt_max
                if t + h > t_end:
                    h = t_end - t
                sq = sqrt(h)
                if dim >= 1:
                    r2n = 0.0
                    for j in range(dim):
                        z = coords[j] + sq * normal(key, c, &spare)
                        c += 1
                        if dim == 1 and z * coords[0] <= 0.0:
                            acc = INFINITY
                        coords[j] = z
                        r2n = r2n + z * z
                    if acc == INFINITY:
                        break
                else:
                    z = sqrt(r2)
                    z = fabs(z + b / z * h + sq * normal(key, c, &spare))
                    c += 1
                    r2n = z * z
                acc += 0.5 * h * (1.0 / r2 + 1.0 / r2n)
                r2 = r2n
                t += h
                if acc > kill_level:
                    acc = INFINITY
                    break
            integral[i] = acc
            rend[i] = sqrt(r2)


def propagate(const double[:, :, ::1] M, const double[::1] jump, double y0, double dy0,
              double[::1] val, double[::1] dpre, double[::1] dpost):
    """Chain 2x2 transfer matrices over nodes 0..n.

    ``jump[i]`` is added to the derivative (times the value) when crossing node ``i``;
    ``dpre``/``dpost`` hold the derivative before and after that jump.
    """
    cdef Py_ssize_t i, n = M.shape[0]
    cdef double a, b
    with nogil:
        val[0] = y0
        dpre[0] = dy0
        dpost[0] = dy0 + jump[0] * y0
        for i in range(n):
            a = M[i, 0, 0] * val[i] + M[i, 0, 1] * dpost[i]
            b = M[i, 1, 0] * val[i] + M[i, 1, 1] * dpost[i]
            val[i + 1] = a
            dpre[i + 1] = b
            dpost[i + 1] = b + jump[i + 1] * a
