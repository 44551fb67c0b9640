# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: batch RK4 for the built-in vector fields and
directed Chebyshev (sup-metric) distances between point sets.

The pure-Python twin lives in ``_kernels_py``; both must perform the same
floating-point operations in the same order so results agree bitwise
(the extension is compiled with -ffp-contract=off for this reason).
"""

from libc.math cimport INFINITY

cdef enum:
    _FAM_PITCHFORK = 0
    _FAM_SEMISTABLE = 1
    _FAM_LORENZ = 2

FAM_PITCHFORK = _FAM_PITCHFORK
FAM_SEMISTABLE = _FAM_SEMISTABLE
FAM_LORENZ = _FAM_LORENZ

BACKEND = "cython"


cdef inline double _f_pitchfork(double lam, double x) noexcept nogil:
    return lam * x - x * x * x


cdef inline double _f_semistable(double lam, double x) noexcept nogil:
    cdef double u = x - 1.0
    return -(u * u * (x + 1.0)) + lam


cdef long _one_scalar(int fam, double lam, double* xp, long n_steps, double dt,
                      double last_dt, double lo, double hi) noexcept nogil:
    """Integrate a single 1-D state; returns the 1-based step count of
    first escape from [lo, hi], or -1."""
    cdef double x = xp[0]
    cdef double k1, k2, k3, k4, h
    cdef long k, total
    total = n_steps + (1 if last_dt > 0.0 else 0)
    for k in range(1, total + 1):
        h = dt if k <= n_steps else last_dt
        if fam == _FAM_PITCHFORK:
            k1 = _f_pitchfork(lam, x)
            k2 = _f_pitchfork(lam, x + (0.5 * h) * k1)
            k3 = _f_pitchfork(lam, x + (0.5 * h) * k2)
            k4 = _f_pitchfork(lam, x + h * k3)
        else:
            k1 = _f_semistable(lam, x)
            k2 = _f_semistable(lam, x + (0.5 * h) * k1)
            k3 = _f_semistable(lam, x + (0.5 * h) * k2)
            k4 = _f_semistable(lam, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if x < lo or x > hi:
            xp[0] = x
            return k
    xp[0] = x
    return -1


cdef long _one_lorenz(double rho, double* xp, long n_steps, double dt,
                      double last_dt, double* lo, double* hi) noexcept nogil:
    cdef double x = xp[0], y = xp[1], z = xp[2]
    cdef double ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz
    cdef double tx, ty, tz, h, q
    cdef long k, total
    total = n_steps + (1 if last_dt > 0.0 else 0)
    for k in range(1, total + 1):
        h = dt if k <= n_steps else last_dt
        ax = 10.0 * (y - x)
        ay = x * (rho - z) - y
        az = x * y - (8.0 / 3.0) * z
        q = 0.5 * h
        tx = x + q * ax; ty = y + q * ay; tz = z + q * az
        bx = 10.0 * (ty - tx)
        by = tx * (rho - tz) - ty
        bz = tx * ty - (8.0 / 3.0) * tz
        tx = x + q * bx; ty = y + q * by; tz = z + q * bz
        cx = 10.0 * (ty - tx)
        cy = tx * (rho - tz) - ty
        cz = tx * ty - (8.0 / 3.0) * tz
        tx = x + h * cx; ty = y + h * cy; tz = z + h * cz
        dx = 10.0 * (ty - tx)
        dy = tx * (rho - tz) - ty
        dz = tx * ty - (8.0 / 3.0) * tz
        q = h / 6.0
        x = x + q * (ax + 2.0 * bx + 2.0 * cx + dx)
        y = y + q * (ay + 2.0 * by + 2.0 * cy + dy)
        z = z + q * (az + 2.0 * bz + 2.0 * cz + dz)
        if (x < lo[0] or x > hi[0] or y < lo[1] or y > hi[1]
                or z < lo[2] or z > hi[2]):
            xp[0] = x; xp[1] = y; xp[2] = z
            return k
    xp[0] = x; xp[1] = y; xp[2] = z
    return -1


def rk4_integrate(int fam, double lam, double[:, ::1] x, long n_steps,
                  double dt, double last_dt,
                  double[::1] lo, double[::1] hi, long[::1] esc):
    """Integrate every row of ``x`` in place.

    Performs ``n_steps`` steps of size ``dt`` plus one step of ``last_dt``
    when it is positive.  After each step the state is checked against the
    box [lo, hi]; on first exit ``esc[i]`` is set to the 1-based step count
    and the row stops integrating (keeping its exit state).  ``esc`` must
    be initialised to -1.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    with nogil:
        if fam == _FAM_LORENZ:
            for i in range(n):
                if esc[i] == -1:
                    esc[i] = _one_lorenz(lam, &x[i, 0], n_steps, dt, last_dt,
                                         &lo[0], &hi[0])
        else:
            for i in range(n):
                if esc[i] == -1:
                    esc[i] = _one_scalar(fam, lam, &x[i, 0], n_steps, dt,
                                         last_dt, lo[0], hi[0])


def directed_chebyshev(double[:, ::1] a, double[:, ::1] b):
    """max over rows of ``a`` of the min Chebyshev distance to rows of ``b``.

    Uses the standard early-break: once the running minimum for a row drops
    to the current maximum, that row cannot raise the result.
    """
    cdef Py_ssize_t na = a.shape[0]
    cdef Py_ssize_t nb = b.shape[0]
    cdef int d = a.shape[1]
    cdef Py_ssize_t i, k
    cdef int j
    cdef double best = 0.0
    cdef double dmin, dist, c
    if nb == 0:
        raise ValueError("empty target point set")
    with nogil:
        for i in range(na):
            dmin = INFINITY
            for k in range(nb):
                dist = 0.0
                for j in range(d):
                    c = a[i, j] - b[k, j]
                    if c < 0.0:
                        c = -c
                    if c > dist:
                        dist = c
                if dist < dmin:
                    dmin = dist
                    if dmin <= best:
                        break
            if dmin > best:
                best = dmin
    return best
