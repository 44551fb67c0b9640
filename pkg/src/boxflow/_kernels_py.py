"""Pure-Python (numpy) twin of the compiled kernels in ``_kernels.pyx``.

Selected at import time by :mod:`boxflow.backend` when the extension is
unavailable or explicitly disabled.  The arithmetic mirrors the compiled
code operation for operation so both backends produce identical bits.
"""

import numpy as np

FAM_PITCHFORK = 0
FAM_SEMISTABLE = 1
FAM_LORENZ = 2

BACKEND = "python"


def _field_pitchfork(lam, x):
    return lam * x - x * x * x


def _field_semistable(lam, x):
    u = x - 1.0
    return -(u * u * (x + 1.0)) + lam


def _field_lorenz(lam, x):
    out = np.empty_like(x)
    out[:, 0] = 10.0 * (x[:, 1] - x[:, 0])
    out[:, 1] = x[:, 0] * (lam - x[:, 2]) - x[:, 1]
    out[:, 2] = x[:, 0] * x[:, 1] - (8.0 / 3.0) * x[:, 2]
    return out


_FIELDS = {
    FAM_PITCHFORK: _field_pitchfork,
    FAM_SEMISTABLE: _field_semistable,
    FAM_LORENZ: _field_lorenz,
}


def _rk4_step(field, lam, h, x):
    k1 = field(lam, x)
    k2 = field(lam, x + (0.5 * h) * k1)
    k3 = field(lam, x + (0.5 * h) * k2)
    k4 = field(lam, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(fam, lam, x, n_steps, dt, last_dt, lo, hi, esc):
    """Same contract as the compiled version: integrates rows of ``x`` in
    place, recording the 1-based step count of first escape in ``esc``."""
    field = _FIELDS[fam]
    total = n_steps + (1 if last_dt > 0.0 else 0)
    active = np.flatnonzero(esc == -1)
    for k in range(1, total + 1):
        if active.size == 0:
            break
        h = dt if k <= n_steps else last_dt
        xa = _rk4_step(field, lam, h, x[active])
        x[active] = xa
        out = ((xa < lo) | (xa > hi)).any(axis=1)
        if out.any():
            esc[active[out]] = k
            active = active[~out]


def directed_chebyshev(a, b, chunk=512):
    """max over rows of ``a`` of the min Chebyshev distance to rows of ``b``."""
    if b.shape[0] == 0:
        raise ValueError("empty target point set")
    best = 0.0
    for start in range(0, a.shape[0], chunk):
        blk = a[start:start + chunk]
        d = np.abs(blk[:, None, :] - b[None, :, :]).max(axis=2).min(axis=1)
        m = d.max()
        if m > best:
            best = float(m)
    return best
