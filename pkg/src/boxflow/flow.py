"""Parametrized vector-field families and their time-t solution maps.

Evolution is fixed-step classical RK4 (the only method in v1); a final
shortened step makes the total integration time exactly t.  Everything
here is a pure function of its arguments, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import backend
from ._kernels_py import _FIELDS as _BATCH_FIELDS
from .errors import DomainEscapeError, UsageError

BUILTIN_DT_CAP = 0.1


@dataclass(frozen=True)
class SystemFamily:
    """A family of vector fields x' = f(lambda, x) on a rectangular domain.

    ``field`` maps (lambda coords, states of shape (n, d)) to derivatives of
    the same shape.  ``kernel_id`` routes built-in families to the compiled
    integrator; custom families integrate through the generic numpy path.
    """

    name: str
    state_dim: int
    param_dim: int
    default_domain: tuple[tuple[float, float], ...]
    field: Callable[[np.ndarray, np.ndarray], np.ndarray]
    param_range: tuple[float, float]
    kernel_id: Optional[int] = None

    @property
    def domain_lower(self) -> np.ndarray:
        return np.asarray([b[0] for b in self.default_domain])

    @property
    def domain_upper(self) -> np.ndarray:
        return np.asarray([b[1] for b in self.default_domain])


@dataclass(frozen=True)
class ParamPoint:
    """A parameter value; coords has length family.param_dim."""

    coords: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(v) for v in np.atleast_1d(np.asarray(self.coords, dtype=float))))
        if not all(np.isfinite(v) for v in self.coords):
            raise UsageError(f"parameter coordinates must be finite, got {self.coords}")

    @property
    def scalar(self) -> float:
        if len(self.coords) != 1:
            raise UsageError("scalar parameter requested from a multi-dim point")
        return self.coords[0]


def as_param(lam) -> ParamPoint:
    if isinstance(lam, ParamPoint):
        return lam
    return ParamPoint(tuple(np.atleast_1d(np.asarray(lam, dtype=float))))


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed time step plus the escape-box fattening factor.

    The escape box is the family domain fattened by ``escape_factor`` times
    the half-width on each axis; leaving it aborts integration with
    :class:`DomainEscapeError`.
    """

    dt: float
    method: str = "rk4"
    escape_factor: float = 0.5

    def __post_init__(self):
        if self.dt <= 0:
            raise UsageError(f"dt must be positive, got {self.dt}")
        if self.method != "rk4":
            raise UsageError(f"unsupported method {self.method!r} (v1 is rk4 only)")
        if self.escape_factor < 0:
            raise UsageError("escape_factor must be nonnegative")


def _pitchfork_field(lam, x):
    return _BATCH_FIELDS[backend.FAM_PITCHFORK](lam[0], x)


def _semistable_field(lam, x):
    return _BATCH_FIELDS[backend.FAM_SEMISTABLE](lam[0], x)


def _lorenz_field(lam, x):
    return _BATCH_FIELDS[backend.FAM_LORENZ](lam[0], x)


FAMILIES: dict[str, SystemFamily] = {
    "pitchfork": SystemFamily(
        name="pitchfork",
        state_dim=1,
        param_dim=1,
        default_domain=((-3.0, 3.0),),
        field=_pitchfork_field,
        param_range=(-2.0, 2.0),
        kernel_id=backend.FAM_PITCHFORK,
    ),
    "semistable": SystemFamily(
        name="semistable",
        state_dim=1,
        param_dim=1,
        default_domain=((-3.0, 3.0),),
        field=_semistable_field,
        param_range=(-1.0, 1.0),
        kernel_id=backend.FAM_SEMISTABLE,
    ),
    "lorenz": SystemFamily(
        name="lorenz",
        state_dim=3,
        param_dim=1,
        default_domain=((-25.0, 25.0), (-30.0, 30.0), (-5.0, 55.0)),
        field=_lorenz_field,
        param_range=(0.0, 30.0),
        kernel_id=backend.FAM_LORENZ,
    ),
}


def get_family(name: str) -> SystemFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise UsageError(f"unknown family {name!r}; known: {sorted(FAMILIES)}") from None


def escape_box(family: SystemFamily, factor: float) -> tuple[np.ndarray, np.ndarray]:
    lo = family.domain_lower
    hi = family.domain_upper
    half = 0.5 * (hi - lo)
    return lo - factor * half, hi + factor * half


def vector_field(family: SystemFamily, lam, x) -> np.ndarray:
    """Evaluate f(lambda, x) for a single state."""
    lam = as_param(lam)
    x = np.asarray(x, dtype=float)
    if x.shape != (family.state_dim,):
        raise UsageError(f"state shape {x.shape} does not match state_dim={family.state_dim}")
    if not np.isfinite(x).all():
        raise UsageError("state must be finite")
    return family.field(np.asarray(lam.coords), x.reshape(1, -1))[0]


def _split_steps(t: float, dt: float) -> tuple[int, float]:
    """Number of full dt steps plus the shortened final step (0 if t is an
    exact multiple of dt up to rounding)."""
    n = int(np.floor(t / dt + 1e-9))
    rem = t - n * dt
    if rem <= dt * 1e-9:
        rem = 0.0
    return n, rem


def integrate_batch(family: SystemFamily, lam, x, t: float, cfg: IntegratorConfig):
    """Integrate rows of ``x`` for time t.  Returns (states, esc_times)
    where esc_times[i] is nan when row i never left the escape box,
    otherwise the (approximate) exit time; escaped rows hold their exit
    state.  Does not raise on escape -- callers decide."""
    lam = as_param(lam)
    if len(lam.coords) != family.param_dim:
        raise UsageError("parameter dimension mismatch")
    x = np.ascontiguousarray(np.asarray(x, dtype=float).reshape(-1, family.state_dim))
    if t < 0:
        raise UsageError("integration time must be nonnegative")
    if family.kernel_id is not None and cfg.dt > BUILTIN_DT_CAP:
        raise UsageError(f"dt={cfg.dt} exceeds the stability guard {BUILTIN_DT_CAP} for built-in families")
    if t == 0:
        return x.copy(), np.full(x.shape[0], np.nan)
    n, last = _split_steps(t, cfg.dt)
    lo, hi = escape_box(family, cfg.escape_factor)
    out = x.copy()
    esc = np.full(out.shape[0], -1, dtype=np.int64)
    if family.kernel_id is not None:
        backend.rk4_integrate(family.kernel_id, lam.scalar, out, n, cfg.dt, last,
                              np.ascontiguousarray(lo, dtype=float),
                              np.ascontiguousarray(hi, dtype=float), esc)
    else:
        _rk4_generic(family.field, np.asarray(lam.coords), out, n, cfg.dt, last, lo, hi, esc)
    esc_times = np.full(out.shape[0], np.nan)
    hit = esc >= 0
    if hit.any():
        k = esc[hit].astype(float)
        esc_times[hit] = np.where(esc[hit] <= n, k * cfg.dt, n * cfg.dt + last)
    return out, esc_times


def _rk4_generic(field, lam_coords, x, n_steps, dt, last_dt, lo, hi, esc):
    """Generic-callable twin of the backend integrator, for custom families."""
    total = n_steps + (1 if last_dt > 0.0 else 0)
    active = np.flatnonzero(esc == -1)
    for k in range(1, total + 1):
        if active.size == 0:
            break
        h = dt if k <= n_steps else last_dt
        xa = x[active]
        k1 = field(lam_coords, xa)
        k2 = field(lam_coords, xa + (0.5 * h) * k1)
        k3 = field(lam_coords, xa + (0.5 * h) * k2)
        k4 = field(lam_coords, xa + h * k3)
        xa = xa + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x[active] = xa
        out = ((xa < lo) | (xa > hi)).any(axis=1)
        if out.any():
            esc[active[out]] = k
            active = active[~out]


def evolve(family: SystemFamily, lam, x0, t: float, cfg: IntegratorConfig) -> np.ndarray:
    """Approximate the time-t solution map applied to x0.

    t=0 returns x0 exactly.  Raises :class:`DomainEscapeError` with the
    exit time and state if the trajectory leaves the escape box.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (family.state_dim,):
        raise UsageError(f"state shape {x0.shape} does not match state_dim={family.state_dim}")
    states, esc = integrate_batch(family, lam, x0.reshape(1, -1), t, cfg)
    if not np.isnan(esc[0]):
        raise DomainEscapeError(float(esc[0]), states[0], lam=as_param(lam).coords)
    return states[0]


def check_semigroup(family: SystemFamily, lam, states, t: float, s: float,
                    cfg: IntegratorConfig) -> float:
    """Max sup-norm defect between the one-shot t+s map and the composition
    of the time-s and time-t maps over the sample states."""
    if t < 0 or s < 0:
        raise UsageError("times must be nonnegative")
    states = np.asarray(states, dtype=float).reshape(-1, family.state_dim)
    one, esc1 = integrate_batch(family, lam, states, t + s, cfg)
    mid, esc2 = integrate_batch(family, lam, states, s, cfg)
    two, esc3 = integrate_batch(family, lam, mid, t, cfg)
    for esc, st in ((esc1, one), (esc2, mid), (esc3, two)):
        bad = ~np.isnan(esc)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DomainEscapeError(float(esc[i]), st[i], lam=as_param(lam).coords)
    if states.shape[0] == 0:
        return 0.0
    return float(np.abs(one - two).max())


def check_param_continuity(family: SystemFamily, lam0, offsets, states, t: float,
                           cfg: IntegratorConfig) -> dict[float, float]:
    """Per offset h, the sup over samples of d_inf(S_{lam0+h}(t)x, S_{lam0}(t)x).

    The table is reported as-is; callers judge it.
    """
    if t <= 0:
        raise UsageError("t must be positive")
    lam0 = as_param(lam0)
    if len(lam0.coords) != 1:
        raise UsageError("offset continuity check supports scalar parameters")
    states = np.asarray(states, dtype=float).reshape(-1, family.state_dim)
    base, esc0 = integrate_batch(family, lam0, states, t, cfg)
    if (~np.isnan(esc0)).any():
        i = int(np.flatnonzero(~np.isnan(esc0))[0])
        raise DomainEscapeError(float(esc0[i]), base[i], lam=lam0.coords)
    table: dict[float, float] = {}
    for h in offsets:
        pert, esc = integrate_batch(family, lam0.scalar + h, states, t, cfg)
        if (~np.isnan(esc)).any():
            i = int(np.flatnonzero(~np.isnan(esc))[0])
            raise DomainEscapeError(float(esc[i]), pert[i], lam=(lam0.scalar + h,))
        table[float(h)] = float(np.abs(pert - base).max()) if states.size else 0.0
    return table
