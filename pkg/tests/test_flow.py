"""Integrator semantics: closed-form accuracy, semigroup axioms, escape
handling, and parameter continuity."""

import numpy as np
import pytest

import boxflow.flow as fl
from boxflow.errors import DomainEscapeError, UsageError
from boxflow.flow import (
    FAMILIES,
    IntegratorConfig,
    SystemFamily,
    check_param_continuity,
    check_semigroup,
    escape_box,
    evolve,
    get_family,
    integrate_batch,
    vector_field,
)

CFG = IntegratorConfig(dt=1e-3)
PF = get_family("pitchfork")
SS = get_family("semistable")
LZ = get_family("lorenz")


def pitchfork_exact(lam, x0, t):
    """Closed-form solution of x' = lam*x - x^3."""
    if lam == 0.0:
        return x0 / np.sqrt(1.0 + 2.0 * x0 * x0 * t)
    e = np.exp(lam * t)
    return x0 * e / np.sqrt(1.0 + (x0 * x0 / lam) * (e * e - 1.0))


# -- fields and registry ----------------------------------------------


def test_registry():
    assert set(FAMILIES) == {"pitchfork", "semistable", "lorenz"}
    with pytest.raises(UsageError):
        get_family("vanderpol")


def test_vector_field_values():
    assert vector_field(PF, 1.0, [0.5]) == pytest.approx([0.375])
    # equilibria of the pitchfork at lam = 1: x in {0, +-1}
    for x in (0.0, 1.0, -1.0):
        assert vector_field(PF, 1.0, [x]) == pytest.approx([0.0], abs=1e-15)
    # semistable at lam=0: double root at x=1, simple root at x=-1
    assert vector_field(SS, 0.0, [1.0]) == pytest.approx([0.0], abs=1e-15)
    assert vector_field(SS, 0.0, [-1.0]) == pytest.approx([0.0], abs=1e-15)
    assert vector_field(SS, 0.0, [0.0]) == pytest.approx([-1.0])
    # lorenz fixed point at the origin
    assert vector_field(LZ, 28.0, [0.0, 0.0, 0.0]) == pytest.approx([0.0, 0.0, 0.0])
    assert vector_field(LZ, 28.0, [1.0, 1.0, 1.0]) == pytest.approx([0.0, 26.0, 1.0 - 8.0 / 3.0])


def test_vector_field_shape_check():
    with pytest.raises(UsageError):
        vector_field(LZ, 28.0, [1.0, 2.0])
    with pytest.raises(UsageError):
        vector_field(PF, 1.0, [np.nan])


def test_config_validation():
    with pytest.raises(UsageError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(UsageError):
        IntegratorConfig(dt=0.01, method="euler")
    with pytest.raises(UsageError):
        IntegratorConfig(dt=0.01, escape_factor=-1.0)


def test_builtin_dt_guard():
    with pytest.raises(UsageError):
        evolve(PF, 1.0, [0.1], 1.0, IntegratorConfig(dt=0.2))


def test_escape_box_geometry():
    lo, hi = escape_box(PF, 0.5)
    assert lo == pytest.approx([-4.5]) and hi == pytest.approx([4.5])
    lo, hi = escape_box(LZ, 1.0)
    assert lo == pytest.approx([-50.0, -60.0, -35.0])
    assert hi == pytest.approx([50.0, 60.0, 85.0])


# -- evolve: identity, accuracy, determinism --------------------------


def test_evolve_time_zero_bit_exact():
    x0 = np.asarray([0.123456789])
    assert evolve(PF, 1.0, x0, 0.0, CFG)[0] == x0[0]
    y0 = np.asarray([1.1, -2.2, 3.3])
    assert (evolve(LZ, 28.0, y0, 0.0, CFG) == y0).all()


def test_evolve_matches_pitchfork_closed_form():
    for lam in (0.5, 1.0, 2.0):
        for x0 in (0.1, -0.7, 2.0):
            got = evolve(PF, lam, [x0], 3.0, CFG)[0]
            assert got == pytest.approx(pitchfork_exact(lam, x0, 3.0), abs=1e-10)


def test_evolve_matches_lam_zero_closed_form():
    got = evolve(PF, 0.0, [1.5], 2.0, CFG)[0]
    assert got == pytest.approx(pitchfork_exact(0.0, 1.5, 2.0), abs=1e-10)


def test_evolve_fractional_final_step():
    # t that is not a multiple of dt still lands at the exact time
    t = 0.7531
    got = evolve(PF, 1.0, [0.3], t, IntegratorConfig(dt=0.01))[0]
    assert got == pytest.approx(pitchfork_exact(1.0, 0.3, t), abs=1e-9)


def test_evolve_deterministic():
    a = evolve(LZ, 28.0, [1.0, 2.0, 3.0], 5.0, IntegratorConfig(dt=0.01))
    b = evolve(LZ, 28.0, [1.0, 2.0, 3.0], 5.0, IntegratorConfig(dt=0.01))
    assert (a == b).all()


def test_lorenz_low_rho_decays_to_origin():
    # rho < 1: the origin is globally asymptotically stable
    end = evolve(LZ, 0.5, [10.0, -8.0, 20.0], 50.0, IntegratorConfig(dt=0.01, escape_factor=1.0))
    assert np.abs(end).max() < 1e-6


def test_semistable_equilibria():
    # lam=0: x=1 is semistable, x=-1 attracts from the left
    assert evolve(SS, 0.0, [1.0], 10.0, CFG)[0] == pytest.approx(1.0, abs=1e-12)
    assert evolve(SS, 0.0, [-2.0], 50.0, CFG)[0] == pytest.approx(-1.0, abs=1e-6)
    # starting just below the double root drains to -1
    assert evolve(SS, 0.0, [0.9], 2000.0, IntegratorConfig(dt=0.05))[0] == pytest.approx(-1.0, abs=1e-6)


def test_semistable_perturbed_equilibrium():
    # lam=-0.05 destroys the double root; the unique equilibrium solves
    # (x-1)^2 (x+1) = -0.05 near x = -1
    got = evolve(SS, -0.05, [2.0], 300.0, IntegratorConfig(dt=0.05))[0]
    roots = np.roots([1.0, -1.0, -1.0, 1.0 + 0.05])
    eq = min(r.real for r in roots if abs(r.imag) < 1e-9)
    assert got == pytest.approx(eq, abs=1e-8)


def test_evolve_negative_time_rejected():
    with pytest.raises(UsageError):
        evolve(PF, 1.0, [0.1], -1.0, CFG)


# -- escape handling --------------------------------------------------


GROW = SystemFamily(
    name="grow",
    state_dim=1,
    param_dim=1,
    default_domain=((-3.0, 3.0),),
    field=lambda lam, x: lam[0] * x,
    param_range=(0.0, 5.0),
)


def test_custom_family_generic_path():
    # exponential growth, integrated through the generic numpy path
    got = evolve(GROW, 0.5, [0.1], 2.0, IntegratorConfig(dt=1e-3))[0]
    assert got == pytest.approx(0.1 * np.exp(1.0), abs=1e-9)


def test_custom_family_escape():
    # x' = x from x0=1 exits [-4.5, 4.5] at t = ln(4.5) ~ 1.504
    with pytest.raises(DomainEscapeError) as exc:
        evolve(GROW, 1.0, [1.0], 5.0, IntegratorConfig(dt=1e-3))
    assert exc.value.time == pytest.approx(np.log(4.5), abs=0.01)


def test_integrate_batch_escape_times():
    x = np.asarray([[1.0], [0.0]])
    states, esc = integrate_batch(GROW, 1.0, x, 5.0, IntegratorConfig(dt=1e-3))
    assert not np.isnan(esc[0]) and np.isnan(esc[1])
    assert states[1, 0] == 0.0
    assert states[0, 0] > 4.5  # escaped rows keep their exit state


def test_generic_path_matches_compiled_builtin():
    # a custom family with the pitchfork field must agree with the built-in
    custom = SystemFamily(
        name="pf-generic", state_dim=1, param_dim=1,
        default_domain=((-3.0, 3.0),),
        field=lambda lam, x: lam[0] * x - x * x * x,
        param_range=(-2.0, 2.0),
    )
    x0 = np.linspace(-2.5, 2.5, 11).reshape(-1, 1)
    cfg = IntegratorConfig(dt=0.01)
    a, _ = integrate_batch(PF, 1.3, x0, 4.0, cfg)
    b, _ = integrate_batch(custom, 1.3, x0, 4.0, cfg)
    assert (a == b).all()


def test_param_dim_mismatch():
    with pytest.raises(UsageError):
        integrate_batch(PF, (1.0, 2.0), np.zeros((1, 1)), 1.0, CFG)


# -- semigroup checks -------------------------------------------------


def test_semigroup_zero_times():
    states = np.linspace(-2, 2, 7).reshape(-1, 1)
    assert check_semigroup(PF, 1.0, states, 0.0, 0.0, CFG) == 0.0


def test_semigroup_exact_split():
    # when t and s are both multiples of dt, the two paths take identical
    # steps, so the defect is exactly zero
    states = np.linspace(-2, 2, 9).reshape(-1, 1)
    assert check_semigroup(PF, 1.0, states, 0.3, 0.7, IntegratorConfig(dt=0.01)) == 0.0
    assert check_semigroup(SS, 0.1, states, 1.0, 2.0, IntegratorConfig(dt=0.01)) == 0.0


def test_semigroup_lorenz(rng):
    pts = rng.uniform([-20, -25, 0], [20, 25, 50], size=(50, 3))
    cfg = IntegratorConfig(dt=1e-3, escape_factor=2.0)
    assert check_semigroup(LZ, 28.0, pts, 1.0, 1.0, cfg) <= 1e-6


def test_semigroup_negative_times():
    with pytest.raises(UsageError):
        check_semigroup(PF, 1.0, np.zeros((1, 1)), -1.0, 1.0, CFG)


# -- parameter continuity ---------------------------------------------


def test_param_continuity_zero_offset():
    states = np.linspace(-2, 2, 9).reshape(-1, 1)
    table = check_param_continuity(PF, 1.0, [0.0], states, 1.0, CFG)
    assert table[0.0] == 0.0


def test_param_continuity_small_and_monotone():
    states = np.linspace(-2, 2, 17).reshape(-1, 1)
    hs = [0.001, 0.005, 0.01, 0.05]
    table = check_param_continuity(PF, 1.0, hs, states, 1.0, IntegratorConfig(dt=0.01))
    vals = [table[h] for h in hs]
    assert 0.0 < vals[-1] <= 0.05
    # deviation grows with the offset magnitude
    assert all(a < b for a, b in zip(vals, vals[1:]))
