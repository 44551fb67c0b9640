"""Cover images and their iteration to an attractor approximation."""

import logging

import numpy as np
import pytest

import boxflow.boxset as bx
from boxflow.attractor import (
    SolverSettings,
    absorbing_time,
    approximate_attractor,
    check_invariance,
    default_samples,
    image,
    iterate_image,
)
from boxflow.boxset import BoxCover, GridSpec
from boxflow.errors import (
    DomainEscapeError,
    InternalError,
    NonConvergenceError,
    NotAbsorbedError,
    UsageError,
)
from boxflow.flow import IntegratorConfig, SystemFamily, get_family

PF = get_family("pitchfork")
SS = get_family("semistable")
CFG = IntegratorConfig(dt=0.01)
G = GridSpec((-3.0,), (3.0,), (256,))


def raster_interval(grid, lo, hi):
    return BoxCover.from_box(grid, [lo], [hi])


def cells_apart(grid, a, b):
    return bx.hausdorff(a, b) / grid.max_width


# -- settings ----------------------------------------------------------


def test_settings_validation():
    with pytest.raises(UsageError):
        SolverSettings(t_step=0.0, dt=0.01)
    with pytest.raises(UsageError):
        SolverSettings(t_step=1.0, dt=0.01, tol_cells=0.5)
    with pytest.raises(UsageError):
        SolverSettings(t_step=1.0, dt=0.01, max_iter=0)
    with pytest.raises(UsageError):
        SolverSettings(t_step=1.0, dt=0.01, consec=0)
    with pytest.raises(UsageError):
        SolverSettings(t_step=1.0, dt=0.01, samples_per_axis=1)
    s = SolverSettings(t_step=1.0, dt=0.01, tol_cells=2.0)
    assert s.tol_for(G) == pytest.approx(2.0 * G.max_width)


def test_default_samples():
    assert default_samples(1) == 3
    assert default_samples(2) == 3
    assert default_samples(3) == 2


# -- single images -----------------------------------------------------


def test_image_validation():
    c = raster_interval(G, -0.5, 0.5)
    with pytest.raises(UsageError):
        image(c, PF, 1.0, 0.0, CFG)
    with pytest.raises(UsageError):
        image(BoxCover.empty(G), PF, 1.0, 1.0, CFG)
    g2 = GridSpec((0.0, 0.0), (1.0, 1.0), (4, 4))
    with pytest.raises(UsageError):
        image(BoxCover.full(g2), PF, 1.0, 1.0, CFG)  # dim mismatch
    with pytest.raises(UsageError):
        image(c, PF, 1.0, 1.0, CFG, samples_per_axis=1)


def test_image_of_equilibrium_cell_stays_put():
    # a small neighborhood of the stable equilibrium x=1 maps into itself
    c = raster_interval(G, 0.95, 1.05)
    img = image(c, PF, 1.0, 1.0, CFG)
    assert bx.subset(raster_interval(G, 1.0, 1.0), img)
    assert bx.subset(img, bx.fatten(c, G.max_width))


def test_image_contracts_toward_equilibrium():
    c = raster_interval(G, 1.5, 2.5)
    img = image(c, PF, 1.0, 5.0, CFG)
    target = bx.fatten(raster_interval(G, 1.0, 1.0), 2 * G.max_width)
    assert bx.subset(img, bx.fatten(target, 2 * G.max_width))


def test_image_monotone_in_cover():
    small = raster_interval(G, -0.5, 0.5)
    big = raster_interval(G, -1.5, 1.5)
    assert bx.subset(image(small, PF, 1.0, 1.0, CFG), image(big, PF, 1.0, 1.0, CFG))


def test_image_discards_and_warns_outside_grid(caplog):
    # on a grid strictly inside the basin of x=1, samples flow out of the
    # grid (but stay in the escape box) and are dropped with a warning
    g = GridSpec((-0.5,), (0.5,), (64,))
    c = BoxCover.from_box(g, [0.2], [0.5])
    with caplog.at_level(logging.WARNING, logger="boxflow.attractor"):
        img = image(c, PF, 1.0, 1.0, CFG)
    assert any("discarded" in r.message for r in caplog.records)
    assert not img.is_empty


def test_image_all_samples_leaving_is_internal_error():
    g = GridSpec((0.2,), (0.5,), (16,))
    with pytest.raises(InternalError):
        image(BoxCover.full(g), PF, 1.0, 5.0, CFG)


def test_image_escape_raises_with_context():
    grow = SystemFamily(
        name="grow", state_dim=1, param_dim=1,
        default_domain=((-3.0, 3.0),),
        field=lambda lam, x: lam[0] * x, param_range=(0.0, 5.0),
    )
    g = GridSpec((-3.0,), (3.0,), (64,))
    with pytest.raises(DomainEscapeError) as exc:
        image(BoxCover.full(g), grow, 1.0, 3.0, IntegratorConfig(dt=0.01))
    assert exc.value.cell is not None and exc.value.sample is not None


def test_iterate_image_composes():
    c = raster_interval(G, -2.0, 2.0)
    two = iterate_image(c, PF, 1.0, 1.0, 2, CFG)
    assert two == image(image(c, PF, 1.0, 1.0, CFG), PF, 1.0, 1.0, CFG)


# -- attractor approximation ------------------------------------------


def test_pitchfork_attractor_interval():
    # lam=1: the attractor is [-1, 1]
    s = SolverSettings(t_step=1.0, dt=0.01, tol_cells=2.0)
    ap = approximate_attractor(PF, 1.0, BoxCover.full(G), s)
    truth = raster_interval(G, -1.0, 1.0)
    assert cells_apart(G, ap.cover, truth) <= 2.0
    assert ap.invariance_defect <= s.tol_for(G) + 2 * G.max_width
    assert ap.t_total == ap.trace.entries[-1].t


def test_pitchfork_attractor_origin():
    # lam=-1: everything drains to the origin
    s = SolverSettings(t_step=2.0, dt=0.01, tol_cells=2.0)
    ap = approximate_attractor(PF, -1.0, BoxCover.full(G), s)
    truth = raster_interval(G, 0.0, 0.0)
    assert cells_apart(G, ap.cover, truth) <= 2.0


def test_trace_is_monotone_in_time():
    s = SolverSettings(t_step=1.0, dt=0.01)
    ap = approximate_attractor(PF, 1.0, BoxCover.full(G), s)
    ts = [e.t for e in ap.trace.entries]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert all(e.step_dist >= 0 for e in ap.trace.entries)
    assert ap.trace.entries[-1].cells == len(ap.cover)


def test_iterates_nest_once_absorbed():
    # seed maps into itself, so iterated images are non-increasing
    c = BoxCover.full(G)
    chain = [c]
    for _ in range(5):
        chain.append(image(chain[-1], PF, 1.0, 1.0, CFG))
    for a, b in zip(chain[1:], chain[2:]):
        assert bx.subset(b, a)


def test_nonconvergence_carries_trace():
    s = SolverSettings(t_step=1.0, dt=0.01, max_iter=1, consec=3)
    with pytest.raises(NonConvergenceError) as exc:
        approximate_attractor(PF, 1.0, BoxCover.full(G), s)
    assert len(exc.value.trace.entries) == 1


def test_empty_seed_rejected():
    with pytest.raises(UsageError):
        approximate_attractor(PF, 1.0, BoxCover.empty(G), SolverSettings(t_step=1.0, dt=0.01))


# -- absorbing time ----------------------------------------------------


def test_absorbing_time_immediate():
    # a forward-invariant target absorbed in one step
    target = raster_interval(G, -1.5, 1.5)
    n = absorbing_time(PF, 1.0, target, target, 1.0, 5, CFG)
    assert n == 1


def test_absorbing_time_pitchfork():
    source = BoxCover.full(G)
    target = raster_interval(G, -1.6, 1.6)
    n = absorbing_time(PF, 1.0, source, target, 1.0, 20, CFG)
    assert 1 <= n <= 10
    # the absorbed iterate really is inside the target
    assert bx.subset(iterate_image(source, PF, 1.0, 1.0, n, CFG), target)


def test_absorbing_time_semistable_ghost():
    # lam just below 0: passage through the saddle-node ghost near x=1
    # takes ~ pi / sqrt(4|lam|) time units, so absorption into a
    # neighborhood of x=-1 is slow
    lam = -0.05
    source = BoxCover.full(G)
    target = raster_interval(G, -1.4, -0.6)
    cfg = IntegratorConfig(dt=0.05)
    with pytest.raises(NotAbsorbedError):
        absorbing_time(SS, lam, source, target, 1.0, 4, cfg)
    n = absorbing_time(SS, lam, source, target, 1.0, 40, cfg)
    ghost = np.pi / np.sqrt(4.0 * abs(lam))  # ~7.0
    assert 0.5 * ghost <= n <= 3.0 * ghost


def test_absorbing_time_empty_target():
    with pytest.raises(UsageError):
        absorbing_time(PF, 1.0, BoxCover.full(G), BoxCover.empty(G), 1.0, 5, CFG)


# -- invariance check --------------------------------------------------


def test_check_invariance_small_for_converged():
    s = SolverSettings(t_step=1.0, dt=0.01)
    ap = approximate_attractor(PF, 1.0, BoxCover.full(G), s)
    assert check_invariance(ap, PF, 1.0, CFG) <= 3 * G.max_width


def test_check_invariance_detects_truncation():
    # negative control: chop off half the attractor and the defect jumps
    s = SolverSettings(t_step=1.0, dt=0.01)
    ap = approximate_attractor(PF, 1.0, BoxCover.full(G), s)
    # claim only the middle of the attractor: points near +-0.5 expand away
    # from the unstable origin, so the one-step image sticks far out
    middle = raster_interval(G, -0.5, 0.5)
    fake = type(ap)(param=ap.param, cover=middle, trace=ap.trace,
                    t_total=ap.t_total, settings=ap.settings, invariance_defect=0.0)
    assert check_invariance(fake, PF, 1.0, CFG) > 5 * G.max_width
