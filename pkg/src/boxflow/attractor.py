"""Forward images of box covers and their iteration to a fixed cover.

The image of a cover is point-sampled (a small lattice per cell) and
fattened by one cell.  This is a conservative heuristic, not a rigorous
enclosure; at desk scale the margin preserves the covering property.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import boxset, flow
from .boxset import BoxCover
from .errors import DomainEscapeError, InternalError, NonConvergenceError, NotAbsorbedError, UsageError
from .flow import IntegratorConfig, ParamPoint, SystemFamily, as_param

log = logging.getLogger(__name__)

# Cap on sample points integrated per batch; keeps peak memory flat on
# large 3-D grids.
_CHUNK_SAMPLES = 2_000_000


@dataclass(frozen=True)
class SolverSettings:
    """Knobs shared by cover-image iteration.

    Tolerances are expressed in cell-width units (resolution independent);
    they are converted against the grid's largest cell width.
    """

    t_step: float
    dt: float
    tol_cells: float = 2.0
    max_iter: int = 200
    consec: int = 3
    samples_per_axis: Optional[int] = None
    escape_factor: float = 0.5

    def __post_init__(self):
        if self.t_step <= 0:
            raise UsageError("t_step must be positive")
        if self.tol_cells < 1.0:
            raise UsageError("tol_cells below one cell width is meaningless")
        if self.max_iter < 1:
            raise UsageError("max_iter must be at least 1")
        if self.consec < 1:
            raise UsageError("consec must be at least 1")
        if self.samples_per_axis is not None and self.samples_per_axis < 2:
            raise UsageError("samples_per_axis must be at least 2")

    @property
    def cfg(self) -> IntegratorConfig:
        return IntegratorConfig(dt=self.dt, escape_factor=self.escape_factor)

    def tol_for(self, grid: boxset.GridSpec) -> float:
        return self.tol_cells * grid.max_width


@dataclass
class TraceEntry:
    n: int
    t: float
    step_dist: float
    cells: int


@dataclass
class ConvergenceTrace:
    entries: list[TraceEntry] = field(default_factory=list)

    def add(self, n, t, step_dist, cells):
        self.entries.append(TraceEntry(n, t, step_dist, cells))

    @property
    def final_step_dist(self) -> float:
        return self.entries[-1].step_dist if self.entries else float("nan")


@dataclass
class AttractorApprox:
    """A converged cover for one parameter plus its convergence trace."""

    param: ParamPoint
    cover: BoxCover
    trace: ConvergenceTrace
    t_total: float
    settings: SolverSettings
    invariance_defect: float


def default_samples(dim: int) -> int:
    """3 per axis (corners + centers) in 1-D/2-D, 2 (corners) in 3-D."""
    return 3 if dim <= 2 else 2


def image(cover: BoxCover, family: SystemFamily, lam, t: float, cfg: IntegratorConfig,
          samples_per_axis: Optional[int] = None) -> BoxCover:
    """Forward image of a cover under the time-t map, fattened by one cell.

    Each active cell contributes a k^d lattice of sample points including
    the cell corners.  Samples landing outside the grid domain but inside
    the escape box are discarded (counted in a log warning); leaving the
    escape box aborts with :class:`DomainEscapeError`.
    """
    if t <= 0:
        raise UsageError("image time must be positive")
    if cover.is_empty:
        raise UsageError("cannot image an empty cover")
    lam = as_param(lam)
    grid = cover.grid
    if grid.dim != family.state_dim:
        raise UsageError("grid dimension does not match the family state dimension")
    k = samples_per_axis if samples_per_axis is not None else default_samples(grid.dim)
    if k < 2:
        raise UsageError("samples_per_axis must be at least 2")

    fracs = np.stack(
        [m.ravel() for m in np.meshgrid(*[np.linspace(0.0, 1.0, k)] * grid.dim, indexing="ij")],
        axis=1,
    )  # (k^d, d)
    w = grid.widths
    glo = np.asarray(grid.lower)
    idx_all = cover.multi_indices()
    per_cell = fracs.shape[0]
    cells_per_chunk = max(1, _CHUNK_SAMPLES // per_cell)

    discarded = 0
    id_blocks: list[np.ndarray] = []
    for start in range(0, idx_all.shape[0], cells_per_chunk):
        idx = idx_all[start:start + cells_per_chunk]
        pts = (glo + (idx[:, None, :] + fracs[None, :, :]) * w).reshape(-1, grid.dim)
        ends, esc = flow.integrate_batch(family, lam, pts, t, cfg)
        hit = ~np.isnan(esc)
        if hit.any():
            i = int(np.flatnonzero(hit)[0])
            raise DomainEscapeError(float(esc[i]), ends[i], lam=lam.coords,
                                    cell=tuple(idx[i // per_cell]), sample=pts[i])
        cell_idx, inside = boxset.containing_cells(grid, ends)
        discarded += int((~inside).sum())
        if inside.any():
            id_blocks.append(np.ravel_multi_index(cell_idx[inside].T, grid.cells))
    if discarded:
        log.warning("image(%s, lambda=%s, t=%g): discarded %d samples outside the grid domain",
                    family.name, lam.coords, t, discarded)
    if not id_blocks:
        raise InternalError("cover image is empty: every sample left the grid domain")
    raw = BoxCover(grid, np.concatenate(id_blocks))
    return boxset.fatten(raw, grid.max_width)


def iterate_image(cover: BoxCover, family: SystemFamily, lam, t: float, n: int,
                  cfg: IntegratorConfig, samples_per_axis: Optional[int] = None) -> BoxCover:
    """n successive applications of the time-t image."""
    for _ in range(n):
        cover = image(cover, family, lam, t, cfg, samples_per_axis)
    return cover


def approximate_attractor(family: SystemFamily, lam, seed: BoxCover,
                          settings: SolverSettings) -> AttractorApprox:
    """Iterate the t_step image from the seed until the cover settles.

    Stops once the step distance d_H(C_{n+1}, C_n) stays at or below the
    tolerance for ``consec`` consecutive iterations.  The returned approx
    carries the full trace and the measured invariance defect.
    """
    if seed.is_empty:
        raise UsageError("seed cover must be nonempty")
    lam = as_param(lam)
    grid = seed.grid
    tol = settings.tol_for(grid)
    trace = ConvergenceTrace()
    cover = seed
    streak = 0
    converged = False
    t_total = 0.0
    for n in range(1, settings.max_iter + 1):
        nxt = image(cover, family, lam, settings.t_step, settings.cfg, settings.samples_per_axis)
        t_total = n * settings.t_step
        step = boxset.hausdorff(nxt, cover)
        trace.add(n, t_total, step, len(nxt))
        cover = nxt
        streak = streak + 1 if step <= tol else 0
        if streak >= settings.consec:
            converged = True
            break
    if not converged:
        raise NonConvergenceError(trace)
    one_more = image(cover, family, lam, settings.t_step, settings.cfg, settings.samples_per_axis)
    defect = boxset.hausdorff(one_more, cover)
    if defect > tol + 2.0 * grid.max_width:
        raise InternalError(
            f"invariance defect {defect:.6g} exceeds tol + 2 cells ({tol + 2 * grid.max_width:.6g})")
    return AttractorApprox(param=lam, cover=cover, trace=trace, t_total=t_total,
                           settings=settings, invariance_defect=defect)


def absorbing_time(family: SystemFamily, lam, source: BoxCover, target: BoxCover,
                   t_unit: float, max_steps: int, cfg: IntegratorConfig,
                   samples_per_axis: Optional[int] = None) -> int:
    """Smallest n with the n-th and (n+1)-th iterated images of the source
    inside the target (the one-step persistence guard)."""
    if target.is_empty:
        raise UsageError("target cover must be nonempty")
    boxset._check_same_grid(source, target)
    lam = as_param(lam)
    covers = [source]

    def step(i):
        while len(covers) <= i:
            covers.append(image(covers[-1], family, lam, t_unit, cfg, samples_per_axis))
        return covers[i]

    for n in range(1, max_steps + 1):
        if boxset.subset(step(n), target) and boxset.subset(step(n + 1), target):
            return n
    raise NotAbsorbedError(max_steps, lam=lam.coords)


def check_invariance(approx: AttractorApprox, family: SystemFamily, t: float,
                     cfg: IntegratorConfig, samples_per_axis: Optional[int] = None) -> float:
    """d_H between the cover's time-t image and the cover itself."""
    if t <= 0:
        raise UsageError("t must be positive")
    img = image(approx.cover, family, approx.param, t, cfg, samples_per_axis)
    return boxset.hausdorff(img, approx.cover)
