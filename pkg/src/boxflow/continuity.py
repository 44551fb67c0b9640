"""Parameter-sweep analytics over a 1-D grid of parameter values.

Covers the map from parameter to attractor cover: pairwise distance
matrices, semicontinuity moduli, equi-attraction curves, monotone
(Dini-style) convergence checks, and the oscillation scan that flags
candidate discontinuity points.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import boxset
from .attractor import AttractorApprox, SolverSettings, approximate_attractor, image
from .boxset import BoxCover
from .errors import AllFailedError, BoxflowError, NotAbsorbedError, UnabsorbedError, UsageError
from .flow import IntegratorConfig, SystemFamily


@dataclass(frozen=True)
class ParamGrid:
    """Uniform parameter grid, endpoints included.

    m = 1 is allowed as a degenerate single-point grid (lam_min == lam_max).
    """

    lam_min: float
    lam_max: float
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise UsageError("parameter grid needs at least one point")
        if self.m == 1:
            if self.lam_min != self.lam_max:
                raise UsageError("single-point grid requires lam_min == lam_max")
        elif not self.lam_min < self.lam_max:
            raise UsageError("need lam_min < lam_max")

    @property
    def points(self) -> np.ndarray:
        if self.m == 1:
            return np.asarray([self.lam_min])
        return np.linspace(self.lam_min, self.lam_max, self.m)

    def index_of(self, lam: float, atol: float = 1e-9) -> int:
        pts = self.points
        i = int(np.argmin(np.abs(pts - lam)))
        if abs(pts[i] - lam) > atol:
            raise UsageError(f"{lam} is not a grid point")
        return i


@dataclass
class PairDistance:
    d_h: float
    rho_ij: float  # directed distance from attractor i to attractor j
    rho_ji: float


@dataclass
class SweepResult:
    grid: ParamGrid
    window: int
    approxs: dict[int, AttractorApprox]
    pairs: dict[tuple[int, int], PairDistance]  # keyed (i, j) with i < j
    failures: list[tuple[int, float, str]]
    cell_width: float

    def pair(self, i: int, j: int) -> Optional[PairDistance]:
        if i == j:
            return PairDistance(0.0, 0.0, 0.0)
        key = (min(i, j), max(i, j))
        return self.pairs.get(key)


def _run_indexed(worker, indices, threads):
    """Run worker(i) for each index, in parallel when threads > 1.

    Results are keyed by index, so the outcome is schedule-independent.
    """
    if threads <= 1:
        return {i: worker(i) for i in indices}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {i: pool.submit(worker, i) for i in indices}
        return {i: f.result() for i, f in futures.items()}


def compute_approxs(family: SystemFamily, grid: ParamGrid, seed: BoxCover,
                    settings: SolverSettings, threads: int = 1):
    """Per-grid-point attractor approximations; failures collected, not fatal."""
    pts = grid.points

    def worker(i):
        try:
            return approximate_attractor(family, float(pts[i]), seed, settings)
        except BoxflowError as exc:
            return exc

    raw = _run_indexed(worker, range(len(pts)), threads)
    approxs: dict[int, AttractorApprox] = {}
    failures: list[tuple[int, float, str]] = []
    for i in sorted(raw):
        if isinstance(raw[i], AttractorApprox):
            approxs[i] = raw[i]
        else:
            failures.append((i, float(pts[i]), f"{type(raw[i]).__name__}: {raw[i]}"))
    return approxs, failures


def sweep(family: SystemFamily, grid: ParamGrid, seed: BoxCover,
          settings: SolverSettings, window: int = 1, threads: int = 1) -> SweepResult:
    """Approximate the attractor at every grid point and fill the banded
    pairwise distance matrix (|i - j| <= window)."""
    if window < 0:
        raise UsageError("window must be nonnegative")
    approxs, failures = compute_approxs(family, grid, seed, settings, threads)
    if not approxs:
        raise AllFailedError(f"all {grid.m} grid points failed: {failures}")
    pairs: dict[tuple[int, int], PairDistance] = {}
    for i in sorted(approxs):
        for j in range(i + 1, min(i + window + 1, grid.m)):
            if j not in approxs:
                continue
            rij = boxset.semi_distance(approxs[i].cover, approxs[j].cover)
            rji = boxset.semi_distance(approxs[j].cover, approxs[i].cover)
            pairs[(i, j)] = PairDistance(max(rij, rji), rij, rji)
    return SweepResult(grid=grid, window=window, approxs=approxs, pairs=pairs,
                       failures=failures, cell_width=seed.grid.max_width)


def continuity_moduli(sr: SweepResult, i: int):
    """Upper and lower deviations from grid point i to its neighbors.

    upper[j] is the directed distance from attractor j onto attractor i
    (vanishing as j -> i is upper semicontinuity at i); lower[j] is the
    reverse.  Neighbors with no computed attractor are absent (gaps).
    """
    if not 0 <= i < sr.grid.m:
        raise UsageError(f"index {i} out of range")
    upper: dict[int, float] = {}
    lower: dict[int, float] = {}
    for j in range(max(0, i - sr.window), min(sr.grid.m, i + sr.window + 1)):
        if j == i:
            if i in sr.approxs:
                upper[i] = 0.0
                lower[i] = 0.0
            continue
        p = sr.pair(i, j)
        if p is None:
            continue
        if i < j:
            upper[j] = p.rho_ji
            lower[j] = p.rho_ij
        else:
            upper[j] = p.rho_ij
            lower[j] = p.rho_ji
    return upper, lower


@dataclass
class EquiAttractionCurve:
    """sup over the grid of the directed distance from the evolved seed
    cover to each attractor, per time."""

    times: list[float]
    values: list[float]
    argmax_index: list[int]
    argmax_lambda: list[float]
    failed: list[tuple[int, float, str]]


def equi_attraction_curve(family: SystemFamily, grid: ParamGrid, seed: BoxCover,
                          times, settings: SolverSettings,
                          approxs: Optional[dict[int, AttractorApprox]] = None,
                          threads: int = 1) -> EquiAttractionCurve:
    """Evaluate the equi-attraction curve at the given increasing times.

    The image at each time reuses the cover from the previous time.  Grid
    points whose trajectories escape are dropped from the sup and noted.
    """
    times = [float(t) for t in times]
    if not times or any(t <= 0 for t in times):
        raise UsageError("times must be positive")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise UsageError("times must be strictly increasing")
    failures: list[tuple[int, float, str]] = []
    if approxs is None:
        approxs, failures = compute_approxs(family, grid, seed, settings, threads)
        if not approxs:
            raise AllFailedError("no attractor could be computed on this grid")
    pts = grid.points

    def worker(i):
        lam = float(pts[i])
        vals = []
        cover = seed
        prev_t = 0.0
        try:
            for t in times:
                cover = image(cover, family, lam, t - prev_t, settings.cfg,
                              settings.samples_per_axis)
                prev_t = t
                vals.append(boxset.semi_distance(cover, approxs[i].cover))
        except BoxflowError as exc:
            return exc
        return vals

    raw = _run_indexed(worker, sorted(approxs), threads)
    surviving = []
    for i in sorted(raw):
        if isinstance(raw[i], BoxflowError):
            failures.append((i, float(pts[i]), f"{type(raw[i]).__name__}: {raw[i]}"))
        else:
            surviving.append(i)
    if not surviving:
        raise AllFailedError("every grid point failed while tracing the curve")
    values, arg_i, arg_l = [], [], []
    for n in range(len(times)):
        col = [(raw[i][n], i) for i in surviving]
        v, i = max(col, key=lambda p: (p[0], -p[1]))
        values.append(float(v))
        arg_i.append(i)
        arg_l.append(float(pts[i]))
    return EquiAttractionCurve(times=times, values=values, argmax_index=arg_i,
                               argmax_lambda=arg_l, failed=failures)


@dataclass
class SelectTResult:
    T: float
    t_unit: float
    steps_by_index: dict[int, int]
    reverified: bool


def select_T(family: SystemFamily, grid: ParamGrid, seed: BoxCover, t_unit: float,
             max_steps: int, cfg: IntegratorConfig,
             samples_per_axis: Optional[int] = None, threads: int = 1) -> SelectTResult:
    """Common absorption time for the fattened seed across the whole grid.

    Computes the per-parameter absorbing step count, takes the maximum, and
    re-verifies absorption at every parameter with the common time (a
    verified replacement for compounding the individual times).
    """
    from .attractor import absorbing_time

    d1 = boxset.fatten(seed, 1.0)
    pts = grid.points

    def worker(i):
        return absorbing_time(family, float(pts[i]), d1, d1, t_unit, max_steps,
                              cfg, samples_per_axis)

    steps = _run_indexed(worker, range(len(pts)), threads)
    T = t_unit * max(steps.values())
    for i in sorted(steps):
        img = image(d1, family, float(pts[i]), T, cfg, samples_per_axis)
        if not boxset.subset(img, d1):
            raise NotAbsorbedError(max_steps, lam=(float(pts[i]),))
    return SelectTResult(T=float(T), t_unit=float(t_unit),
                         steps_by_index={i: int(v) for i, v in sorted(steps.items())},
                         reverified=True)


@dataclass
class DiniRow:
    index: int
    lam: float
    n: int
    dist_to_attractor: float
    subset_ok: bool


@dataclass
class DiniReport:
    T: float
    N: int
    rows: list[DiniRow]
    max_monotonicity_violation: float
    subset_violations: int

    @property
    def ok(self) -> bool:
        return self.subset_violations == 0


def dini_check(family: SystemFamily, grid: ParamGrid, seed: BoxCover, T: float, N: int,
               settings: SolverSettings,
               approxs: Optional[dict[int, AttractorApprox]] = None,
               threads: int = 1, cell_width: Optional[float] = None) -> DiniReport:
    """Monotone-convergence check of the iterated time-T image of the
    fattened seed toward each attractor.

    Precondition (checked first, for every grid parameter): one time-T
    image of the fattened seed stays inside it; a violation raises
    :class:`UnabsorbedError` and nothing else is claimed.
    """
    if N < 1:
        raise UsageError("N must be at least 1")
    d1 = boxset.fatten(seed, 1.0)
    pts = grid.points
    first = _run_indexed(
        lambda i: image(d1, family, float(pts[i]), T, settings.cfg, settings.samples_per_axis),
        range(len(pts)), threads)
    for i in sorted(first):
        if not boxset.subset(first[i], d1):
            raise UnabsorbedError(float(pts[i]))
    if approxs is None:
        approxs, failures = compute_approxs(family, grid, seed, settings, threads)
        if failures:
            raise AllFailedError(f"attractor computation failed at {failures}")

    def worker(i):
        lam = float(pts[i])
        rows = []
        prev = d1
        cover = first[i]
        for n in range(1, N + 1):
            if n > 1:
                cover = image(prev, family, lam, T, settings.cfg, settings.samples_per_axis)
            rows.append((n, boxset.hausdorff(cover, approxs[i].cover),
                         boxset.subset(cover, prev)))
            prev = cover
        return rows

    raw = _run_indexed(worker, range(len(pts)), threads)
    out: list[DiniRow] = []
    violation = 0.0
    bad_subsets = 0
    for i in sorted(raw):
        dists = [r[1] for r in raw[i]]
        for n, d, ok in raw[i]:
            out.append(DiniRow(index=i, lam=float(pts[i]), n=n, dist_to_attractor=d, subset_ok=ok))
            if not ok:
                bad_subsets += 1
        for a, b in zip(dists, dists[1:]):
            violation = max(violation, b - a)
    return DiniReport(T=float(T), N=N, rows=out,
                      max_monotonicity_violation=float(violation),
                      subset_violations=bad_subsets)


@dataclass
class PointReport:
    index: int
    lam: float
    upper: dict[int, float]
    lower: dict[int, float]
    osc: float
    flagged: bool


@dataclass
class ContinuityReport:
    delta: float
    window: int
    points: list[PointReport]
    gaps: list[int] = field(default_factory=list)

    @property
    def flagged_indices(self) -> list[int]:
        return [p.index for p in self.points if p.flagged]

    @property
    def flagged_fraction(self) -> float:
        return len(self.flagged_indices) / len(self.points) if self.points else 0.0


def discontinuity_scan(sr: SweepResult, delta: float, window: Optional[int] = None) -> ContinuityReport:
    """Flag grid points whose windowed oscillation reaches 3*delta.

    The flagged fraction is an empirical proxy for the size of the
    discontinuity set; refining the grid should shrink it.
    """
    if window is None:
        window = sr.window
    if window < 1:
        raise UsageError("scan window must be at least 1")
    if window > sr.window:
        raise UsageError("scan window exceeds the sweep's distance band")
    if delta < 2.0 * sr.cell_width:
        raise UsageError(
            f"delta={delta} is below the 2-cell floor ({2.0 * sr.cell_width:.6g}); "
            "discretization noise dominates there")
    pts = sr.grid.points
    reports: list[PointReport] = []
    gaps: list[int] = []
    for i in sorted(sr.approxs):
        upper, lower = continuity_moduli(sr, i)
        osc = 0.0
        have_all = True
        for j in range(max(0, i - window), min(sr.grid.m, i + window + 1)):
            if j == i:
                continue
            p = sr.pair(i, j)
            if p is None:
                have_all = False
                continue
            osc = max(osc, p.d_h)
        if not have_all:
            gaps.append(i)
        reports.append(PointReport(index=i, lam=float(pts[i]), upper=upper, lower=lower,
                                   osc=osc, flagged=osc >= 3.0 * delta))
    return ContinuityReport(delta=float(delta), window=window, points=reports, gaps=gaps)
