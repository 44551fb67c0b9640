"""Finite box coverings over a rectangular grid.

A :class:`BoxCover` is a set of grid cells standing in for a closed
bounded subset of R^d at fixed resolution.  Distances between covers are
measured center-to-center in the sup (Chebyshev) metric; the true set
distance differs by at most one cell diameter, which every caller budgets
for explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import EmptyTargetError, GridMismatchError, OutOfDomainError, UsageError

# Above this many candidate pairs, directed distances go through a KD-tree
# instead of the pairwise kernel.  Both routes are exact on the same center
# coordinates, so the value does not depend on the route taken.
_KDTREE_PAIR_THRESHOLD = 20_000_000


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid: domain corners plus cells per axis."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        if not (len(self.lower) == len(self.upper) == len(self.cells)):
            raise UsageError("lower, upper and cells must have equal length")
        if len(self.lower) == 0:
            raise UsageError("grid dimension must be positive")
        for lo, hi in zip(self.lower, self.upper):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise UsageError(f"need finite lower < upper, got [{lo}, {hi}]")
        for n in self.cells:
            if n <= 0:
                raise UsageError(f"cells_per_axis must be positive, got {n}")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def widths(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / np.asarray(self.cells)

    @property
    def max_width(self) -> float:
        return float(self.widths.max())

    @property
    def n_total(self) -> int:
        return int(np.prod(self.cells))


def _check_same_grid(a: "BoxCover", b: "BoxCover"):
    if a.grid != b.grid:
        raise GridMismatchError("covers live on different grids")


@dataclass(frozen=True, eq=False)
class BoxCover:
    """An immutable set of active grid cells.

    Cells are stored as sorted unique row-major linear indices, which fixes
    a deterministic iteration order (lexicographic in the multi-index).
    """

    grid: GridSpec
    ids: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, BoxCover):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.ids, other.ids)

    def __hash__(self):
        return hash((self.grid, self.ids.tobytes()))

    def __post_init__(self):
        ids = np.unique(np.asarray(self.ids, dtype=np.int64))
        if ids.size and (ids[0] < 0 or ids[-1] >= self.grid.n_total):
            raise UsageError("cell index out of range for this grid")
        ids.setflags(write=False)
        object.__setattr__(self, "ids", ids)

    # -- constructors -------------------------------------------------

    @classmethod
    def empty(cls, grid: GridSpec) -> "BoxCover":
        return cls(grid, np.empty(0, dtype=np.int64))

    @classmethod
    def full(cls, grid: GridSpec) -> "BoxCover":
        return cls(grid, np.arange(grid.n_total, dtype=np.int64))

    @classmethod
    def from_multi_indices(cls, grid: GridSpec, idx) -> "BoxCover":
        idx = np.asarray(idx, dtype=np.int64).reshape(-1, grid.dim)
        if idx.size and ((idx < 0).any() or (idx >= np.asarray(grid.cells)).any()):
            raise UsageError("cell multi-index out of range")
        return cls(grid, np.ravel_multi_index(idx.T, grid.cells) if idx.size else np.empty(0, np.int64))

    @classmethod
    def from_points(cls, grid: GridSpec, points) -> "BoxCover":
        """Cover made of the cells containing each point (points outside the
        domain are rejected)."""
        idx, inside = containing_cells(grid, points)
        if not inside.all():
            raise OutOfDomainError(np.asarray(points).reshape(-1, grid.dim)[~inside][0])
        return cls.from_multi_indices(grid, idx)

    @classmethod
    def from_box(cls, grid: GridSpec, lo, hi) -> "BoxCover":
        """Cover of all closed cells that touch the closed box [lo, hi]."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != (grid.dim,) or hi.shape != (grid.dim,):
            raise UsageError("box corners must match the grid dimension")
        if (hi < lo).any():
            raise UsageError("box corners must satisfy lo <= hi")
        w = grid.widths
        glo = np.asarray(grid.lower)
        imin = np.clip(np.ceil((lo - glo) / w - 1e-9).astype(np.int64) - 1, 0, np.asarray(grid.cells) - 1)
        imax = np.clip(np.floor((hi - glo) / w + 1e-9).astype(np.int64), 0, np.asarray(grid.cells) - 1)
        if (imax < imin).any():
            return cls.empty(grid)
        ranges = [np.arange(a, b + 1) for a, b in zip(imin, imax)]
        mesh = np.meshgrid(*ranges, indexing="ij")
        idx = np.stack([m.ravel() for m in mesh], axis=1)
        return cls.from_multi_indices(grid, idx)

    # -- basic queries ------------------------------------------------

    def __len__(self) -> int:
        return int(self.ids.size)

    @property
    def is_empty(self) -> bool:
        return self.ids.size == 0

    def multi_indices(self) -> np.ndarray:
        """(n, dim) int64 array, sorted lexicographically."""
        if self.ids.size == 0:
            return np.empty((0, self.grid.dim), dtype=np.int64)
        return np.stack(np.unravel_index(self.ids, self.grid.cells), axis=1)

    def centers(self) -> np.ndarray:
        idx = self.multi_indices()
        return np.asarray(self.grid.lower) + (idx + 0.5) * self.grid.widths


# -- cell geometry ----------------------------------------------------


def cell_center(grid: GridSpec, idx) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.shape != (grid.dim,) or (idx < 0).any() or (idx >= np.asarray(grid.cells)).any():
        raise UsageError(f"cell index {idx} out of range")
    return np.asarray(grid.lower) + (idx + 0.5) * grid.widths


def containing_cells(grid: GridSpec, points):
    """Vectorised cell lookup.

    Returns (idx, inside): multi-indices (meaningless where ``inside`` is
    False).  Points exactly on a cell boundary go to the lower-index cell;
    points on the upper domain face go to the last cell.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, grid.dim)
    q = (pts - np.asarray(grid.lower)) / grid.widths
    idx = np.ceil(q).astype(np.int64) - 1
    np.clip(idx, 0, np.asarray(grid.cells) - 1, out=idx)
    inside = ((pts >= np.asarray(grid.lower)) & (pts <= np.asarray(grid.upper))).all(axis=1)
    return idx, inside


def containing_cell(grid: GridSpec, point) -> tuple[int, ...]:
    idx, inside = containing_cells(grid, np.asarray(point, dtype=float).reshape(1, -1))
    if not inside[0]:
        raise OutOfDomainError(tuple(np.asarray(point, dtype=float)))
    return tuple(int(v) for v in idx[0])


# -- set algebra ------------------------------------------------------


def union(a: BoxCover, b: BoxCover) -> BoxCover:
    _check_same_grid(a, b)
    return BoxCover(a.grid, np.union1d(a.ids, b.ids))


def subset(a: BoxCover, b: BoxCover) -> bool:
    _check_same_grid(a, b)
    return bool(np.isin(a.ids, b.ids, assume_unique=True).all())


def count(a: BoxCover) -> int:
    return len(a)


def difference_ids(a: BoxCover, b: BoxCover) -> np.ndarray:
    _check_same_grid(a, b)
    return np.setdiff1d(a.ids, b.ids, assume_unique=True)


# -- distances --------------------------------------------------------


def _directed(a_pts: np.ndarray, b_pts: np.ndarray) -> float:
    if a_pts.shape[0] * b_pts.shape[0] > _KDTREE_PAIR_THRESHOLD:
        from scipy.spatial import cKDTree

        tree = cKDTree(b_pts)
        d, _ = tree.query(a_pts, k=1, p=np.inf)
        return float(np.max(d))
    return float(backend.directed_chebyshev(
        np.ascontiguousarray(a_pts), np.ascontiguousarray(b_pts)))


def semi_distance(a: BoxCover, b: BoxCover) -> float:
    """Directed distance max_{cells of a} min_{cells of b} d_inf(centers).

    Zero iff a's active set is contained in b's.  By convention the empty
    cover is at directed distance 0 from anything; distance *to* an empty
    cover is an error.
    """
    _check_same_grid(a, b)
    if b.is_empty:
        raise EmptyTargetError("semi-distance to an empty cover is undefined")
    if a.is_empty:
        return 0.0
    extra = difference_ids(a, b)
    if extra.size == 0:
        return 0.0
    a_pts = BoxCover(a.grid, extra).centers()
    return _directed(a_pts, b.centers())


def hausdorff(a: BoxCover, b: BoxCover) -> float:
    """Symmetric distance max(semi_distance(a, b), semi_distance(b, a))."""
    _check_same_grid(a, b)
    if a.is_empty or b.is_empty:
        raise EmptyTargetError("hausdorff distance needs two nonempty covers")
    return max(semi_distance(a, b), semi_distance(b, a))


def fatten(a: BoxCover, r: float) -> BoxCover:
    """Activate every cell whose center lies within sup-distance
    r + half a cell diameter of an active cell, clipped to the grid.

    fatten(a, 0) is the identity.
    """
    if r < 0:
        raise UsageError("fatten radius must be nonnegative")
    if a.is_empty:
        return a
    w = a.grid.widths
    reach = np.floor((r + 0.5 * a.grid.max_width) / w + 1e-12).astype(np.int64)
    if (reach == 0).all():
        return a
    offsets = np.stack(
        [m.ravel() for m in np.meshgrid(*[np.arange(-k, k + 1) for k in reach], indexing="ij")],
        axis=1,
    )
    idx = a.multi_indices()
    out_ids = [a.ids]
    n_axis = np.asarray(a.grid.cells)
    for off in offsets:
        if not off.any():
            continue
        shifted = idx + off
        ok = ((shifted >= 0) & (shifted < n_axis)).all(axis=1)
        if ok.any():
            out_ids.append(np.ravel_multi_index(shifted[ok].T, a.grid.cells))
    return BoxCover(a.grid, np.concatenate(out_ids))


# -- text dump format -------------------------------------------------


def dump_cover(cover: BoxCover) -> str:
    """Serialize: header line ``dim lower... upper... cells...`` followed by
    one sorted multi-index per line.  Round-trips bit-exactly."""
    g = cover.grid
    head = " ".join(
        [str(g.dim)]
        + [repr(v) for v in g.lower]
        + [repr(v) for v in g.upper]
        + [str(n) for n in g.cells]
    )
    lines = [head]
    for row in cover.multi_indices():
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def load_cover(text: str) -> BoxCover:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise UsageError("empty cover dump")
    head = lines[0].split()
    dim = int(head[0])
    if len(head) != 1 + 3 * dim:
        raise UsageError("malformed cover dump header")
    lower = tuple(float(v) for v in head[1:1 + dim])
    upper = tuple(float(v) for v in head[1 + dim:1 + 2 * dim])
    cells = tuple(int(v) for v in head[1 + 2 * dim:])
    grid = GridSpec(lower, upper, cells)
    idx = [[int(v) for v in ln.split()] for ln in lines[1:]]
    return BoxCover.from_multi_indices(grid, np.asarray(idx, dtype=np.int64).reshape(-1, dim))
