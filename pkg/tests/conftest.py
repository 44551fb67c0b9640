import numpy as np
import pytest

from boxflow.boxset import BoxCover, GridSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_directed(a: BoxCover, b: BoxCover) -> float:
    """O(|A||B|) reference for the directed center-to-center sup distance."""
    ca = a.centers()
    cb = b.centers()
    return float(np.abs(ca[:, None, :] - cb[None, :, :]).max(axis=2).min(axis=1).max())


def brute_hausdorff(a: BoxCover, b: BoxCover) -> float:
    return max(brute_directed(a, b), brute_directed(b, a))


def random_cover(grid: GridSpec, rng, max_cells: int) -> BoxCover:
    n = rng.integers(1, max_cells + 1)
    ids = rng.choice(grid.n_total, size=n, replace=False)
    return BoxCover(grid, ids)


def interval_cover(grid: GridSpec, lo: float, hi: float) -> BoxCover:
    return BoxCover.from_box(grid, [lo], [hi])
