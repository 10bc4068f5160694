import numpy as np
import pytest

from fdareg.grids import Grid, Sample


def random_sample(rng, n=None, m=None, smooth=True, uniform_grid=None):
    """A generic random sample with a well-behaved score spectrum."""
    n = int(rng.integers(6, 20)) if n is None else n
    m = int(rng.integers(8, 35)) if m is None else m
    if uniform_grid is None:
        uniform_grid = bool(rng.integers(0, 2))
    if uniform_grid:
        grid = Grid.uniform(0.0, 1.0, m)
    else:
        pts = np.sort(rng.uniform(0.0, 1.0, m))
        while np.any(np.diff(pts) <= 0):
            pts = np.sort(rng.uniform(0.0, 1.0, m))
        grid = Grid(pts)
    if smooth:
        # Random trig curves: a handful of harmonics with decaying weights.
        t = grid.points
        harmonics = np.vstack(
            [np.sin((q + 1) * np.pi * t) / (q + 1) for q in range(6)]
            + [np.cos((q + 1) * np.pi * t) / (q + 1) for q in range(6)]
        )
        X = rng.standard_normal((n, 12)) @ harmonics + rng.standard_normal((n, 1))
    else:
        X = rng.standard_normal((n, m))
    y = rng.standard_normal(n)
    return Sample(grid, X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
