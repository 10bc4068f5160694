"""Discretized functions on a common grid and quadrature-based inner products.

All functions handled by this package are represented by their values on a
shared grid of strictly increasing points over a compact interval.  Every
integral is a composite trapezoid rule on that grid, so the grid carries its
quadrature weights and all downstream linear algebra reduces to weighted
matrix products.
"""

from __future__ import annotations

import numpy as np

from .exceptions import GridMismatchError

__all__ = ["Grid", "Curve", "Sample", "inner_product", "resample"]


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights; they sum to the interval length exactly."""
    gaps = np.diff(points)
    w = np.zeros_like(points)
    w[:-1] += gaps / 2.0
    w[1:] += gaps / 2.0
    return w


class Grid:
    """Strictly increasing abscissae with trapezoid quadrature weights.

    Parameters
    ----------
    points : array-like of shape (m,)
        Grid points t_1 < ... < t_m, m >= 2.  The grid may be non-equispaced;
        weights are computed from the spacings.
    """

    __slots__ = ("points", "quad_weights")

    def __init__(self, points) -> None:
        pts = _as_float_vector(points, "points")
        if pts.size < 2:
            raise ValueError("a grid needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        pts.setflags(write=False)
        w = trapezoid_weights(pts)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "quad_weights", w)

    def __setattr__(self, name, value):  # immutable after construction
        raise AttributeError("Grid is immutable")

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Grid):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.all(self.points == other.points)
        )

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    def __repr__(self) -> str:
        lo, hi = self.interval
        return f"Grid(m={len(self)}, interval=[{lo:g}, {hi:g}])"

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.points[0]), float(self.points[-1])

    @classmethod
    def uniform(cls, start: float, stop: float, num: int) -> "Grid":
        return cls(np.linspace(start, stop, num))

    def inner(self, fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
        """Quadrature inner product along the last axis; supports batches."""
        return (np.asarray(fa) * np.asarray(fb)) @ self.quad_weights

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values) @ self.quad_weights


class Curve:
    """Values of one function on a :class:`Grid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values) -> None:
        vals = _as_float_vector(values, "values")
        if vals.size != len(grid):
            raise ValueError(
                f"curve has {vals.size} values but the grid has {len(grid)} points"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)

    def __setattr__(self, name, value):
        raise AttributeError("Curve is immutable")

    def __repr__(self) -> str:
        return f"Curve(m={len(self.grid)})"


class Sample:
    """n curves on one shared grid together with their scalar responses.

    Parameters
    ----------
    grid : Grid
    curve_values : array-like of shape (n, m)
        Row i holds the i-th curve on `grid`.
    responses : array-like of shape (n,)
    """

    __slots__ = ("grid", "curve_values", "responses")

    def __init__(self, grid: Grid, curve_values, responses) -> None:
        X = np.asarray(curve_values, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"curve_values must be 2-D, got shape {X.shape}")
        if X.shape[1] != len(grid):
            raise ValueError(
                f"curves have {X.shape[1]} values but the grid has {len(grid)} points"
            )
        if X.shape[0] < 2:
            raise ValueError("a sample needs at least two observations")
        if not np.all(np.isfinite(X)):
            raise ValueError("curve_values contains non-finite values")
        y = _as_float_vector(responses, "responses")
        if y.size != X.shape[0]:
            raise ValueError(
                f"{X.shape[0]} curves but {y.size} responses"
            )
        X = X.copy()
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "curve_values", X)
        object.__setattr__(self, "responses", y)

    def __setattr__(self, name, value):
        raise AttributeError("Sample is immutable")

    @classmethod
    def from_curves(cls, curves, responses) -> "Sample":
        curves = list(curves)
        if not curves:
            raise ValueError("empty curve list")
        grid = curves[0].grid
        for c in curves[1:]:
            if c.grid != grid:
                raise GridMismatchError("all sample curves must share one grid")
        return cls(grid, np.vstack([c.values for c in curves]), responses)

    @property
    def n_observations(self) -> int:
        return self.curve_values.shape[0]

    def curve(self, i: int) -> Curve:
        return Curve(self.grid, self.curve_values[i])

    def subset(self, indices) -> "Sample":
        idx = np.asarray(indices)
        return Sample(self.grid, self.curve_values[idx], self.responses[idx])

    def __repr__(self) -> str:
        return f"Sample(n={self.n_observations}, m={len(self.grid)})"


def require_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridMismatchError("curves live on different grids")


def inner_product(f: Curve, g: Curve) -> float:
    """Trapezoid approximation of the integral of f*g over the interval."""
    require_same_grid(f.grid, g.grid)
    return float(f.grid.inner(f.values, g.values))


def resample(abscissae, ordinates, target: Grid) -> Curve:
    """Piecewise-linear interpolation of tabulated values onto `target`.

    Extrapolation is refused: every target point must lie inside the
    tabulated range.
    """
    xs = _as_float_vector(abscissae, "abscissae")
    ys = _as_float_vector(ordinates, "ordinates")
    if xs.size != ys.size:
        raise ValueError("abscissae and ordinates differ in length")
    if xs.size < 2:
        raise ValueError("need at least two tabulated points")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("abscissae must be strictly increasing")
    lo, hi = target.interval
    if lo < xs[0] or hi > xs[-1]:
        raise ValueError(
            f"target grid [{lo:g}, {hi:g}] extends beyond the tabulated "
            f"range [{xs[0]:g}, {xs[-1]:g}]"
        )
    return Curve(target, np.interp(target.points, xs, ys))
