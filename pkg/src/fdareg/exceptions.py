"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Two curves (or a curve and a fitted object) live on different grids."""


class DegenerateFitError(RuntimeError):
    """A fit cannot be computed: zero-variance component, singular system,
    or a truncation level beyond the basis capacity."""
