"""Empirical covariance operators and their spectral decompositions.

The covariance operator is discretized on the sample grid and eigensolved
with respect to the quadrature inner product: with W the diagonal matrix of
quadrature weights and K the covariance matrix on the grid, the symmetric
problem B = W^{1/2} K W^{1/2} is solved and eigenvectors are mapped back via
psi = W^{-1/2} v, which makes the eigenfunctions quadrature-orthonormal by
construction.  When n < m the same eigenpairs are obtained from the n-by-n
Gram matrix of the (weighted) centred data, which is much cheaper and agrees
with the grid-sized problem on all nonzero eigenvalues.

Exactly tied eigenvalues keep the eigensolver's output order; any orthonormal
rotation of a tied block is an equally valid basis, so nothing downstream may
depend on the order within ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Curve, Grid, Sample, require_same_grid

__all__ = ["PCBasis", "empirical_pca", "weighted_pca", "score"]

# Components with eigenvalue below this fraction of the leading eigenvalue
# are dropped: downstream fits divide by the eigenvalue.
RELATIVE_EIGENVALUE_FLOOR = 1e-12

# Below this absolute integral the sign convention falls back to the
# largest-magnitude grid value.
_SIGN_INTEGRAL_TOL = 1e-12


@dataclass(frozen=True)
class PCBasis:
    """Mean curve plus an orthonormal eigenbasis of a covariance operator.

    Attributes
    ----------
    grid : Grid
    mean : ndarray of shape (m,)
        Plain or weighted sample mean curve.
    eigenvalues : ndarray of shape (k,)
        Non-increasing, strictly positive after clamping/dropping.
    eigenfunctions : ndarray of shape (k, m)
        Row j is the j-th eigenfunction; quadrature-orthonormal.
    flavor : {'unweighted', 'weighted'}
    """

    grid: Grid
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    flavor: str

    @property
    def n_components(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def mean_curve(self) -> Curve:
        return Curve(self.grid, self.mean)

    def eigenfunction(self, j: int) -> Curve:
        """Eigenfunction for component j (1-based)."""
        self._check_index(j)
        return Curve(self.grid, self.eigenfunctions[j - 1])

    def _check_index(self, j: int) -> None:
        if not 1 <= j <= self.n_components:
            raise IndexError(
                f"component index {j} out of range 1..{self.n_components}"
            )

    def scores(self, curve_values: np.ndarray, n_components: int | None = None) -> np.ndarray:
        """Uncentred scores: quadrature inner products with the eigenfunctions.

        Parameters
        ----------
        curve_values : ndarray of shape (n, m) or (m,)
        n_components : int, optional
            Number of leading components; defaults to all retained.

        Returns
        -------
        ndarray of shape (n, k) or (k,)
        """
        k = self.n_components if n_components is None else n_components
        if not 0 <= k <= self.n_components:
            raise IndexError(f"n_components {k} out of range 0..{self.n_components}")
        proj = self.eigenfunctions[:k].T * self.grid.quad_weights[:, None]
        return np.asarray(curve_values, dtype=float) @ proj


def _fix_signs(eigenfunctions: np.ndarray, quad_weights: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: integral >= 0, falling back to a
    positive largest-magnitude value when the integral is essentially 0."""
    out = eigenfunctions.copy()
    integrals = out @ quad_weights
    for row, integral in enumerate(integrals):
        if abs(integral) > _SIGN_INTEGRAL_TOL:
            if integral < 0:
                out[row] = -out[row]
        else:
            peak = np.argmax(np.abs(out[row]))
            if out[row][peak] < 0:
                out[row] = -out[row]
    return out


def _spectral_decomposition(centred: np.ndarray, p: np.ndarray, grid: Grid):
    """Eigenpairs of the operator sum_i p_i (X_i - mean)(s) (X_i - mean)(t).

    `centred` is the (n, m) centred data matrix and `p` the probability
    weights on observations (uniform 1/n for the plain covariance).
    Returns (eigenvalues, eigenfunctions) sorted non-increasing, with tiny
    and negative eigenvalues dropped.
    """
    n, m = centred.shape
    sqrt_w = np.sqrt(grid.quad_weights)
    A = np.sqrt(p)[:, None] * centred * sqrt_w[None, :]
    if m <= n:
        lam, V = np.linalg.eigh(A.T @ A)
        lam = lam[::-1]
        V = V[:, ::-1]
        vectors = V.T
    else:
        # Snapshot route: nonzero eigenpairs of A^T A from the n-by-n Gram.
        lam, U = np.linalg.eigh(A @ A.T)
        lam = lam[::-1]
        U = U[:, ::-1]
        keep = lam > 0
        vectors = np.zeros((lam.size, m))
        if np.any(keep):
            vectors[keep] = (U[:, keep] / np.sqrt(lam[keep])).T @ A

    if lam.size == 0 or lam[0] <= 0.0:
        return np.empty(0), np.empty((0, m))
    retained = lam >= RELATIVE_EIGENVALUE_FLOOR * lam[0]
    lam = lam[retained]
    vectors = vectors[retained]
    if m > n:
        # The Gram-route vectors v = A^T u / sqrt(lambda) lose orthogonality
        # near the retention floor (the division amplifies round-off); a thin
        # QR restores it without reordering the components.
        q, rmat = np.linalg.qr(vectors.T)
        vectors = (q * np.sign(np.diag(rmat))).T
    eigenfunctions = vectors / sqrt_w[None, :]
    return lam, _fix_signs(eigenfunctions, grid.quad_weights)


def empirical_pca(sample: Sample) -> PCBasis:
    """Eigendecomposition of the empirical covariance operator.

    The covariance is n^{-1} sum_i {X_i(s) - mean(s)}{X_i(t) - mean(t)};
    eigenvalues come back sorted non-increasing with at most min(n-1, m)
    strictly positive entries.
    """
    X = sample.curve_values
    n = X.shape[0]
    mean = X.mean(axis=0)
    p = np.full(n, 1.0 / n)
    eigenvalues, eigenfunctions = _spectral_decomposition(X - mean, p, sample.grid)
    return PCBasis(
        grid=sample.grid,
        mean=mean,
        eigenvalues=eigenvalues,
        eigenfunctions=eigenfunctions,
        flavor="unweighted",
    )


def weighted_pca(sample: Sample, weights) -> PCBasis:
    """Eigendecomposition of the observation-weighted covariance operator.

    With probability weights p_i = w_i / sum(w), the operator is
    sum_i p_i {X_i(s) - mean_w(s)}{X_i(t) - mean_w(t)} where mean_w is the
    weighted mean curve.  Uniform weights reproduce :func:`empirical_pca`.
    """
    w = np.asarray(weights, dtype=float)
    X = sample.curve_values
    if w.shape != (X.shape[0],):
        raise ValueError(
            f"expected {X.shape[0]} weights, got array of shape {w.shape}"
        )
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("observation weights must be finite and positive")
    p = w / w.sum()
    mean = p @ X
    eigenvalues, eigenfunctions = _spectral_decomposition(X - mean, p, sample.grid)
    return PCBasis(
        grid=sample.grid,
        mean=mean,
        eigenvalues=eigenvalues,
        eigenfunctions=eigenfunctions,
        flavor="weighted",
    )


def score(curve: Curve, basis: PCBasis, j: int) -> float:
    """Uncentred score of `curve` on eigenfunction j (1-based)."""
    require_same_grid(curve.grid, basis.grid)
    basis._check_index(j)
    return float(basis.grid.inner(curve.values, basis.eigenfunctions[j - 1]))
