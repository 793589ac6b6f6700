"""Dense linear-algebra primitives: centering, randomized PCA, Procrustes."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputWarning, DimensionMismatch, InvalidP


@dataclass
class PcaModel:
    """Centering vector plus an orthonormal basis, ordered by explained variance.

    ``basis`` has shape (dim, p); p can fall below the requested count when
    the data is rank deficient (components are never padded).
    """

    mean: np.ndarray
    basis: np.ndarray
    p: int

    def __post_init__(self):
        if self.basis.shape != (self.mean.shape[0], self.p):
            raise DimensionMismatch(
                f"basis {self.basis.shape} inconsistent with dim "
                f"{self.mean.shape[0]}, p {self.p}"
            )


def center(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Subtract per-column means; returns (centered matrix, mean vector)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise DimensionMismatch("center expects a non-empty 2-D matrix")
    mean = matrix.mean(axis=0)
    return matrix - mean, mean


def randomized_pca(
    matrix: np.ndarray,
    p: int,
    seed: int,
    oversample: int = 10,
    power_iters: int = 2,
) -> PcaModel:
    """Top-p principal components via a seeded Gaussian sketch.

    The sketch has width p + oversample and is refined by ``power_iters``
    subspace iterations before an exact SVD of the small projected matrix.
    Results are deterministic per seed; across seeds the basis may differ by
    component signs and slight rotations, which downstream stages rely on as
    a source of run-to-run diversity (no sign convention is imposed).
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatch("randomized_pca expects a 2-D matrix")
    n, dim = matrix.shape
    if n < 2:
        raise InvalidP(f"need at least 2 rows, got {n}")
    if not 1 <= p <= min(n, dim):
        raise InvalidP(f"p={p} outside [1, min(n={n}, dim={dim})]")

    rng = np.random.default_rng(seed)
    centered, mean = center(matrix)
    width = min(p + oversample, min(n, dim))
    sketch = centered @ rng.normal(size=(dim, width))
    for _ in range(power_iters):
        sketch, _ = np.linalg.qr(sketch)
        sketch = centered @ (centered.T @ sketch)
    q, _ = np.linalg.qr(sketch)
    small = q.T @ centered
    _, sing, vt = np.linalg.svd(small, full_matrices=False)

    # drop uninformative directions instead of padding rank-deficient input
    if sing.size and sing[0] > 0:
        informative = sing > sing[0] * max(n, dim) * np.finfo(np.float64).eps
    else:
        informative = np.zeros(sing.shape, dtype=bool)
    keep = min(p, int(informative.sum()))
    basis = np.ascontiguousarray(vt[:keep].T)
    return PcaModel(mean=mean, basis=basis, p=keep)


def project(model: PcaModel, matrix: np.ndarray) -> np.ndarray:
    """Center by the model mean and project onto its basis."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != model.mean.shape[0]:
        raise DimensionMismatch(
            f"matrix has {matrix.shape[-1]} columns, model expects "
            f"{model.mean.shape[0]}"
        )
    return (matrix - model.mean) @ model.basis


def procrustes(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Orthonormal W minimizing ||Y - X @ W||_F over paired rows.

    Solved by SVD of X.T @ Y as W = U @ Vt. If X.T @ Y is entirely zero the
    problem is degenerate and the identity is returned with a warning.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape or X.ndim != 2 or X.shape[0] < 1:
        raise DimensionMismatch(f"paired shapes differ: {X.shape} vs {Y.shape}")
    cross = X.T @ Y
    if not cross.any():
        warnings.warn(
            "X.T @ Y is identically zero; returning identity",
            DegenerateInputWarning,
        )
        return np.eye(X.shape[1])
    u, _, vt = np.linalg.svd(cross)
    return u @ vt
