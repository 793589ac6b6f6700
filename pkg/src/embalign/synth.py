"""Synthetic aligned-pair generator with known ground truth.

Makes every pipeline stage verifiable at desk scale: X is an anisotropic
Gaussian cloud, Y is a row-permuted orthonormal transform of (part of) X
plus noise, and both the transform and the permutation are returned so tests
can score recovered matchings exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import io
from .errors import InvalidSpectrum
from .icp import TransformPair


@dataclass
class SyntheticPair:
    """Generated clouds plus the oracle needed to score an alignment.

    ``ground_truth_map[i]`` is the Y row holding the transformed copy of
    X row i, or -1 where overlap_fraction left that row unmatched.
    """

    X: np.ndarray
    Y: np.ndarray
    ground_truth_transform: np.ndarray
    ground_truth_map: np.ndarray
    noise_sigma: float
    overlap_fraction: float


def generate(
    n: int,
    d: int,
    noise_sigma: float = 0.0,
    overlap_fraction: float = 1.0,
    anisotropy: np.ndarray | None = None,
    seed: int = 0,
) -> SyntheticPair:
    """Draw a seeded synthetic pair.

    ``anisotropy`` is the per-coordinate variance spectrum (positive,
    non-increasing, length d); the default decays linearly from d to 1.
    Distractor rows filling the non-overlapping part of Y are fresh draws
    from the same distribution, left untransformed.
    """
    if d < 2:
        raise InvalidSpectrum("need dimension >= 2")
    if n < 1:
        raise InvalidSpectrum("need at least one row")
    if not 0.0 < overlap_fraction <= 1.0:
        raise InvalidSpectrum("overlap_fraction must be in (0, 1]")
    if noise_sigma < 0:
        raise InvalidSpectrum("noise_sigma must be non-negative")
    if anisotropy is None:
        anisotropy = np.linspace(float(d), 1.0, d)
    spectrum = np.asarray(anisotropy, dtype=np.float64)
    if spectrum.shape != (d,):
        raise InvalidSpectrum(f"spectrum length {spectrum.shape} != dimension {d}")
    if (spectrum <= 0).any():
        raise InvalidSpectrum("spectrum entries must be positive")
    if (np.diff(spectrum) > 0).any():
        raise InvalidSpectrum("spectrum must be non-increasing")

    rng = np.random.default_rng(seed)
    scale = np.sqrt(spectrum)
    X = rng.normal(size=(n, d)) * scale
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    q = q * np.sign(np.diag(r))

    n_overlap = int(round(overlap_fraction * n))
    n_overlap = max(1, min(n, n_overlap))
    reals = X[:n_overlap] @ q.T
    if noise_sigma > 0:
        reals = reals + noise_sigma * rng.normal(size=(n_overlap, d))
    distractors = rng.normal(size=(n - n_overlap, d)) * scale
    rows = np.vstack([reals, distractors])
    perm = rng.permutation(n)
    Y = rows[perm]

    inverse = np.empty(n, dtype=np.int64)
    inverse[perm] = np.arange(n)
    gt = np.full(n, -1, dtype=np.int64)
    gt[:n_overlap] = inverse[:n_overlap]
    return SyntheticPair(
        X=X,
        Y=Y,
        ground_truth_transform=q,
        ground_truth_map=gt,
        noise_sigma=noise_sigma,
        overlap_fraction=overlap_fraction,
    )


def map_accuracy(f_x: np.ndarray, ground_truth_map: np.ndarray) -> float:
    """Fraction of overlapped source rows matched to their true target row."""
    known = ground_truth_map >= 0
    if not known.any():
        return 0.0
    return float((np.asarray(f_x)[known] == ground_truth_map[known]).mean())


def word_name(index: int) -> str:
    """Synthetic vocabulary entry for a 0-based row index ('w000001', ...)."""
    return f"w{index + 1:06d}"


def write_vec_files(pair: SyntheticPair, src_path, tgt_path) -> None:
    """Emit both clouds as word2vec text files with synthetic word names."""
    io.save_vec([word_name(i) for i in range(len(pair.X))], pair.X, src_path)
    io.save_vec([word_name(j) for j in range(len(pair.Y))], pair.Y, tgt_path)


def gold_pairs(pair: SyntheticPair) -> list[tuple[str, str]]:
    """Ground-truth (source word, target word) pairs for the overlapped rows."""
    return [
        (word_name(i), word_name(int(j)))
        for i, j in enumerate(pair.ground_truth_map)
        if j >= 0
    ]


def ground_truth_transforms(pair: SyntheticPair) -> TransformPair:
    """The oracle maps: Q for x-to-y and its transpose back."""
    q = pair.ground_truth_transform
    return TransformPair(t_xy=q.copy(), t_yx=q.T.copy())
