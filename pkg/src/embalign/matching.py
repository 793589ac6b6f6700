"""Nearest-neighbor assignment, reciprocal pairs, and CSLS scoring.

All argmin/argmax selections break ties toward the lowest index so repeated
runs and alternative blockings stay reproducible. Zero-norm rows score a
cosine similarity of 0 against everything (with a warning) rather than
aborting a long run.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyTargets, KTooLarge, ZeroNormWarning

# cap on block * targets elements per scoring block (~16 MB of float64)
_BLOCK_ELEMS = 2_000_000


@dataclass
class CorrespondenceMap:
    """Both matching directions: f_y maps target rows to source indices,
    f_x maps source rows to target indices."""

    f_y: np.ndarray
    f_x: np.ndarray

    def __post_init__(self):
        self.f_y = np.asarray(self.f_y, dtype=np.int64)
        self.f_x = np.asarray(self.f_x, dtype=np.int64)
        n, m = len(self.f_x), len(self.f_y)
        if m and not (0 <= self.f_y.min() and self.f_y.max() < n):
            raise DimensionMismatch("f_y contains out-of-range source indices")
        if n and not (0 <= self.f_x.min() and self.f_x.max() < m):
            raise DimensionMismatch("f_x contains out-of-range target indices")


@dataclass
class ReciprocalPairs:
    """Mutually matched (source, target) index pairs, ascending in source."""

    pairs: np.ndarray

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.pairs)

    def as_tuples(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in self.pairs]


def _blocks(n: int, m: int):
    step = max(1, min(n, _BLOCK_ELEMS // max(m, 1)))
    for start in range(0, n, step):
        yield start, min(start + step, n)


def _check_pair(queries: np.ndarray, targets: np.ndarray):
    if queries.ndim != 2 or targets.ndim != 2:
        raise DimensionMismatch("expected 2-D query and target matrices")
    if queries.shape[1] != targets.shape[1]:
        raise DimensionMismatch(
            f"query dim {queries.shape[1]} != target dim {targets.shape[1]}"
        )
    if targets.shape[0] < 1:
        raise EmptyTargets("no target rows to match against")


def _unit_rows(matrix: np.ndarray, label: str) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    zero = norms == 0.0
    if zero.any():
        warnings.warn(
            f"{int(zero.sum())} zero-norm {label} rows scored as cosine 0",
            ZeroNormWarning,
        )
        norms = norms.copy()
        norms[zero] = 1.0
    return matrix / norms[:, None]


def nearest_neighbors(
    queries: np.ndarray, targets: np.ndarray, metric: str = "euclidean"
) -> np.ndarray:
    """Index of the closest target row for every query row.

    Exhaustive search; euclidean distances are ranked through the Gram
    expansion (the per-query constant term cannot change the argmin).
    """
    queries = np.asarray(queries, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    _check_pair(queries, targets)
    n, m = queries.shape[0], targets.shape[0]
    out = np.empty(n, dtype=np.int64)
    if metric == "euclidean":
        t_sq = np.einsum("ij,ij->i", targets, targets)
        for lo, hi in _blocks(n, m):
            gram = queries[lo:hi] @ targets.T
            gram *= -2.0
            gram += t_sq[None, :]
            out[lo:hi] = np.argmin(gram, axis=1)
    elif metric == "cosine":
        qu = _unit_rows(queries, "query")
        tu = _unit_rows(targets, "target")
        for lo, hi in _blocks(n, m):
            out[lo:hi] = np.argmax(qu[lo:hi] @ tu.T, axis=1)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return out


def reciprocal_pairs(cmap: CorrespondenceMap) -> ReciprocalPairs:
    """Pairs (i, j) with f_x(i) = j and f_y(j) = i."""
    src = np.arange(len(cmap.f_x), dtype=np.int64)
    mutual = cmap.f_y[cmap.f_x] == src
    idx = src[mutual]
    return ReciprocalPairs(pairs=np.column_stack([idx, cmap.f_x[idx]]))


def avg_knn_cosine(queries: np.ndarray, targets: np.ndarray, k: int) -> np.ndarray:
    """Mean cosine similarity between each query and its k nearest targets."""
    queries = np.asarray(queries, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    _check_pair(queries, targets)
    m = targets.shape[0]
    if not 1 <= k <= m:
        raise KTooLarge(f"k={k} with only {m} targets")
    qu = _unit_rows(queries, "query")
    tu = _unit_rows(targets, "target")
    out = np.empty(queries.shape[0], dtype=np.float64)
    for lo, hi in _blocks(queries.shape[0], m):
        sims = qu[lo:hi] @ tu.T
        if k == m:
            out[lo:hi] = sims.mean(axis=1)
        else:
            top = np.partition(sims, m - k, axis=1)[:, m - k :]
            out[lo:hi] = top.mean(axis=1)
    return out


def csls_match(
    mapped_queries: np.ndarray,
    targets: np.ndarray,
    k: int,
    r_targets: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Best target per query under 2*cos(q, y) - r(q) - r(y).

    ``mapped_queries`` must already live in the target space. ``r_targets``
    lets callers reuse the target-side neighborhood densities across calls;
    by default they are computed against ``mapped_queries``.
    """
    mapped_queries = np.asarray(mapped_queries, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    _check_pair(mapped_queries, targets)
    r_q = avg_knn_cosine(mapped_queries, targets, k)
    if r_targets is None:
        # the reverse neighborhood can only be as wide as the query set
        r_targets = avg_knn_cosine(
            targets, mapped_queries, min(k, mapped_queries.shape[0])
        )
    qu = _unit_rows(mapped_queries, "query")
    tu = _unit_rows(targets, "target")
    n, m = qu.shape[0], tu.shape[0]
    idx = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    for lo, hi in _blocks(n, m):
        scores = 2.0 * (qu[lo:hi] @ tu.T)
        scores -= r_q[lo:hi, None]
        scores -= r_targets[None, :]
        idx[lo:hi] = np.argmax(scores, axis=1)
        best[lo:hi] = scores[np.arange(hi - lo), idx[lo:hi]]
    return idx, best


def rank_by_metric(
    queries: np.ndarray,
    targets: np.ndarray,
    metric: str,
    top_k: int,
    csls_k: int = 10,
    r_targets: np.ndarray | None = None,
    return_scores: bool = False,
):
    """Top-k target indices per query, best first, ties toward lower index.

    ``metric`` is "nn" (plain cosine) or "csls"; queries must already be
    mapped into the target space. With ``return_scores`` the matching score
    matrix is returned alongside the indices.
    """
    queries = np.asarray(queries, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    _check_pair(queries, targets)
    n, m = queries.shape[0], targets.shape[0]
    top_k = min(top_k, m)
    qu = _unit_rows(queries, "query")
    tu = _unit_rows(targets, "target")
    if metric == "csls":
        r_q = avg_knn_cosine(queries, targets, min(csls_k, m))
        if r_targets is None:
            r_targets = avg_knn_cosine(targets, queries, min(csls_k, n))
    elif metric != "nn":
        raise ValueError(f"unknown metric {metric!r}")
    out = np.empty((n, top_k), dtype=np.int64)
    vals = np.empty((n, top_k), dtype=np.float64) if return_scores else None
    for lo, hi in _blocks(n, m):
        scores = qu[lo:hi] @ tu.T
        if metric == "csls":
            scores *= 2.0
            scores -= r_q[lo:hi, None]
            scores -= r_targets[None, :]
        order = np.argsort(-scores, axis=1, kind="stable")[:, :top_k]
        out[lo:hi] = order
        if return_scores:
            vals[lo:hi] = np.take_along_axis(scores, order, axis=1)
    if return_scores:
        return out, vals
    return out
