"""Iterative orthonormal Procrustes refinement on the full vocabulary.

Starting from the unconstrained maps the optimizer produced, each iteration
rebuilds a candidate dictionary by matching the most frequent words in both
directions, keeps only mutually matched pairs, and refits an orthonormal
transform per direction on those pairs.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NoPairsSurvivedWarning
from .icp import TransformPair
from .linalg import procrustes
from .matching import avg_knn_cosine, csls_match, nearest_neighbors


@dataclass
class FinetuneConfig:
    """Refinement knobs.

    Candidate pairs come from the ``dictionary_size`` most frequent words on
    each side; neighbor search spans the first ``vocab_limit`` words.
    """

    iterations: int = 5
    vocab_limit: int = 200_000
    match_metric: str = "csls"
    dictionary_size: int = 10_000
    csls_k: int = 10

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.match_metric not in ("csls", "nn"):
            raise ValueError("match_metric must be 'csls' or 'nn'")


def _match(mapped_cap, search_space, full_mapped_other, metric, k):
    if metric == "nn":
        return nearest_neighbors(mapped_cap, search_space, metric="cosine")
    # target-side neighborhood densities use the whole mapped other domain
    r_targets = avg_knn_cosine(
        search_space, full_mapped_other, min(k, len(full_mapped_other))
    )
    idx, _ = csls_match(
        mapped_cap, search_space, min(k, len(search_space)), r_targets=r_targets
    )
    return idx


def finetune(
    X_full: np.ndarray,
    Y_full: np.ndarray,
    init: TransformPair,
    config: FinetuneConfig | None = None,
) -> TransformPair:
    """Refine a transform pair; the result is orthonormal in both directions.

    If reciprocal filtering ever leaves no candidate pairs, the input is
    returned unchanged with a warning instead of failing mid-pipeline.
    """
    if config is None:
        config = FinetuneConfig()
    X = np.ascontiguousarray(X_full[: config.vocab_limit], dtype=np.float64)
    Y = np.ascontiguousarray(Y_full[: config.vocab_limit], dtype=np.float64)
    cap_x = min(config.dictionary_size, len(X))
    cap_y = min(config.dictionary_size, len(Y))
    state = init.copy()

    for _ in range(config.iterations):
        mapped_x = X @ state.t_xy.T
        mapped_y = Y @ state.t_yx.T
        f_x = _match(
            mapped_x[:cap_x], Y, mapped_x, config.match_metric, config.csls_k
        )
        f_y = _match(
            mapped_y[:cap_y], X, mapped_y, config.match_metric, config.csls_k
        )
        # mutual matches only; a source match beyond the y-side cap cannot
        # be verified and is dropped
        src = np.arange(cap_x)
        tgt = f_x[src]
        mutual = np.zeros(cap_x, dtype=bool)
        in_cap = tgt < cap_y
        mutual[in_cap] = f_y[tgt[in_cap]] == src[in_cap]
        pair_src = src[mutual]
        pair_tgt = tgt[mutual]
        if len(pair_src) == 0:
            warnings.warn(
                "reciprocal filtering left no pairs; returning input unchanged",
                NoPairsSurvivedWarning,
            )
            return init.copy()
        t_xy = procrustes(X[pair_src], Y[pair_tgt]).T
        t_yx = procrustes(Y[pair_tgt], X[pair_src]).T
        state = TransformPair(t_xy=t_xy, t_yx=t_yx)
    return state
