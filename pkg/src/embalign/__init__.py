"""Unsupervised word-to-word translation between embedding spaces."""

from .config import PipelineConfig, apply_preset
from .errors import EmbalignError
from .evaluation import EvalReport, evaluate
from .finetune import FinetuneConfig, finetune
from .icp import (
    EpochReport,
    IcpConfig,
    RunRecord,
    TransformPair,
    icp_epoch,
    p_icp_epoch,
    reconstruction_loss,
    run_stage,
)
from .io import EmbeddingSet, Lexicon, load_lexicon, load_transform, load_vec
from .linalg import PcaModel, center, procrustes, project, randomized_pca
from .matching import (
    CorrespondenceMap,
    ReciprocalPairs,
    avg_knn_cosine,
    csls_match,
    nearest_neighbors,
    reciprocal_pairs,
)
from .orchestrator import (
    AlignResult,
    SelectionResult,
    StochasticityPolicy,
    align_pipeline,
    early_stop_poll,
    export_run_stats,
    run_many,
    select_best,
)
from .synth import SyntheticPair, generate, map_accuracy

__version__ = "0.1.0"

__all__ = [
    "AlignResult",
    "CorrespondenceMap",
    "EmbalignError",
    "EmbeddingSet",
    "EpochReport",
    "EvalReport",
    "FinetuneConfig",
    "IcpConfig",
    "Lexicon",
    "PcaModel",
    "PipelineConfig",
    "ReciprocalPairs",
    "RunRecord",
    "SelectionResult",
    "StochasticityPolicy",
    "SyntheticPair",
    "TransformPair",
    "align_pipeline",
    "apply_preset",
    "avg_knn_cosine",
    "center",
    "csls_match",
    "early_stop_poll",
    "evaluate",
    "export_run_stats",
    "finetune",
    "generate",
    "icp_epoch",
    "load_lexicon",
    "load_transform",
    "load_vec",
    "map_accuracy",
    "nearest_neighbors",
    "p_icp_epoch",
    "procrustes",
    "project",
    "randomized_pca",
    "reciprocal_pairs",
    "reconstruction_loss",
    "run_many",
    "run_stage",
    "select_best",
]
