"""Pipeline-wide configuration with full-scale defaults and presets."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from .icp import IcpConfig

PRESETS = ("full", "desk")


@dataclass
class PipelineConfig:
    """Every knob of the end-to-end alignment pipeline.

    Full-scale defaults: 5000-word vocabularies projected to 50 components,
    cycle weight 0.1, batch 128, 100 epochs per stage with reciprocal
    filtering from epoch 50 of the full-dimensional stage, and 500
    stochastic restarts.
    """

    vocab: int = 5000
    pca_dim: int = 50
    pca_oversample: int = 10
    pca_power_iters: int = 2
    lam: float = 0.1
    batch_size: int = 128
    epochs_pca: int = 100
    epochs_raw: int = 100
    reciprocal_from: int = 50
    learning_rate: float = 0.5
    lr_decay: float = 0.98
    runs: int = 500
    seed: int = 0
    jobs: int = 1
    randomize_pca: bool = True
    randomize_order: bool = True
    mode: str = "mini_batch_cycle"
    csls_k: int = 10
    finetune_iters: int = 5
    finetune_vocab_limit: int = 200_000
    finetune_dictionary_size: int = 10_000

    def pca_stage(self) -> IcpConfig:
        """Stage config for the reduced-space runs (no reciprocal filtering)."""
        return IcpConfig(
            lam=self.lam,
            batch_size=self.batch_size,
            epochs=self.epochs_pca,
            reciprocal_from_epoch=None,
            learning_rate=self.learning_rate,
            lr_decay=self.lr_decay,
            mode=self.mode,
        )

    def raw_stage(self) -> IcpConfig:
        """Stage config for the full-dimensional refinement run."""
        recip = self.reciprocal_from if self.reciprocal_from >= 0 else None
        if recip is not None and recip > self.epochs_raw:
            recip = None
        return IcpConfig(
            lam=self.lam,
            batch_size=self.batch_size,
            epochs=self.epochs_raw,
            reciprocal_from_epoch=recip,
            learning_rate=self.learning_rate,
            lr_decay=self.lr_decay,
            mode=self.mode,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def apply_preset(config: PipelineConfig, name: str) -> PipelineConfig:
    """Return a copy of ``config`` with a named preset applied.

    "full" keeps the full-scale defaults; "desk" shrinks the restart budget
    and vocabulary so the whole pipeline runs in CI time.
    """
    if name == "full":
        return replace(config)
    if name == "desk":
        return replace(config, runs=50, vocab=1000)
    raise ValueError(f"unknown preset {name!r}, expected one of {PRESETS}")
