"""Score predicted translations against a gold lexicon (precision@k)."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import NoEvaluableWords
from .icp import TransformPair
from .io import EmbeddingSet, Lexicon
from .matching import avg_knn_cosine, rank_by_metric


@dataclass
class EvalReport:
    """Precision results plus the coverage accounting.

    n_evaluated + n_oov always equals the number of gold source words; a
    word counts as out-of-vocabulary when it is missing from the source
    embeddings or none of its gold targets are in the target embeddings.
    """

    metric: str
    precision_at_1: float
    precision_at_k: dict[int, float]
    n_evaluated: int
    n_oov: int

    def to_json(self) -> str:
        payload = {
            "metric": self.metric,
            "k": sorted(self.precision_at_k),
            "precision": {str(k): v for k, v in sorted(self.precision_at_k.items())},
            "n_evaluated": self.n_evaluated,
            "n_oov": self.n_oov,
        }
        return json.dumps(payload, sort_keys=True)

    def table(self) -> str:
        lines = [
            f"metric        {self.metric}",
            f"evaluated     {self.n_evaluated}",
            f"oov           {self.n_oov}",
        ]
        for k in sorted(self.precision_at_k):
            lines.append(f"precision@{k:<4d}{self.precision_at_k[k]:.4f}")
        return "\n".join(lines)


def evaluate(
    source_emb: EmbeddingSet,
    target_emb: EmbeddingSet,
    transform: TransformPair,
    lexicon: Lexicon,
    metric: str = "csls",
    k_list: tuple[int, ...] = (1, 5, 10),
    csls_k: int = 10,
) -> EvalReport:
    """Precision@k of mapped source words retrieving any gold target.

    Ranking uses cosine ("nn") or CSLS over the mapped vectors; CSLS target
    densities are computed against the full mapped source vocabulary.
    """
    if not k_list:
        raise ValueError("k_list must not be empty")
    tgt_rows: dict[str, int] = {w: i for i, w in enumerate(target_emb.words)}

    eval_rows: list[int] = []
    gold_sets: list[set[int]] = []
    n_oov = 0
    for src_word, targets in lexicon.entries.items():
        row = source_emb.row(src_word)
        gold = {tgt_rows[t] for t in targets if t in tgt_rows}
        if row is None or not gold:
            n_oov += 1
            continue
        eval_rows.append(row)
        gold_sets.append(gold)
    if not eval_rows:
        raise NoEvaluableWords("no lexicon entry overlaps both vocabularies")

    mapped_all = transform.map_x(source_emb.vectors)
    queries = mapped_all[eval_rows]
    k_max = max(k_list)
    r_targets = None
    if metric == "csls":
        r_targets = avg_knn_cosine(
            target_emb.vectors, mapped_all, min(csls_k, len(mapped_all))
        )
    ranked = rank_by_metric(
        queries, target_emb.vectors, metric, k_max,
        csls_k=csls_k, r_targets=r_targets,
    )

    hits = {k: 0 for k in k_list}
    hits_at_1 = 0
    for row_ranked, gold in zip(ranked, gold_sets):
        best_rank = None
        for pos, idx in enumerate(row_ranked):
            if int(idx) in gold:
                best_rank = pos + 1
                break
        if best_rank is None:
            continue
        if best_rank == 1:
            hits_at_1 += 1
        for k in k_list:
            if best_rank <= k:
                hits[k] += 1

    n_eval = len(eval_rows)
    precision = {k: hits[k] / n_eval for k in k_list}
    return EvalReport(
        metric=metric,
        precision_at_1=hits_at_1 / n_eval,
        precision_at_k=precision,
        n_evaluated=n_eval,
        n_oov=n_oov,
    )
