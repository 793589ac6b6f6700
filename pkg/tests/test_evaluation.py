"""Precision@k scoring against gold lexicons."""
import json

import numpy as np
import pytest

from embalign.errors import NoEvaluableWords
from embalign.evaluation import evaluate
from embalign.icp import TransformPair
from embalign.io import EmbeddingSet, Lexicon
from embalign.synth import generate, word_name


def embedding_set(words, vectors):
    vectors = np.asarray(vectors, dtype=np.float64)
    return EmbeddingSet(words=words, vectors=vectors, dim=vectors.shape[1])


def identity_setup(n=20, d=6, seed=0):
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(n, d))
    words = [f"w{i}" for i in range(n)]
    emb = embedding_set(words, vecs)
    lex = Lexicon(entries={w: {w} for w in words})
    return emb, lex


def test_identity_alignment_precision_one():
    emb, lex = identity_setup()
    for metric in ("nn", "csls"):
        rep = evaluate(emb, emb, TransformPair.identity(6), lex, metric=metric)
        assert rep.precision_at_1 == 1.0
        assert rep.n_evaluated == 20
        assert rep.n_oov == 0


def test_disjoint_vocabularies_raise():
    emb, _ = identity_setup()
    lex = Lexicon(entries={"missing": {"alsomissing"}})
    with pytest.raises(NoEvaluableWords):
        evaluate(emb, emb, TransformPair.identity(6), lex)


def test_oov_accounting_identity():
    emb, _ = identity_setup(n=10)
    entries = {f"w{i}": {f"w{i}"} for i in range(5)}
    entries["unknown1"] = {"w0"}
    entries["w5"] = {"notthere"}
    lex = Lexicon(entries=entries)
    rep = evaluate(emb, emb, TransformPair.identity(6), lex)
    assert rep.n_evaluated + rep.n_oov == len(lex.entries)
    assert rep.n_oov == 2


def test_precision_non_decreasing_in_k():
    rng = np.random.default_rng(3)
    n, d = 40, 5
    src_vecs = rng.normal(size=(n, d))
    tgt_vecs = src_vecs + 0.6 * rng.normal(size=(n, d))
    src = embedding_set([f"s{i}" for i in range(n)], src_vecs)
    tgt = embedding_set([f"t{i}" for i in range(n)], tgt_vecs)
    lex = Lexicon(entries={f"s{i}": {f"t{i}"} for i in range(n)})
    rep = evaluate(src, tgt, TransformPair.identity(d), lex, k_list=(1, 5, 10))
    assert rep.precision_at_k[1] <= rep.precision_at_k[5] <= rep.precision_at_k[10]


def test_exact_rotation_with_true_transform():
    pair = generate(n=60, d=6, noise_sigma=0.0, seed=5)
    src = embedding_set([word_name(i) for i in range(60)], pair.X)
    tgt = embedding_set([word_name(j) for j in range(60)], pair.Y)
    lex = Lexicon(
        entries={
            word_name(i): {word_name(int(j))}
            for i, j in enumerate(pair.ground_truth_map)
        }
    )
    q = pair.ground_truth_transform
    transform = TransformPair(t_xy=q.copy(), t_yx=q.T.copy())
    rep = evaluate(src, tgt, transform, lex, metric="nn")
    assert rep.precision_at_1 == 1.0


def test_any_gold_target_counts_as_hit():
    emb, _ = identity_setup(n=6)
    lex = Lexicon(entries={"w0": {"definitely-absent-word", "w0"}})
    rep = evaluate(emb, emb, TransformPair.identity(6), lex)
    assert rep.precision_at_1 == 1.0


def test_json_and_table_output():
    emb, lex = identity_setup(n=8)
    rep = evaluate(emb, emb, TransformPair.identity(6), lex, k_list=(1, 5))
    payload = json.loads(rep.to_json())
    assert payload["metric"] == "csls"
    assert payload["k"] == [1, 5]
    assert payload["precision"]["1"] == 1.0
    assert payload["n_evaluated"] == 8
    assert payload["n_oov"] == 0
    text = rep.table()
    assert "precision@1" in text and "metric" in text
