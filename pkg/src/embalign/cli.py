"""Command-line entry point: align, translate, evaluate, finetune, stats, synth.

Exit codes: 0 success, 2 usage, 3 I/O or file-format failure, 4 every
stochastic run failed, 5 numerical or data failure. Every subcommand prints
its fully resolved configuration before doing any work, and identical
invocations with the same master seed produce byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io, report, synth
from .config import PRESETS, PipelineConfig, apply_preset
from .errors import (
    AllRunsFailed,
    CorruptMapFile,
    CorruptTransformFile,
    EmbalignError,
    EmptyVocabulary,
    IoFailure,
    MissingHeader,
)
from .evaluation import evaluate
from .finetune import FinetuneConfig, finetune
from .matching import avg_knn_cosine, rank_by_metric
from .orchestrator import align_pipeline, export_run_stats, write_checkpoints

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ALL_RUNS_FAILED = 4
EXIT_NUMERIC = 5

_IO_ERRORS = (
    IoFailure,
    MissingHeader,
    CorruptTransformFile,
    CorruptMapFile,
    EmptyVocabulary,
    FileNotFoundError,
)

_METRICS = ("csls", "nn")


def _print_config(command: str, options: dict) -> None:
    print(f"[config] command={command}")
    for key in sorted(options):
        if key in ("func", "command"):
            continue
        print(f"[config] {key}={options[key]}")


def _default_jobs() -> int:
    env = os.environ.get("EMBALIGN_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.preset:
        cfg = apply_preset(cfg, args.preset)
    overrides = {
        "vocab": args.vocab,
        "pca_dim": args.pca_dim,
        "lam": args.lam,
        "batch_size": args.batch_size,
        "epochs_pca": args.epochs_pca,
        "epochs_raw": args.epochs_raw,
        "reciprocal_from": args.reciprocal_from,
        "runs": args.runs,
        "seed": args.seed,
        "learning_rate": args.learning_rate,
        "lr_decay": args.lr_decay,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    mode = "p_icp" if args.mode == "picp" else "mini_batch_cycle"
    return replace(
        cfg,
        jobs=jobs,
        mode=mode,
        randomize_pca=not args.no_random_pca,
        randomize_order=not args.no_random_order,
    )


def _require_files(*paths) -> None:
    for p in paths:
        if not Path(p).is_file():
            raise IoFailure(f"input file not found: {p}")


def cmd_align(args) -> int:
    cfg = _pipeline_config(args)
    _print_config(
        "align",
        {**cfg.as_dict(), "src": args.src, "tgt": args.tgt, "out_dir": args.out_dir},
    )
    _require_files(args.src, args.tgt)
    src = io.load_vec(args.src, max_words=cfg.vocab)
    tgt = io.load_vec(args.tgt, max_words=cfg.vocab)
    print(f"loaded {len(src)} x {src.dim} source, {len(tgt)} x {tgt.dim} target")

    result = align_pipeline(src.vectors, tgt.vectors, cfg, parallelism=cfg.jobs)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.save_transform(result.raw_record.transforms, out / "transform.txt")
    io.save_map(result.raw_record.cmap, out / "map.txt")
    export_run_stats(
        result.pca_records + [result.raw_record], out / "run_stats.csv"
    )
    report.render_run_report(result.pca_records, out)
    if args.checkpoint_runs:
        write_checkpoints(result.pca_records, out / "checkpoints")

    sel = result.selection
    confidence = "LOW" if sel.low_confidence else "ok"
    print(
        f"selected seed {sel.record.seed}: loss {sel.best_loss:.6f} "
        f"(median {sel.median_loss:.6f}, ratio {sel.ratio:.3f}, "
        f"confidence {confidence})"
    )
    print(f"refined full-dim loss {result.raw_record.final_loss:.6f}")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _load_transform_checked(path, dim: int):
    pair = io.load_transform(path)
    if pair.dim != dim:
        raise EmbalignError(
            f"transform dimension {pair.dim} does not match embeddings ({dim})"
        )
    return pair


def cmd_translate(args) -> int:
    _print_config("translate", vars(args))
    _require_files(args.src, args.tgt, args.transform)
    src = io.load_vec(args.src, max_words=args.vocab)
    tgt = io.load_vec(args.tgt, max_words=args.vocab)
    pair = _load_transform_checked(args.transform, src.dim)

    if args.all:
        requested = list(src.words)
    else:
        requested = [w for w in args.words.split(",") if w]
    rows, words = [], []
    for w in requested:
        row = src.row(w)
        if row is None:
            print(f"unknown word: {w}", file=sys.stderr)
            continue
        rows.append(row)
        words.append(w)
    if not rows:
        print("no requested word found in the source vocabulary", file=sys.stderr)
        return EXIT_USAGE

    mapped_all = pair.map_x(src.vectors)
    r_targets = None
    if args.metric == "csls":
        r_targets = avg_knn_cosine(tgt.vectors, mapped_all, args.csls_k)
    ranked, scores = rank_by_metric(
        mapped_all[rows], tgt.vectors, args.metric, args.k,
        csls_k=args.csls_k, r_targets=r_targets, return_scores=True,
    )
    triples = []
    for word, cand_idx, cand_scores in zip(words, ranked, scores):
        for j, s in zip(cand_idx, cand_scores):
            triples.append((word, tgt.words[int(j)], float(s)))
    io.export_lexicon(triples, args.out)
    print(f"wrote {len(triples)} candidates for {len(words)} words to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _print_config("evaluate", vars(args))
    _require_files(args.src, args.tgt, args.transform, args.gold)
    src = io.load_vec(args.src, max_words=args.vocab)
    tgt = io.load_vec(args.tgt, max_words=args.vocab)
    pair = _load_transform_checked(args.transform, src.dim)
    lexicon = io.load_lexicon(args.gold)
    k_list = tuple(int(k) for k in args.k.split(","))
    rep = evaluate(
        src, tgt, pair, lexicon, metric=args.metric, k_list=k_list,
        csls_k=args.csls_k,
    )
    print(rep.table())
    print(rep.to_json())
    if args.json:
        Path(args.json).write_text(rep.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_finetune(args) -> int:
    _print_config("finetune", vars(args))
    _require_files(args.src, args.tgt, args.transform)
    src = io.load_vec(args.src, max_words=args.vocab_limit)
    tgt = io.load_vec(args.tgt, max_words=args.vocab_limit)
    pair = _load_transform_checked(args.transform, src.dim)
    cfg = FinetuneConfig(
        iterations=args.iterations,
        vocab_limit=args.vocab_limit,
        match_metric=args.metric,
        dictionary_size=args.dict_size,
        csls_k=args.csls_k,
    )

    gold = None
    if args.gold:
        _require_files(args.gold)
        gold = io.load_lexicon(args.gold)
        before = evaluate(src, tgt, pair, gold, metric=args.metric)
        print(f"precision@1 before finetune: {before.precision_at_1:.4f}")

    refined = finetune(src.vectors, tgt.vectors, pair, cfg)
    io.save_transform(refined, args.out)
    print(f"refined transform written to {args.out}")

    if gold is not None:
        after = evaluate(src, tgt, refined, gold, metric=args.metric)
        delta = after.precision_at_1 - before.precision_at_1
        print(
            f"precision@1 after finetune: {after.precision_at_1:.4f} "
            f"(delta {delta:+.4f})"
        )
    return EXIT_OK


def cmd_stats(args) -> int:
    _print_config("stats", vars(args))
    _require_files(args.run_stats)
    with open(args.run_stats, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if args.stage:
        rows = [r for r in rows if r["stage"] == args.stage]
    if not rows:
        print("no matching rows in the stats file", file=sys.stderr)
        return EXIT_NUMERIC
    losses = np.array([float(r["final_loss"]) for r in rows])
    intrinsic = np.array([r["converged"] == "true" for r in rows])
    usable = intrinsic & np.isfinite(losses)
    if usable.any():
        median = float(np.median(losses[usable]))
        flags = usable & (losses < 0.5 * median)
        best = float(losses[usable].min())
        ratio = best / median if median > 0 else 1.0
    else:
        median, best, ratio = float("nan"), float("nan"), float("nan")
        flags = np.zeros(len(rows), dtype=bool)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig_path = out / "run_stats.png"
    report.render_loss_histogram(losses, flags, fig_path)
    print(f"runs            {len(rows)}")
    print(f"completed       {int(intrinsic.sum())}")
    print(f"converged(<.5m) {int(flags.sum())}")
    print(f"median loss     {median:.6f}")
    print(f"best loss       {best:.6f}")
    print(f"best/median     {ratio:.3f}")
    print(f"histogram written to {fig_path}")
    return EXIT_OK


def cmd_synth(args) -> int:
    _print_config("synth", vars(args))
    spectrum = None
    if args.spectrum:
        spectrum = np.array([float(v) for v in args.spectrum.split(",")])
    pair = synth.generate(
        n=args.n,
        d=args.d,
        noise_sigma=args.noise,
        overlap_fraction=args.overlap,
        anisotropy=spectrum,
        seed=args.seed,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    synth.write_vec_files(pair, out / "src.vec", out / "tgt.vec")
    with open(out / "gold.tsv", "w", encoding="utf-8") as fh:
        for s, t in synth.gold_pairs(pair):
            fh.write(f"{s}\t{t}\n")
    io.save_transform(synth.ground_truth_transforms(pair), out / "transform_gt.txt")
    n_overlap = int((pair.ground_truth_map >= 0).sum())
    print(
        f"generated {args.n} x {args.d} pair ({n_overlap} overlapping rows) "
        f"in {out}"
    )
    return EXIT_OK


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vocab", type=int, default=None, help="vocabulary cap")
    p.add_argument("--pca-dim", type=int, default=None, help="projection dim")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="cycle constraint weight")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs-pca", type=int, default=None)
    p.add_argument("--epochs-raw", type=int, default=None)
    p.add_argument("--reciprocal-from", type=int, default=None,
                   help="full-dim stage epoch that starts reciprocal filtering "
                        "(negative disables)")
    p.add_argument("--runs", type=int, default=None, help="stochastic restarts")
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--lr-decay", type=float, default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: EMBALIGN_THREADS or 1)")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--preset", choices=PRESETS, default=None)
    p.add_argument("--no-random-pca", action="store_true",
                   help="share one projection across runs")
    p.add_argument("--no-random-order", action="store_true",
                   help="share one batch order across runs")
    p.add_argument("--mode", choices=("mbc", "picp"), default="mbc",
                   help="optimizer: mini-batch cycle or Procrustes ablation")
    p.add_argument("--checkpoint-runs", action="store_true",
                   help="persist per-run transforms and maps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embalign",
        description="Unsupervised word-to-word translation between "
                    "embedding spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="learn transforms with stochastic restarts")
    p.add_argument("src", help="source .vec file")
    p.add_argument("tgt", help="target .vec file")
    p.add_argument("-o", "--out-dir", required=True)
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("translate", help="retrieve top-k translations")
    p.add_argument("src")
    p.add_argument("tgt")
    p.add_argument("transform")
    p.add_argument("--words", default="", help="comma-separated source words")
    p.add_argument("--all", action="store_true", help="translate every word")
    p.add_argument("--metric", choices=_METRICS, default="csls")
    p.add_argument("-k", type=int, default=10, help="candidates per word")
    p.add_argument("--csls-k", type=int, default=10)
    p.add_argument("--vocab", type=int, default=None)
    p.add_argument("-o", "--out", required=True, help="output TSV")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("evaluate", help="precision@k against a gold lexicon")
    p.add_argument("src")
    p.add_argument("tgt")
    p.add_argument("transform")
    p.add_argument("gold")
    p.add_argument("--metric", choices=_METRICS, default="csls")
    p.add_argument("--k", default="1,5,10", help="comma-separated cutoffs")
    p.add_argument("--csls-k", type=int, default=10)
    p.add_argument("--vocab", type=int, default=None)
    p.add_argument("--json", default=None, help="also write the JSON report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("finetune", help="iterative Procrustes refinement")
    p.add_argument("src")
    p.add_argument("tgt")
    p.add_argument("transform")
    p.add_argument("-o", "--out", required=True, help="refined transform file")
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--metric", choices=_METRICS, default="csls")
    p.add_argument("--dict-size", type=int, default=10_000)
    p.add_argument("--vocab-limit", type=int, default=200_000)
    p.add_argument("--csls-k", type=int, default=10)
    p.add_argument("--gold", default=None,
                   help="gold lexicon for before/after accuracy")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("stats", help="summarize a run-stats CSV and plot it")
    p.add_argument("run_stats", help="CSV produced by align")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--stage", default=None, help="restrict to one stage tag")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic aligned pair")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--overlap", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spectrum", default=None,
                   help="comma-separated variance spectrum (default d..1)")
    p.add_argument("-o", "--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AllRunsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_RUNS_FAILED
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EmbalignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
