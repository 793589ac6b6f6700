"""Readers and writers for embeddings, transforms, lexicons and maps.

File formats:

* embeddings: word2vec text format, header ``<count> <dim>`` followed by
  ``<word> <dim floats>`` lines ordered by descending frequency;
* transform: line 1 is ``dim``, then 2*dim lines of dim decimals
  (t_xy rows first, then t_yx rows), round-tripping float64 exactly;
* lexicon: two whitespace-separated columns, one pair per line;
* correspondence map: line 1 ``n m``, line 2 the m targets of f_y,
  line 3 the n targets of f_x.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptMapFile,
    CorruptTransformFile,
    DimensionMismatch,
    EmptyVocabulary,
    IoFailure,
    MissingHeader,
)


@dataclass
class EmbeddingSet:
    """An ordered vocabulary (most frequent first) with one vector per word."""

    words: list[str]
    vectors: np.ndarray
    dim: int
    skipped_rows: int = 0
    duplicate_rows: int = 0
    _index: dict[str, int] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape != (len(self.words), self.dim):
            raise DimensionMismatch(
                f"vector matrix {self.vectors.shape} does not match "
                f"{len(self.words)} words of dim {self.dim}"
            )
        if len(set(self.words)) != len(self.words):
            raise EmptyVocabulary("duplicate words in embedding set")
        if not np.isfinite(self.vectors).all():
            raise DimensionMismatch("non-finite vector entries")

    def __len__(self) -> int:
        return len(self.words)

    def row(self, word: str) -> int | None:
        """Index of ``word``, or None if absent."""
        if self._index is None:
            self._index = {w: i for i, w in enumerate(self.words)}
        return self._index.get(word)


@dataclass
class Lexicon:
    """Gold dictionary: each source word maps to its set of accepted targets."""

    entries: dict[str, set[str]]
    skipped_lines: int = 0

    def __post_init__(self):
        for src, tgts in self.entries.items():
            if not src:
                raise EmptyVocabulary("empty source word in lexicon")
            if not tgts:
                raise EmptyVocabulary(f"no targets for lexicon word {src!r}")

    def __len__(self) -> int:
        return len(self.entries)


def _parse_row(tokens: list[str], dim: int):
    """Split one data line into (word, values) or return None for a skippable row.

    A row is malformed (skipped) when its tail does not parse as exactly
    ``dim`` finite floats; a row whose fields all parse but number fewer than
    ``dim`` is a hard DimensionMismatch.
    """
    if len(tokens) < dim + 1:
        tail = tokens[1:]
        try:
            values = [float(t) for t in tail]
        except ValueError:
            return None
        if all(np.isfinite(values)):
            raise DimensionMismatch(
                f"row has {len(tail)} float fields, expected {dim}"
            )
        return None
    if len(tokens) == dim + 1:
        word, tail = tokens[0], tokens[1:]
    else:
        # tokens beyond dim+1: the word itself contains spaces
        word, tail = " ".join(tokens[:-dim]), tokens[-dim:]
    if not word:
        return None
    try:
        values = np.array([float(t) for t in tail], dtype=np.float64)
    except ValueError:
        return None
    if not np.isfinite(values).all():
        return None
    return word, values


def load_vec(path, max_words: int | None = None) -> EmbeddingSet:
    """Load a word2vec/FastText text file, keeping the first ``max_words`` rows.

    Duplicated words keep their first occurrence; malformed rows are skipped
    and counted on the returned set.
    """
    path = Path(path)
    try:
        fh = open(path, "r", encoding="utf-8", errors="replace")
    except OSError as exc:
        raise IoFailure(f"cannot open {path}: {exc}") from exc
    with fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MissingHeader(f"{path}: first line is not '<count> <dim>'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise MissingHeader(f"{path}: first line is not two integers") from None
        if count <= 0 or dim <= 0:
            raise MissingHeader(f"{path}: non-positive count or dim in header")
        limit = count if max_words is None else min(count, max_words)

        words: list[str] = []
        seen: set[str] = set()
        rows: list[np.ndarray] = []
        skipped = 0
        duplicates = 0
        for line in fh:
            if len(words) >= limit:
                break
            stripped = line.strip()
            if not stripped:
                continue
            parsed = _parse_row(stripped.split(" "), dim)
            if parsed is None:
                skipped += 1
                continue
            word, values = parsed
            if word in seen:
                duplicates += 1
                continue
            seen.add(word)
            words.append(word)
            rows.append(values)

    if skipped:
        warnings.warn(f"{path}: skipped {skipped} malformed rows", UserWarning)
    if not words:
        raise EmptyVocabulary(f"{path}: no valid embedding rows")
    return EmbeddingSet(
        words=words,
        vectors=np.vstack(rows),
        dim=dim,
        skipped_rows=skipped,
        duplicate_rows=duplicates,
    )


def save_vec(words: list[str], vectors: np.ndarray, path) -> None:
    """Write embeddings in word2vec text format (full float64 precision)."""
    vectors = np.asarray(vectors, dtype=np.float64)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(words)} {vectors.shape[1]}\n")
            for word, row in zip(words, vectors):
                fh.write(word + " " + " ".join(repr(float(v)) for v in row) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_transform(pair, path) -> None:
    """Persist a TransformPair as decimal text; load_transform inverts exactly."""
    t_xy = np.asarray(pair.t_xy, dtype=np.float64)
    t_yx = np.asarray(pair.t_yx, dtype=np.float64)
    if t_xy.shape != t_yx.shape or t_xy.ndim != 2 or t_xy.shape[0] != t_xy.shape[1]:
        raise DimensionMismatch("transform matrices must be square and equal-sized")
    dim = t_xy.shape[0]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{dim}\n")
            for matrix in (t_xy, t_yx):
                for row in matrix:
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_transform(path):
    """Read a transform file written by save_transform."""
    from .icp import TransformPair

    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise CorruptTransformFile(f"{path}: empty file")
    try:
        dim = int(lines[0])
    except ValueError:
        raise CorruptTransformFile(f"{path}: bad dimension header") from None
    if dim <= 0 or len(lines) != 1 + 2 * dim:
        raise CorruptTransformFile(
            f"{path}: header says {dim}, found {len(lines) - 1} payload rows"
        )
    rows = []
    for ln in lines[1:]:
        fields = ln.split()
        if len(fields) != dim:
            raise CorruptTransformFile(f"{path}: row with {len(fields)} fields")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise CorruptTransformFile(f"{path}: unparseable matrix entry") from None
    data = np.array(rows, dtype=np.float64)
    return TransformPair(t_xy=data[:dim], t_yx=data[dim:])


def load_lexicon(path) -> Lexicon:
    """Read a two-column dictionary file, merging repeated source words."""
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    entries: dict[str, set[str]] = {}
    skipped = 0
    for line in lines:
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 2:
            skipped += 1
            continue
        entries.setdefault(fields[0], set()).add(fields[1])
    if not entries:
        raise EmptyVocabulary(f"{path}: no valid lexicon lines")
    if skipped:
        warnings.warn(f"{path}: skipped {skipped} malformed lines", UserWarning)
    return Lexicon(entries=entries, skipped_lines=skipped)


def export_lexicon(pairs, path) -> None:
    """Write (source, target, score) triples as TSV in the given order."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for src, tgt, score in pairs:
                fh.write(f"{src}\t{tgt}\t{score}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_map(cmap, path) -> None:
    """Persist a CorrespondenceMap (f_y then f_x) as integer text."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(cmap.f_x)} {len(cmap.f_y)}\n")
            fh.write(" ".join(str(int(v)) for v in cmap.f_y) + "\n")
            fh.write(" ".join(str(int(v)) for v in cmap.f_x) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_map(path):
    """Read a correspondence map written by save_map."""
    from .matching import CorrespondenceMap

    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(lines) != 3:
        raise CorruptMapFile(f"{path}: expected 3 lines, found {len(lines)}")
    try:
        n, m = (int(v) for v in lines[0].split())
        f_y = np.array([int(v) for v in lines[1].split()], dtype=np.int64)
        f_x = np.array([int(v) for v in lines[2].split()], dtype=np.int64)
    except ValueError:
        raise CorruptMapFile(f"{path}: unparseable integer field") from None
    if len(f_y) != m or len(f_x) != n:
        raise CorruptMapFile(f"{path}: header says n={n} m={m}, payload disagrees")
    return CorrespondenceMap(f_y=f_y, f_x=f_x)
