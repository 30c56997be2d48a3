"""Corpus ingestion for the two review collections.

Loads the Stanford-style raw distribution (one-token-per-line vocabulary,
per-line polarity ratings, ``rating idx:count ...`` bag-of-words lines) and
the Keras-style integer-sequence distribution, normalizing both into labeled
bags of token counts over a dense vocabulary.  A canonical line format
(``label<TAB>idx:count ...``) makes everything downstream source-agnostic.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .rngseed import derive_rng


class Vocabulary:
    """Ordered token-to-index map; indices are dense and start at 0."""

    def __init__(self, tokens: list[str]):
        self.tokens = list(tokens)
        self.index_of: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            if tok in self.index_of:
                raise DataError(
                    f"duplicate token {tok!r} at indices "
                    f"{self.index_of[tok]} and {i}"
                )
            self.index_of[tok] = i

    @property
    def size(self) -> int:
        return len(self.tokens)

    def fingerprint(self) -> str:
        """SHA-256 over the newline-joined token list."""
        joined = "\n".join(self.tokens).encode("utf-8")
        return hashlib.sha256(joined).hexdigest()

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def __repr__(self) -> str:
        return f"Vocabulary(size={self.size})"


@dataclass
class PolarityTable:
    """Per-token sentiment ratings aligned index-for-index with a Vocabulary."""

    ratings: np.ndarray  # float64, all finite

    def __post_init__(self):
        self.ratings = np.asarray(self.ratings, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.ratings)


@dataclass(eq=False)
class LabeledBag:
    """One review as sorted (token index, count) pairs plus a binary label."""

    indices: np.ndarray  # int64, strictly increasing
    counts: np.ndarray   # int64, all >= 1
    label: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.indices.shape != self.counts.shape or self.indices.ndim != 1:
            raise ValueError("indices and counts must be 1-d and the same length")
        if self.indices.size and (np.diff(self.indices) <= 0).any():
            raise ValueError("token indices must be strictly increasing")
        if (self.counts < 1).any():
            raise ValueError("counts must be >= 1")
        if self.label not in (0, 1):
            raise ValueError(f"label {self.label!r} not in {{0, 1}}")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabeledBag)
            and self.label == other.label
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.counts, other.counts)
        )

    def total_tokens(self) -> int:
        return int(self.counts.sum())


@dataclass
class Corpus:
    """A list of labeled bags whose indices refer to one named vocabulary."""

    bags: list[LabeledBag]
    vocab_id: str = ""
    split: str = "train"

    def __len__(self) -> int:
        return len(self.bags)

    def label_counts(self) -> tuple[int, int]:
        """(negative, positive) totals."""
        pos = sum(bag.label for bag in self.bags)
        return len(self.bags) - pos, pos


def _open_text(path: str | Path):
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def load_slmrd_vocab(path: str | Path) -> Vocabulary:
    """Load a one-token-per-line vocabulary file (line number = index, 0-based).

    This is both the Stanford ``imdb.vocab`` layout and the canonical
    vocabulary format written by ``prepare``.
    """
    tokens: list[str] = []
    seen: dict[str, int] = {}
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.rstrip("\n")
            if tok in seen:
                raise DataError(
                    f"{path}: duplicate token {tok!r} at lines {seen[tok]} and {lineno}"
                )
            seen[tok] = lineno
            tokens.append(tok)
    if not tokens:
        raise DataError(f"{path}: empty vocabulary file")
    return Vocabulary(tokens)


load_vocab_file = load_slmrd_vocab


def load_polarity(path: str | Path, vocab: Vocabulary) -> PolarityTable:
    """Load one-rating-per-line polarity values aligned with ``vocab``."""
    ratings: list[float] = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            try:
                value = float(text)
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}: cannot parse rating {text!r}"
                ) from None
            if not np.isfinite(value):
                raise DataError(f"{path}: line {lineno}: non-finite rating {text!r}")
            ratings.append(value)
    if len(ratings) != vocab.size:
        raise DataError(
            f"{path}: {len(ratings)} ratings for a vocabulary of {vocab.size} tokens"
        )
    return PolarityTable(np.array(ratings, dtype=np.float64))


def _parse_pairs(parts: list[str], width: int, where: str) -> tuple[np.ndarray, np.ndarray]:
    indices = np.empty(len(parts), dtype=np.int64)
    counts = np.empty(len(parts), dtype=np.int64)
    for i, part in enumerate(parts):
        idx_s, sep, cnt_s = part.partition(":")
        if not sep:
            raise DataError(f"{where}: malformed pair {part!r}")
        try:
            idx, cnt = int(idx_s), int(cnt_s)
        except ValueError:
            raise DataError(f"{where}: malformed pair {part!r}") from None
        if not 0 <= idx < width:
            raise DataError(f"{where}: token index {idx} outside [0, {width})")
        if cnt < 1:
            raise DataError(f"{where}: count {cnt} for index {idx} must be >= 1")
        indices[i], counts[i] = idx, cnt
    order = np.argsort(indices, kind="stable")
    indices, counts = indices[order], counts[order]
    if indices.size > 1 and (np.diff(indices) == 0).any():
        dup = int(indices[np.flatnonzero(np.diff(indices) == 0)[0]])
        raise DataError(f"{where}: duplicate token index {dup}")
    return indices, counts


def load_slmrd_bow(path: str | Path, vocab: Vocabulary, split: str = "train") -> Corpus:
    """Load a ``labeledBow.feat`` file: each line ``rating idx:count ...``.

    Ratings >= 7 become positive labels, <= 4 negative; 5 and 6 do not occur
    in the dataset by construction and are rejected loudly.
    """
    bags: list[LabeledBag] = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            where = f"{path}: line {lineno}"
            parts = line.split()
            if not parts:
                raise DataError(f"{where}: blank record")
            try:
                rating = int(parts[0])
            except ValueError:
                raise DataError(f"{where}: malformed rating {parts[0]!r}") from None
            if not 0 <= rating <= 10:
                raise DataError(f"{where}: rating {rating} outside [0, 10]")
            if rating in (5, 6):
                raise DataError(f"{where}: rating {rating} has no defined label")
            label = 1 if rating >= 7 else 0
            indices, counts = _parse_pairs(parts[1:], vocab.size, where)
            bags.append(LabeledBag(indices, counts, label))
    return Corpus(bags, vocab_id=vocab.fingerprint(), split=split)


def load_kid(
    word_index_path: str | Path,
    sequences_path: str | Path,
    index_offset: int = 3,
) -> tuple[Vocabulary, Corpus]:
    """Load the integer-sequence distribution.

    The word-index file is a JSON object mapping token -> positive rank; the
    vocabulary index of a token is its position in rank order.  The sequence
    file holds one review per line as ``label<TAB>v1 v2 ...``; each stored
    value v maps to token index ``v - index_offset``, and values below the
    offset are reserved control codes that are dropped.
    """
    with _open_text(word_index_path) as fh:
        try:
            word_index = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{word_index_path}: not valid JSON: {exc}") from exc
    if not isinstance(word_index, dict) or not word_index:
        raise DataError(f"{word_index_path}: expected a non-empty token->rank object")
    ranks_seen: dict[int, str] = {}
    for tok, rank in word_index.items():
        if not isinstance(rank, int) or rank < 1:
            raise DataError(f"{word_index_path}: rank for {tok!r} must be a positive integer")
        if rank in ranks_seen:
            raise DataError(
                f"{word_index_path}: tokens {ranks_seen[rank]!r} and {tok!r} share rank {rank}"
            )
        ranks_seen[rank] = tok
    tokens = [tok for tok, _ in sorted(word_index.items(), key=lambda kv: kv[1])]
    vocab = Vocabulary(tokens)

    bags: list[LabeledBag] = []
    with _open_text(sequences_path) as fh:
        for lineno, line in enumerate(fh, 1):
            where = f"{sequences_path}: line {lineno}"
            label_s, sep, rest = line.rstrip("\n").partition("\t")
            if not sep:
                raise DataError(f"{where}: missing label")
            try:
                label = int(label_s)
            except ValueError:
                raise DataError(f"{where}: missing label") from None
            if label not in (0, 1):
                raise DataError(f"{where}: label {label} not in {{0, 1}}")
            folded: dict[int, int] = {}
            for value_s in rest.split():
                try:
                    value = int(value_s)
                except ValueError:
                    raise DataError(f"{where}: malformed value {value_s!r}") from None
                rank = value - index_offset
                if rank < 0:
                    continue  # reserved control code
                if rank >= vocab.size:
                    raise DataError(
                        f"{where}: rank {rank} outside [0, {vocab.size}) after offset removal"
                    )
                folded[rank] = folded.get(rank, 0) + 1
            indices = np.fromiter(sorted(folded), dtype=np.int64, count=len(folded))
            counts = np.array([folded[i] for i in sorted(folded)], dtype=np.int64)
            bags.append(LabeledBag(indices, counts, label))
    return vocab, Corpus(bags, vocab_id=vocab.fingerprint(), split="full")


_BREAK_RE = re.compile(r"<br\s*/?>")
_SPLIT_RE = re.compile(r"(?:[^\w']|_)+")


def tokenize_raw(text: str) -> list[str]:
    """Lowercase, strip HTML line breaks, split on non-alphanumeric (apostrophes stay)."""
    text = _BREAK_RE.sub(" ", text.lower())
    return [tok for tok in _SPLIT_RE.split(text) if tok]


def shuffle(corpus: Corpus, seed: int) -> Corpus:
    """Deterministically permute the bags; same seed, same order."""
    perm = derive_rng(seed).permutation(len(corpus.bags))
    return Corpus(
        [corpus.bags[i] for i in perm],
        vocab_id=corpus.vocab_id,
        split=corpus.split,
    )


def save_corpus_file(corpus: Corpus, path: str | Path) -> None:
    """Write the canonical format: one ``label<TAB>idx:count ...`` record per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for bag in corpus.bags:
            pairs = " ".join(
                f"{idx}:{cnt}" for idx, cnt in zip(bag.indices, bag.counts)
            )
            fh.write(f"{bag.label}\t{pairs}\n")


def load_corpus_file(
    path: str | Path,
    vocab_id: str = "",
    split: str = "train",
    width: int | None = None,
) -> Corpus:
    """Read the canonical format back; validates ordering and (if given) width."""
    bags: list[LabeledBag] = []
    bound = width if width is not None else np.iinfo(np.int64).max
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            where = f"{path}: line {lineno}"
            label_s, sep, rest = line.rstrip("\n").partition("\t")
            if not sep:
                raise DataError(f"{where}: missing label field")
            try:
                label = int(label_s)
            except ValueError:
                raise DataError(f"{where}: malformed label {label_s!r}") from None
            if label not in (0, 1):
                raise DataError(f"{where}: label {label} not in {{0, 1}}")
            indices, counts = _parse_pairs(rest.split(), bound, where)
            bags.append(LabeledBag(indices, counts, label))
    return Corpus(bags, vocab_id=vocab_id, split=split)
