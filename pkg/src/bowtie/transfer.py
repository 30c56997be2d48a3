"""Cross-dataset vocabulary transfer.

Maps one vocabulary onto another by exact token string (no case folding, no
apostrophe canonicalization), rewrites bags into the target index space, and
evaluates a checkpoint trained on the target vocabulary against the
re-encoded corpus.  Tokens without a counterpart are dropped per token, so a
review can come out empty but is still scored; colliding targets merge their
counts (impossible under exact matching, stated for safety).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, LabeledBag, PolarityTable, Vocabulary
from .encode import (
    POLARITY_WEIGHTED,
    EncodedDataset,
    PolarityStats,
    encode_corpus,
    polarity_stats,
)
from .errors import DataError
from .train import Checkpoint, EvalResult, check_fingerprint, evaluate


@dataclass
class VocabMap:
    """source index -> target index, -1 where the token has no counterpart."""

    mapping: np.ndarray = field(repr=False)  # int64, length source_size
    dropped: list[str]                       # sorted source tokens with no target
    source_size: int
    target_size: int

    @property
    def mapped_count(self) -> int:
        return self.source_size - len(self.dropped)


def build_vocab_map(source: Vocabulary, target: Vocabulary) -> VocabMap:
    mapping = np.full(source.size, -1, dtype=np.int64)
    dropped: list[str] = []
    lookup = target.index_of
    for i, token in enumerate(source.tokens):
        j = lookup.get(token)
        if j is None:
            dropped.append(token)
        else:
            mapping[i] = j
    return VocabMap(
        mapping=mapping,
        dropped=sorted(dropped),
        source_size=source.size,
        target_size=target.size,
    )


def remap_bag(bag: LabeledBag, vmap: VocabMap) -> LabeledBag:
    """Rewrite one bag into the target index space.

    Unmapped tokens vanish; if several source indices land on the same target
    index their counts add.  A bag can come out empty.
    """
    targets = vmap.mapping[bag.indices]
    keep = targets >= 0
    kept_targets = targets[keep]
    kept_counts = bag.counts[keep]
    uniq, inverse = np.unique(kept_targets, return_inverse=True)
    merged = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(merged, inverse, kept_counts)
    return LabeledBag(indices=uniq, counts=merged, label=bag.label)


def remap_corpus(corpus: Corpus, vmap: VocabMap, vocab_id: str = "") -> Corpus:
    bags = [remap_bag(bag, vmap) for bag in corpus.bags]
    return Corpus(bags=bags, vocab_id=vocab_id, split=corpus.split)


def reencode_kid(
    corpus: Corpus,
    vmap: VocabMap,
    polarity: PolarityTable,
) -> EncodedDataset:
    """Remap a foreign corpus and encode it polarity-weighted at target width."""
    if len(polarity) != vmap.target_size:
        raise DataError(
            f"polarity table of length {len(polarity)} for a "
            f"target vocabulary of size {vmap.target_size}"
        )
    remapped = remap_corpus(corpus, vmap)
    return encode_corpus(
        remapped, POLARITY_WEIGHTED, polarity=polarity, width=vmap.target_size
    )


@dataclass
class TransferReport:
    source_vocab_size: int
    target_vocab_size: int
    mapped_count: int
    dropped: list[str]
    stats: PolarityStats
    result: EvalResult


def transfer_evaluate(
    checkpoint: Checkpoint,
    source_corpus: Corpus,
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    polarity: PolarityTable | None = None,
    batch_size: int = 512,
) -> TransferReport:
    """Score a target-vocabulary checkpoint on a foreign corpus.

    The checkpoint must fingerprint-match the target vocabulary, and a
    polarity table over the target vocabulary is required when the checkpoint
    was trained on the polarity-weighted encoding.
    """
    check_fingerprint(checkpoint, target_vocab.size, target_vocab.fingerprint())
    vmap = build_vocab_map(source_vocab, target_vocab)
    if checkpoint.encoding == POLARITY_WEIGHTED:
        if polarity is None:
            raise DataError(
                "checkpoint uses the polarity-weighted encoding; "
                "a target-vocabulary polarity table is required"
            )
        dataset = reencode_kid(source_corpus, vmap, polarity)
    else:
        remapped = remap_corpus(
            source_corpus, vmap, vocab_id=target_vocab.fingerprint()
        )
        dataset = encode_corpus(remapped, checkpoint.encoding, width=target_vocab.size)
    result = evaluate(checkpoint.model, dataset, batch_size=batch_size)
    return TransferReport(
        source_vocab_size=vmap.source_size,
        target_vocab_size=vmap.target_size,
        mapped_count=vmap.mapped_count,
        dropped=list(vmap.dropped),
        stats=polarity_stats(dataset),
        result=result,
    )


def write_transfer_report(report: TransferReport, out) -> None:
    """Dropped tokens one per line, then the mapping summary, polarity stats,
    and accuracy/bce, closed by a machine-parseable key=value footer."""
    close = False
    if isinstance(out, (str, bytes)):
        out = open(out, "w", encoding="utf-8")
        close = True
    try:
        out.write("# tokens with no counterpart in the target vocabulary\n")
        for token in report.dropped:
            out.write(f"{token}\n")
        out.write(
            f"# {report.mapped_count} of {report.source_vocab_size} source tokens "
            f"map onto the {report.target_vocab_size}-token target vocabulary, "
            f"{len(report.dropped)} dropped\n"
        )
        s = report.stats
        out.write(
            f"# re-encoded entry range [{s.element_min:.6f}, {s.element_max:.6f}], "
            f"per-review sum range [{s.rowsum_min:.6f}, {s.rowsum_max:.6f}]\n"
        )
        r = report.result
        out.write(
            f"# {r.count} examples: accuracy {r.accuracy:.4f}, bce {r.bce:.4f}\n"
        )
        out.write("---\n")
        out.write(f"source_vocab={report.source_vocab_size}\n")
        out.write(f"target_vocab={report.target_vocab_size}\n")
        out.write(f"mapped={report.mapped_count}\n")
        out.write(f"dropped={len(report.dropped)}\n")
        out.write(f"element_min={s.element_min:.9g}\n")
        out.write(f"element_max={s.element_max:.9g}\n")
        out.write(f"rowsum_min={s.rowsum_min:.9g}\n")
        out.write(f"rowsum_max={s.rowsum_max:.9g}\n")
        out.write(f"examples={r.count}\n")
        out.write(f"accuracy={r.accuracy:.6f}\n")
        out.write(f"bce={r.bce:.6f}\n")
    finally:
        if close:
            out.close()
