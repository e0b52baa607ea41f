"""Bilingual dictionary parsing, indexing against vocabularies, and merging.

Dictionaries are multimaps: a source word may carry several gold targets
(all of them count as correct at evaluation time). Raw files follow the
MUSE convention, one "source target" pair per line, tab or space separated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import Vocabulary, fold_case
from .errors import ClweError

WordPairList = list[tuple[str, str]]


@dataclass(frozen=True)
class IndexedDictionary:
    """Deduplicated (source index, target index) pairs bound to a vocabulary pair."""

    pairs: np.ndarray  # int64, shape (p, 2)
    src_vocab_size: int
    tgt_vocab_size: int

    def __post_init__(self) -> None:
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "pairs", pairs)
        if len(pairs):
            if pairs[:, 0].min() < 0 or pairs[:, 0].max() >= self.src_vocab_size:
                raise ClweError("source index out of range")
            if pairs[:, 1].min() < 0 or pairs[:, 1].max() >= self.tgt_vocab_size:
                raise ClweError("target index out of range")
            if len({(i, j) for i, j in pairs.tolist()}) != len(pairs):
                raise ClweError("duplicate (source, target) pair")

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def source_indices(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def target_indices(self) -> np.ndarray:
        return self.pairs[:, 1]

    def targets_by_source(self) -> dict[int, list[int]]:
        """Gold target sets keyed by source index, in pair order."""
        out: dict[int, list[int]] = {}
        for i, j in self.pairs.tolist():
            out.setdefault(i, []).append(j)
        return out


def parse_dictionary(path: str) -> WordPairList:
    """Read word pairs, one per non-empty line, split on any whitespace run."""
    pairs: WordPairList = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise ClweError(f"{path}:{lineno}: expected 2 tokens, got {len(tokens)}")
            pairs.append((tokens[0], tokens[1]))
    return pairs


def index_dictionary(
    raw: WordPairList,
    src: Vocabulary,
    tgt: Vocabulary,
    lowercase: bool = True,
) -> tuple[IndexedDictionary, int]:
    """Map word pairs to index pairs, dropping OOV pairs and duplicates.

    OOV is data, not an error: the dropped count covers pairs with either
    word missing plus exact duplicates of an earlier pair. Order of first
    occurrence is preserved. ``lowercase`` applies the same case folding
    as the embedding loader before lookup.
    """
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    dropped = 0
    for s_word, t_word in raw:
        if lowercase:
            s_word, t_word = fold_case(s_word), fold_case(t_word)
        i = src.index.get(s_word)
        j = tgt.index.get(t_word)
        if i is None or j is None or (i, j) in seen:
            dropped += 1
            continue
        seen.add((i, j))
        pairs.append((i, j))
    indexed = IndexedDictionary(
        np.array(pairs, dtype=np.int64).reshape(-1, 2), len(src), len(tgt)
    )
    return indexed, dropped


def merge_dictionaries(a: IndexedDictionary, b: IndexedDictionary) -> IndexedDictionary:
    """Set union of pairs: all of ``a`` in order, then ``b``'s novel pairs."""
    if (a.src_vocab_size, a.tgt_vocab_size) != (b.src_vocab_size, b.tgt_vocab_size):
        raise ClweError(
            f"vocabulary size mismatch: {(a.src_vocab_size, a.tgt_vocab_size)} vs "
            f"{(b.src_vocab_size, b.tgt_vocab_size)}"
        )
    seen = {(i, j) for i, j in a.pairs.tolist()}
    merged = a.pairs.tolist()
    for i, j in b.pairs.tolist():
        if (i, j) not in seen:
            seen.add((i, j))
            merged.append([i, j])
    return IndexedDictionary(
        np.array(merged, dtype=np.int64).reshape(-1, 2), a.src_vocab_size, a.tgt_vocab_size
    )


def dictionary_words(
    indexed: IndexedDictionary, src: Vocabulary, tgt: Vocabulary
) -> WordPairList:
    """Map index pairs back to surface forms."""
    return [(src.words[i], tgt.words[j]) for i, j in indexed.pairs.tolist()]


def save_dictionary(pairs: WordPairList, path: str) -> None:
    """Write pairs tab-separated, one per line (MUSE format)."""
    with open(path, "w", encoding="utf-8") as fh:
        for s_word, t_word in pairs:
            fh.write(f"{s_word}\t{t_word}\n")
