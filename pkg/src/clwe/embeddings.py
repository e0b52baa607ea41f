"""Monolingual embedding I/O and preprocessing.

Embeddings are stored row-major: row i of the matrix is the vector of
vocabulary word i. Input files are expected in frequency order (most
frequent word first), as produced by word2vec/fastText text exports, so
row index doubles as a frequency rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClweError


@dataclass(frozen=True)
class Vocabulary:
    """Ordered word list with a dense word -> position index."""

    words: list[str]
    index: dict[str, int] = field(repr=False)

    @classmethod
    def from_words(cls, words: list[str]) -> "Vocabulary":
        index = {w: i for i, w in enumerate(words)}
        if len(index) != len(words):
            raise ClweError("vocabulary contains duplicate words")
        return cls(list(words), index)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A vocabulary plus its dense n x d embedding matrix (row i = word i)."""

    vocab: Vocabulary
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise ClweError(f"embedding matrix must be 2-D, got shape {self.matrix.shape}")
        if self.matrix.shape[0] != len(self.vocab):
            raise ClweError(
                f"row count {self.matrix.shape[0]} != vocabulary size {len(self.vocab)}"
            )
        if self.d <= 0:
            raise ClweError("embedding dimension must be positive")
        if not np.all(np.isfinite(self.matrix)):
            raise ClweError("embedding matrix contains non-finite values")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    def with_matrix(self, matrix: np.ndarray) -> "EmbeddingMatrix":
        """Same vocabulary, new values (used by the pure transforms below)."""
        return EmbeddingMatrix(self.vocab, matrix)


def fold_case(word: str) -> str:
    """Unicode simple lowercase, the case-folding policy used everywhere."""
    return word.lower()


def load_embeddings(
    path: str,
    max_vocab: int | None = None,
    lowercase: bool = True,
) -> EmbeddingMatrix:
    """Read a word2vec text file: header "<n> <d>", then "<word> v1 .. vd" rows.

    Rows are kept in file order (= frequency order). When lowercasing,
    duplicate surface forms keep only the first (most frequent) occurrence;
    duplicates do not count against ``max_vocab``, so the loaded vocabulary
    has min(max_vocab, #distinct words) entries.

    Raises:
        ClweError: malformed header, wrong row dimension, or a non-finite
            value; the message carries the 1-based line number.
    """
    if max_vocab is not None and max_vocab < 1:
        raise ClweError("max_vocab must be >= 1")

    words: list[str] = []
    index: dict[str, int] = {}
    rows: list[np.ndarray] = []

    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise ClweError(f"{path}:1: malformed header {header.strip()!r}")
        try:
            declared_n, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise ClweError(f"{path}:1: malformed header {header.strip()!r}") from None
        if declared_n < 0 or dim <= 0:
            raise ClweError(f"{path}:1: malformed header {header.strip()!r}")

        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != dim + 1:
                token = fields[0] if fields else "?"
                raise ClweError(
                    f"{path}:{lineno}: expected {dim} values for {token!r}, got {len(fields) - 1}"
                )
            word = fold_case(fields[0]) if lowercase else fields[0]
            try:
                vec = np.array(fields[1:], dtype=np.float64)
            except ValueError:
                raise ClweError(f"{path}:{lineno}: unparseable vector value") from None
            if not np.all(np.isfinite(vec)):
                raise ClweError(f"{path}:{lineno}: non-finite value for word {word!r}")
            if word in index:
                continue  # first occurrence (most frequent) wins
            index[word] = len(words)
            words.append(word)
            rows.append(vec)
            if max_vocab is not None and len(words) >= max_vocab:
                break

    matrix = np.vstack(rows) if rows else np.empty((0, dim), dtype=np.float64)
    return EmbeddingMatrix(Vocabulary(words, index), matrix)


def save_embeddings(emb: EmbeddingMatrix, path: str) -> None:
    """Write word2vec text format with full float precision (repr round-trips)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{emb.n} {emb.d}\n")
        for word, row in zip(emb.vocab.words, emb.matrix):
            fh.write(word + " " + " ".join(repr(v) for v in row.tolist()) + "\n")


def unit_normalize(emb: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit Euclidean length. Zero rows are an error."""
    norms = np.linalg.norm(emb.matrix, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ClweError(f"zero-norm vector for word {emb.vocab.words[zero[0]]!r}")
    return emb.with_matrix(emb.matrix / norms[:, None])


def iterative_normalize(emb: EmbeddingMatrix, rounds: int = 5) -> EmbeddingMatrix:
    """Alternate unit-length scaling and mean-centering for ``rounds`` rounds.

    Each round scales every row to unit length, then subtracts the mean row.
    The iteration drives the rows toward being simultaneously unit-length
    and zero-mean, which makes the two spaces more isometric before fitting
    a projection. Returns a new matrix; the input is unchanged.
    """
    if rounds < 1:
        raise ClweError("rounds must be >= 1")
    out = emb.matrix.copy()
    for _ in range(rounds):
        norms = np.linalg.norm(out, axis=1)
        zero = np.nonzero(norms == 0.0)[0]
        if zero.size:
            raise ClweError(f"zero-norm vector for word {emb.vocab.words[zero[0]]!r}")
        out /= norms[:, None]
        out -= out.mean(axis=0)
    return emb.with_matrix(out)
