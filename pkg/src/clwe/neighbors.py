"""Cosine retrieval, CSLS scoring, synthetic dictionary induction, BLI evaluation.

CSLS scores a candidate pair as 2*cos(x, z) - r_src - r_tgt, where the r
terms are each word's mean cosine to its k nearest cross-space neighbors.
Subtracting them demotes hubs: a target that is near everything earns a
large r_tgt and stops winning every query.

All similarities are computed on unit-normalized copies, so positive
rescaling of any input row never changes a decision. Search is exact
(blocked dense products, no approximation); ties break toward the lower
index everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import IndexedDictionary
from .embeddings import EmbeddingMatrix, Vocabulary
from .errors import ClweError

_BLOCK = 1024  # query rows per similarity block


def _unit_rows(matrix: np.ndarray, side: str) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ClweError(f"zero-norm {side} row at index {zero[0]}")
    return matrix / norms[:, None]


def topk_indices(sims: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact top-k per row of a similarity block, ties to the lower index.

    Returns (indices, values), each of shape (rows, k), sorted descending.
    """
    m = sims.shape[1]
    idx = np.empty((sims.shape[0], k), dtype=np.int64)
    vals = np.empty((sims.shape[0], k), dtype=sims.dtype)
    for r, row in enumerate(sims):
        if k < m:
            kth = np.partition(row, m - k)[m - k]
            cand = np.flatnonzero(row >= kth)
        else:
            cand = np.arange(m)
        order = cand[np.lexsort((cand, -row[cand]))][:k]
        idx[r] = order
        vals[r] = row[order]
    return idx, vals


def topk_cosine(
    queries: EmbeddingMatrix, keys: EmbeddingMatrix, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Top-k keys by cosine for every query row.

    Returns (indices, cosines) of shape (n_queries, k), each row sorted by
    descending cosine with ties broken toward the lower key index.
    """
    if k < 1 or k > keys.n:
        raise ClweError(f"k={k} out of range for {keys.n} keys")
    qn = _unit_rows(queries.matrix, "query")
    kn = _unit_rows(keys.matrix, "key")
    idx = np.empty((queries.n, k), dtype=np.int64)
    vals = np.empty((queries.n, k), dtype=np.float64)
    for start in range(0, queries.n, _BLOCK):
        stop = min(start + _BLOCK, queries.n)
        sims = qn[start:stop] @ kn.T
        idx[start:stop], vals[start:stop] = topk_indices(sims, k)
    return idx, vals


@dataclass(frozen=True)
class CslsIndex:
    """Per-word local scaling penalties for CSLS over one embedding pair.

    r_src[i] is the mean cosine of source word i to its k nearest targets;
    r_tgt[j] the mean cosine of target word j to its k nearest sources.
    """

    k: int
    r_src: np.ndarray
    r_tgt: np.ndarray


def build_csls_index(src: EmbeddingMatrix, tgt: EmbeddingMatrix, k: int = 10) -> CslsIndex:
    """Compute both r vectors with exact top-k search (default k = 10)."""
    if src.n == 0 or tgt.n == 0:
        raise ClweError("both sides must be non-empty")
    if k >= min(src.n, tgt.n):
        raise ClweError(f"k={k} must be smaller than both vocabularies ({src.n}, {tgt.n})")
    _, src_vals = topk_cosine(src, tgt, k)
    _, tgt_vals = topk_cosine(tgt, src, k)
    return CslsIndex(k=k, r_src=src_vals.sum(axis=1) / k, r_tgt=tgt_vals.sum(axis=1) / k)


def csls_translate(
    index: CslsIndex,
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    queries: np.ndarray | list[int],
) -> np.ndarray:
    """CSLS argmax translation for the given source indices.

    For query i the score of target j is 2*cos(x_i, z_j) - r_src[i] - r_tgt[j];
    r_src[i] is constant per query, so the argmax drops it.
    """
    queries = np.asarray(queries, dtype=np.int64)
    if queries.size and (queries.min() < 0 or queries.max() >= src.n):
        raise ClweError("query index out of bounds")
    qn = _unit_rows(src.matrix[queries], "query")
    kn = _unit_rows(tgt.matrix, "target")
    out = np.empty(len(queries), dtype=np.int64)
    for start in range(0, len(queries), _BLOCK):
        stop = min(start + _BLOCK, len(queries))
        scores = 2.0 * (qn[start:stop] @ kn.T) - index.r_tgt[None, :]
        out[start:stop] = np.argmax(scores, axis=1)  # first max = lowest j
    return out


def _truncate(emb: EmbeddingMatrix, n: int) -> EmbeddingMatrix:
    if n >= emb.n:
        return emb
    return EmbeddingMatrix(Vocabulary.from_words(emb.vocab.words[:n]), emb.matrix[:n])


def induce_synthetic_dictionary(
    index: CslsIndex,
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    exclude: IndexedDictionary | None = None,
    max_rank: int | None = None,
) -> IndexedDictionary:
    """Pairs that are mutual CSLS nearest neighbors, sorted by source index.

    (i, j) is kept when j is i's CSLS argmax over targets and i is j's CSLS
    argmax over sources (the reverse direction scores 2*cos(z_j, x_i) -
    r_tgt[j] - r_src[i]). ``max_rank`` caps both candidate sets to the most
    frequent rows; ``exclude`` removes pairs already in a dictionary.
    """
    n = src.n if max_rank is None else min(src.n, max_rank)
    m = tgt.n if max_rank is None else min(tgt.n, max_rank)
    src_cap = _truncate(src, n)
    tgt_cap = _truncate(tgt, m)
    # Penalties keep their full-vocabulary values; the cap only restricts
    # which rows may participate as candidates.
    cap_index = CslsIndex(k=index.k, r_src=index.r_src[:n], r_tgt=index.r_tgt[:m])

    forward = csls_translate(cap_index, src_cap, tgt_cap, np.arange(n))
    backward_index = CslsIndex(k=index.k, r_src=cap_index.r_tgt, r_tgt=cap_index.r_src)
    backward = csls_translate(backward_index, tgt_cap, src_cap, np.arange(m))

    excluded = (
        {(i, j) for i, j in exclude.pairs.tolist()} if exclude is not None else set()
    )
    pairs = [
        (i, int(forward[i]))
        for i in range(n)
        if int(backward[forward[i]]) == i and (i, int(forward[i])) not in excluded
    ]
    return IndexedDictionary(
        np.array(pairs, dtype=np.int64).reshape(-1, 2), src.n, tgt.n
    )


@dataclass(frozen=True)
class WordResult:
    source: str
    prediction: str
    gold: list[str]
    correct: bool
    rank: int  # source frequency rank = row index in the source vocabulary


@dataclass(frozen=True)
class BliReport:
    """P@1 over distinct source words plus the per-word decisions."""

    p_at_1: float
    evaluated_words: int
    oov_words: int
    per_word: list[WordResult]


def evaluate_bli(
    index: CslsIndex,
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    gold: IndexedDictionary,
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    oov_words: int = 0,
) -> BliReport:
    """Translate every distinct gold source word and score precision@1.

    A prediction is correct when it lands anywhere in that word's gold
    target set (multimap semantics). ``oov_words`` is the count of raw
    dictionary source words that never made it into ``gold``; it is data
    carried through for reporting.
    """
    by_source = gold.targets_by_source()
    sources = sorted(by_source)  # row index = frequency rank, most frequent first
    predictions = csls_translate(index, src, tgt, np.array(sources, dtype=np.int64))
    per_word: list[WordResult] = []
    correct_count = 0
    for i, pred in zip(sources, predictions.tolist()):
        gold_set = by_source[i]
        correct = pred in gold_set
        correct_count += correct
        per_word.append(
            WordResult(
                source=src_vocab.words[i],
                prediction=tgt_vocab.words[pred],
                gold=[tgt_vocab.words[j] for j in gold_set],
                correct=correct,
                rank=i,
            )
        )
    evaluated = len(sources)
    p_at_1 = correct_count / evaluated if evaluated else 0.0
    return BliReport(p_at_1=p_at_1, evaluated_words=evaluated, oov_words=oov_words, per_word=per_word)


def write_bli_report(report: BliReport, path: str) -> None:
    """TSV: header, one row per evaluated word, then a '#' summary line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("source\tprediction\tgold\tcorrect\trank\n")
        for row in report.per_word:
            fh.write(
                f"{row.source}\t{row.prediction}\t{','.join(row.gold)}\t"
                f"{int(row.correct)}\t{row.rank}\n"
            )
        fh.write(
            f"#p_at_1={report.p_at_1:.6f}\tevaluated={report.evaluated_words}\t"
            f"oov={report.oov_words}\n"
        )
