"""Shared builders and independent oracles for the test suite.

The oracles deliberately take the dumb route (full similarity matrices,
per-row sorts, per-pair loops) so they share no code path with the
library's blocked/partitioned implementations.
"""

from __future__ import annotations

import numpy as np

from clwe import EmbeddingMatrix, IndexedDictionary, Vocabulary


def make_emb(matrix: np.ndarray, prefix: str = "w") -> EmbeddingMatrix:
    matrix = np.asarray(matrix, dtype=np.float64)
    words = [f"{prefix}{i}" for i in range(matrix.shape[0])]
    return EmbeddingMatrix(Vocabulary.from_words(words), matrix)


def make_dict(pairs, n: int, m: int) -> IndexedDictionary:
    return IndexedDictionary(np.array(pairs, dtype=np.int64).reshape(-1, 2), n, m)


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))  # det-free sign fix keeps Q well spread


def make_bilingual(
    n: int, d: int, noise: float, seed: int
) -> tuple[EmbeddingMatrix, EmbeddingMatrix, np.ndarray]:
    """Source space, rotated+noised target space (row i translates row i)."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    rot = random_rotation(d, rng)
    z = x @ rot.T + noise * rng.normal(size=(n, d))
    return make_emb(x, "s"), make_emb(z, "t"), rot


def make_clustered_bilingual(
    n: int, d: int, n_clusters: int, spread: float, noise: float, seed: int
) -> tuple[EmbeddingMatrix, EmbeddingMatrix]:
    """Cluster-structured bilingual space (row i translates row i).

    Words crowd around shared cluster centers, so retrofitting dictionary
    words drags them through other words' neighborhoods; this reproduces
    the test-accuracy cost of overfitting, which isotropic Gaussian data
    does not show at desk scale.
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(n_clusters, d))
    assign = rng.integers(0, n_clusters, size=n)
    x = centers[assign] + spread * rng.normal(size=(n, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    rot = random_rotation(d, rng)
    z = x @ rot.T + noise * rng.normal(size=(n, d))
    return make_emb(x, "s"), make_emb(z, "t")


# --- brute-force retrieval oracles -----------------------------------------


def unit(matrix: np.ndarray) -> np.ndarray:
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


def oracle_topk(queries: np.ndarray, keys: np.ndarray, k: int):
    """Full similarity matrix, whole-row sort, ties to the lower index."""
    sims = unit(queries) @ unit(keys).T
    m = keys.shape[0]
    idx = np.empty((len(queries), k), dtype=np.int64)
    vals = np.empty((len(queries), k), dtype=np.float64)
    for r, row in enumerate(sims):
        order = np.lexsort((np.arange(m), -row))[:k]
        idx[r] = order
        vals[r] = row[order]
    return idx, vals


def oracle_csls_scores(src: np.ndarray, tgt: np.ndarray, k: int):
    """(scores, r_src, r_tgt) for all source-target pairs, from scratch."""
    sims = unit(src) @ unit(tgt).T
    _, src_vals = oracle_topk(src, tgt, k)
    _, tgt_vals = oracle_topk(tgt, src, k)
    r_src = src_vals.sum(axis=1) / k
    r_tgt = tgt_vals.sum(axis=1) / k
    scores = 2.0 * sims - r_src[:, None] - r_tgt[None, :]
    return scores, r_src, r_tgt


def oracle_csls_translate(src: np.ndarray, tgt: np.ndarray, k: int) -> np.ndarray:
    scores, _, _ = oracle_csls_scores(src, tgt, k)
    return np.argmax(scores, axis=1)


def oracle_mutual_pairs(src: np.ndarray, tgt: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Mutual CSLS nearest neighbors by enumerating both directions."""
    scores, _, _ = oracle_csls_scores(src, tgt, k)
    forward = np.argmax(scores, axis=1)
    backward = np.argmax(scores, axis=0)  # same symmetric score matrix
    return [(i, int(forward[i])) for i in range(len(src)) if backward[forward[i]] == i]
