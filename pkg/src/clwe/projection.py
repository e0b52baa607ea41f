"""Supervised linear maps between embedding spaces.

Four fitting routes over a training dictionary:

* ``fit_procrustes`` -- the orthogonal least-squares rotation, closed form
  via SVD of the cross-covariance of the paired rows.
* ``fit_least_squares`` -- the unconstrained minimizer of the same residual
  (minimum-norm solution when the system is rank-deficient).
* ``fit_cca`` -- per-language projections onto canonical correlation
  directions fit on the dictionary rows.
* ``fit_rcsls`` -- gradient refinement of a relaxed CSLS retrieval loss,
  normally started from the Procrustes solution.

Maps act on row vectors as x -> W x, i.e. ``matrix @ W.T`` for a stacked
embedding matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dictionary import IndexedDictionary
from .embeddings import EmbeddingMatrix
from .errors import ClweError
from .neighbors import topk_indices

_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class LinearMap:
    """A projection x -> matrix @ (x - offset); offset is None for pure maps.

    ``matrix`` has shape (out_dim, in_dim). When ``orthogonal`` is set the
    matrix must satisfy ||W^T W - I||_max <= 1e-8.
    """

    matrix: np.ndarray
    orthogonal: bool = False
    offset: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise ClweError("linear map matrix must be 2-D")
        if self.orthogonal:
            gram = self.matrix.T @ self.matrix
            err = np.abs(gram - np.eye(self.matrix.shape[1])).max()
            if err > _ORTHO_TOL:
                raise ClweError(f"orthogonal flag set but ||W^T W - I||_max = {err:.3e}")

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class AlignedEmbeddings:
    """A projected source space and its target counterpart (same dimension)."""

    src: EmbeddingMatrix
    tgt: EmbeddingMatrix

    def __post_init__(self) -> None:
        if self.src.d != self.tgt.d:
            raise ClweError(f"dimension mismatch: {self.src.d} vs {self.tgt.d}")


@dataclass(frozen=True)
class RcslsConfig:
    """Hyperparameters for the relaxed CSLS refinement.

    ``batch_size=None`` means full-batch. ``vocab_cap`` limits the rows
    considered when recomputing neighborhoods (speed knob; None = all).
    """

    k_neighbors: int = 10
    epochs: int = 10
    learning_rate: float = 1.0
    batch_size: int | None = None
    seed: int = 0
    vocab_cap: int | None = None


def _dict_rows(
    src: EmbeddingMatrix, tgt: EmbeddingMatrix, dictionary: IndexedDictionary
) -> tuple[np.ndarray, np.ndarray]:
    if len(dictionary) == 0:
        raise ClweError("dictionary is empty")
    if src.d != tgt.d:
        raise ClweError(f"dimension mismatch: {src.d} vs {tgt.d}")
    return src.matrix[dictionary.source_indices], tgt.matrix[dictionary.target_indices]


def fit_procrustes(
    src: EmbeddingMatrix, tgt: EmbeddingMatrix, dictionary: IndexedDictionary
) -> LinearMap:
    """Best orthogonal map of dictionary sources onto their targets.

    Minimizes the summed squared distance over pairs subject to W^T W = I:
    with M the (d, d) cross-covariance of target rows against source rows
    and M = U S V^T its SVD, the minimizer is W = U V^T.
    """
    x_rows, z_rows = _dict_rows(src, tgt, dictionary)
    u, _, vt = np.linalg.svd(z_rows.T @ x_rows)
    return LinearMap(matrix=u @ vt, orthogonal=True)


def fit_least_squares(
    src: EmbeddingMatrix, tgt: EmbeddingMatrix, dictionary: IndexedDictionary
) -> LinearMap:
    """Unconstrained minimizer of the pairwise squared distances.

    Solves min_W sum ||W x_i - z_j||^2 by least squares on the stacked
    rows; rank-deficient systems get the minimum-norm solution.
    """
    x_rows, z_rows = _dict_rows(src, tgt, dictionary)
    solution, *_ = np.linalg.lstsq(x_rows, z_rows, rcond=None)
    return LinearMap(matrix=solution.T, orthogonal=False)


def _whitener(cov: np.ndarray, side: str) -> np.ndarray:
    """Inverse square root of a covariance, ridging it if singular."""
    evals, evecs = np.linalg.eigh(cov)
    if evals.min() <= 1e-12 * max(evals.max(), 1.0):
        warnings.warn(
            f"singular {side} covariance in CCA; adding ridge 1e-8", stacklevel=3
        )
        evals, evecs = np.linalg.eigh(cov + 1e-8 * np.eye(cov.shape[0]))
    return evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T


def fit_cca(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    dictionary: IndexedDictionary,
    dim_ratio: float = 1.0,
) -> tuple[LinearMap, LinearMap]:
    """Canonical correlation projections for both languages.

    Both sides are centered on their dictionary-row means (the returned
    maps carry those means as offsets, so projecting a full vocabulary
    reuses them). Directions maximize the correlation of paired variates,
    each successive pair uncorrelated with the previous ones; the top
    ceil(dim_ratio * d) directions are kept.
    """
    if not 0.0 < dim_ratio <= 1.0:
        raise ClweError(f"dim_ratio must be in (0, 1], got {dim_ratio}")
    x_rows, z_rows = _dict_rows(src, tgt, dictionary)
    p = len(x_rows)
    if p < 2:
        raise ClweError("CCA needs at least 2 dictionary pairs")
    x_mean = x_rows.mean(axis=0)
    z_mean = z_rows.mean(axis=0)
    xc = x_rows - x_mean
    zc = z_rows - z_mean

    cxx = xc.T @ xc / (p - 1)
    czz = zc.T @ zc / (p - 1)
    cxz = xc.T @ zc / (p - 1)

    wx = _whitener(cxx, "source")
    wz = _whitener(czz, "target")
    u, _, vt = np.linalg.svd(wx @ cxz @ wz)

    n_dims = int(np.ceil(dim_ratio * src.d))
    a = wx @ u[:, :n_dims]  # columns = source canonical directions
    b = wz @ vt.T[:, :n_dims]
    return (
        LinearMap(matrix=a.T, orthogonal=False, offset=x_mean),
        LinearMap(matrix=b.T, orthogonal=False, offset=z_mean),
    )


def _neighborhoods(
    proj_src: np.ndarray, tgt: np.ndarray, pair_x: np.ndarray, pair_z: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """k nearest rows by dot product: targets for each W x_i, projected sources
    for each z_j."""
    tgt_nn, _ = topk_indices(pair_x @ tgt.T, k)  # pair_x already projected
    src_nn, _ = topk_indices(pair_z @ proj_src.T, k)
    return tgt_nn, src_nn


def rcsls_loss_and_grad(
    linear_map: LinearMap,
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    dictionary: IndexedDictionary,
    cfg: RcslsConfig,
    neighborhoods: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[float, np.ndarray]:
    """Relaxed CSLS loss averaged over dictionary pairs, and its exact gradient.

    Per pair (i, j) the loss is -2 cos(W x_i, z_j) plus the mean cosine of
    W x_i to its k nearest targets plus the mean cosine of z_j to its k
    nearest projected sources. Rows are assumed unit-length so every cosine
    is a plain dot product (the relaxation), making the loss linear in W
    once neighborhoods are frozen. Neighborhoods are computed with the
    current map and held fixed within the evaluation (subgradient
    convention); pass ``neighborhoods`` to reuse a frozen set.
    """
    k = cfg.k_neighbors
    x_rows, z_rows = _dict_rows(src, tgt, dictionary)
    cap = cfg.vocab_cap
    src_pool = src.matrix if cap is None else src.matrix[: min(cap, src.n)]
    tgt_pool = tgt.matrix if cap is None else tgt.matrix[: min(cap, tgt.n)]
    if k >= len(src_pool) or k >= len(tgt_pool):
        raise ClweError(f"k_neighbors={k} must be smaller than both vocabularies")

    w = linear_map.matrix
    proj_pairs = x_rows @ w.T
    if neighborhoods is None:
        neighborhoods = _neighborhoods(src_pool @ w.T, tgt_pool, proj_pairs, z_rows, k)
    tgt_nn, src_nn = neighborhoods

    # Mean neighbor vectors per pair; the loss is then a sum of bilinear terms.
    mean_tgt_nb = tgt_pool[tgt_nn].sum(axis=1) / k  # (p, d)
    mean_src_nb = src_pool[src_nn].sum(axis=1) / k  # (p, d)

    p = len(x_rows)
    loss = (
        -2.0 * np.sum(proj_pairs * z_rows)
        + np.sum(proj_pairs * mean_tgt_nb)
        + np.sum((mean_src_nb @ w.T) * z_rows)
    ) / p
    grad = (-2.0 * z_rows.T @ x_rows + mean_tgt_nb.T @ x_rows + z_rows.T @ mean_src_nb) / p
    return float(loss), grad


def fit_rcsls(
    src: EmbeddingMatrix,
    tgt: EmbeddingMatrix,
    dictionary: IndexedDictionary,
    cfg: RcslsConfig,
    init: LinearMap,
) -> LinearMap:
    """Gradient descent on the relaxed CSLS loss from ``init``.

    One epoch = one gradient step with neighborhoods recomputed at the
    current best map. Steps are kept only when the full loss improves;
    otherwise the learning rate is halved and the step retried from the
    best map. Deterministic given ``cfg.seed`` (the seed only matters when
    ``batch_size`` subsamples pairs for the gradient).
    """
    rng = np.random.default_rng(cfg.seed)
    best = init.matrix.astype(np.float64, copy=True)
    best_loss, _ = rcsls_loss_and_grad(LinearMap(best), src, tgt, dictionary, cfg)
    lr = cfg.learning_rate

    for _ in range(cfg.epochs):
        if cfg.batch_size is not None and cfg.batch_size < len(dictionary):
            take = rng.choice(len(dictionary), size=cfg.batch_size, replace=False)
            batch = IndexedDictionary(
                dictionary.pairs[np.sort(take)],
                dictionary.src_vocab_size,
                dictionary.tgt_vocab_size,
            )
        else:
            batch = dictionary
        _, grad = rcsls_loss_and_grad(LinearMap(best), src, tgt, batch, cfg)
        candidate = best - lr * grad
        cand_loss, _ = rcsls_loss_and_grad(LinearMap(candidate), src, tgt, dictionary, cfg)
        if cand_loss < best_loss:
            best, best_loss = candidate, cand_loss
        else:
            lr /= 2.0
    return LinearMap(matrix=best, orthogonal=False)


def apply_projection(linear_map: LinearMap, emb: EmbeddingMatrix) -> EmbeddingMatrix:
    """Apply x -> W (x - offset) to every row; vocabulary is unchanged."""
    if emb.d != linear_map.in_dim:
        raise ClweError(
            f"dimension mismatch: map expects {linear_map.in_dim}, embeddings have {emb.d}"
        )
    matrix = emb.matrix if linear_map.offset is None else emb.matrix - linear_map.offset
    return EmbeddingMatrix(emb.vocab, matrix @ linear_map.matrix.T)


def save_linear_map(linear_map: LinearMap, path: str) -> None:
    """Text format: header "<rows> <cols>", then one line of floats per row.

    Maps with a centering offset append one "#center v1 .. vd" line; plain
    maps round-trip through the bare matrix grammar.
    """
    with open(path, "w", encoding="utf-8") as fh:
        rows, cols = linear_map.matrix.shape
        fh.write(f"{rows} {cols}\n")
        for row in linear_map.matrix:
            fh.write(" ".join(repr(v) for v in row.tolist()) + "\n")
        if linear_map.offset is not None:
            fh.write("#center " + " ".join(repr(v) for v in linear_map.offset.tolist()) + "\n")


def load_linear_map(path: str) -> LinearMap:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ClweError(f"{path}:1: malformed header")
        rows, cols = int(header[0]), int(header[1])
        matrix = np.empty((rows, cols), dtype=np.float64)
        for r in range(rows):
            fields = fh.readline().split()
            if len(fields) != cols:
                raise ClweError(f"{path}:{r + 2}: expected {cols} values")
            matrix[r] = np.array(fields, dtype=np.float64)
        offset = None
        trailer = fh.readline().split()
        if trailer and trailer[0] == "#center":
            offset = np.array(trailer[1:], dtype=np.float64)
            if len(offset) != cols:
                raise ClweError(f"{path}: center length {len(offset)} != {cols}")
    gram_err = (
        np.abs(matrix.T @ matrix - np.eye(cols)).max() if rows == cols else np.inf
    )
    return LinearMap(matrix=matrix, orthogonal=bool(gram_err <= _ORTHO_TOL), offset=offset)
