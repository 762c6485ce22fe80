"""Monolingual word-embedding store.

Reads fastText-style ``.vec`` text files, caps the vocabulary in file order,
unit-normalizes every row once, and provides exact similarity search.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "EmbeddingFormatError",
    "EmbeddingMatrix",
    "load_embeddings",
    "save_embeddings",
    "normalize_rows",
    "cosine",
    "top_k_neighbors",
    "topk_indices",
    "mean_topk_similarity",
]

logger = logging.getLogger(__name__)

# rows whose norm is already this close to 1 are left untouched, which
# makes normalization bitwise idempotent
_UNIT_TOL = 1e-12
_BLOCK = 1024


class EmbeddingFormatError(ValueError):
    """Raised when an embedding file header is missing or unreadable."""


def normalize_rows(vectors):
    """Return a copy of ``vectors`` with unit-norm rows.

    Zero rows raise ``ValueError``.  Rows already at unit norm (to within
    ``1e-12``) are copied unchanged.
    """
    vectors = np.array(vectors, dtype=np.float64, copy=True)
    squeeze = vectors.ndim == 1
    if squeeze:
        vectors = vectors[None, :]
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero vector")
    norms = np.where(np.abs(norms - 1.0) <= _UNIT_TOL, 1.0, norms)
    vectors /= norms[:, None]
    return vectors[0] if squeeze else vectors


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Vocabulary plus one unit-norm row per token.

    Instances are treated as immutable; ``vectors`` is flagged read-only.
    """

    tokens: tuple[str, ...]
    vectors: np.ndarray
    index: dict[str, int] = field(init=False, repr=False, compare=False)
    skipped: int = field(default=0, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D array")
        if len(tokens) != vectors.shape[0]:
            raise ValueError(
                f"{len(tokens)} tokens but {vectors.shape[0]} vector rows")
        index = {tok: i for i, tok in enumerate(tokens)}
        if len(index) != len(tokens):
            raise ValueError("tokens must be distinct")
        vectors = vectors.copy()
        vectors.flags.writeable = False
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "index", index)

    @classmethod
    def from_vectors(cls, tokens, vectors, skipped=0):
        """Build a matrix from raw (unnormalized) vectors."""
        return cls(tuple(tokens), normalize_rows(vectors), skipped=skipped)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def __getitem__(self, token) -> np.ndarray:
        return self.vectors[self.index[token]]

    def head(self, n: int) -> "EmbeddingMatrix":
        """The first ``n`` rows (the ``n`` most frequent words)."""
        return EmbeddingMatrix(self.tokens[:n], self.vectors[:n])


def load_embeddings(path, vocab_limit: int = 100_000) -> EmbeddingMatrix:
    """Load a text embedding file.

    Parameters
    ----------
    path : str or Path
        File whose first line is ``"<count> <dim>"`` followed by lines of
        ``"<token> <c1> ... <c_dim>"``.
    vocab_limit : int
        Keep at most this many rows, in file order.  fastText files are
        sorted by descending frequency, so this keeps the most frequent
        words.

    Returns
    -------
    EmbeddingMatrix
        Unit-normalized rows.  ``skipped`` counts malformed lines, zero
        vectors and duplicate tokens that were dropped.

    Raises
    ------
    EmbeddingFormatError
        If the header is missing or garbled.
    """
    if vocab_limit < 1:
        raise ValueError("vocab_limit must be positive")
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    skipped = 0
    with open(path, encoding="utf-8", errors="replace") as f:
        header = f.readline().split()
        try:
            if len(header) != 2:
                raise ValueError
            _, dim = int(header[0]), int(header[1])
            if dim < 1:
                raise ValueError
        except ValueError:
            raise EmbeddingFormatError(
                f"{path}: expected header '<count> <dim>', got {header!r}"
            ) from None
        for lineno, line in enumerate(f, start=2):
            if len(tokens) >= vocab_limit:
                break
            fields = line.rstrip("\r\n").rstrip(" ").split(" ")
            if len(fields) != dim + 1:
                skipped += 1
                logger.debug("%s:%d: %d fields, expected %d",
                             path, lineno, len(fields), dim + 1)
                continue
            token = fields[0]
            try:
                vec = np.array(fields[1:], dtype=np.float64)
            except ValueError:
                skipped += 1
                continue
            if token in seen or not np.all(np.isfinite(vec)) or not vec.any():
                skipped += 1
                continue
            seen.add(token)
            tokens.append(token)
            rows.append(vec)
    if skipped:
        logger.warning("%s: skipped %d malformed, zero or duplicate lines",
                       path, skipped)
    vectors = np.vstack(rows) if rows else np.zeros((0, dim))
    if not rows:
        return EmbeddingMatrix((), vectors, skipped=skipped)
    return EmbeddingMatrix.from_vectors(tokens, vectors, skipped=skipped)


def save_embeddings(emb: EmbeddingMatrix, path) -> None:
    """Write ``emb`` in the text format read by :func:`load_embeddings`."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(emb)} {emb.dim}\n")
        for tok, vec in zip(emb.tokens, emb.vectors):
            f.write(tok + " " + " ".join(f"{x:.9g}" for x in vec) + "\n")


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def topk_indices(scores: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` largest entries of each row.

    Rows are ordered by score descending, ties broken by lower column
    index, so the result is fully deterministic.
    """
    scores = np.atleast_2d(scores)
    n_rows, n_cols = scores.shape
    if k > n_cols:
        raise ValueError(f"k={k} exceeds the {n_cols} available candidates")
    if k == n_cols:
        return np.lexsort((np.broadcast_to(np.arange(n_cols), scores.shape),
                           -scores), axis=1)
    kth = -np.partition(-scores, k - 1, axis=1)[:, k - 1]
    out = np.empty((n_rows, k), dtype=np.int64)
    for r in range(n_rows):
        cand = np.flatnonzero(scores[r] >= kth[r])
        order = np.lexsort((cand, -scores[r, cand]))
        out[r] = cand[order[:k]]
    return out


def mean_topk_similarity(queries: np.ndarray, pool: np.ndarray, k: int,
                         block: int = _BLOCK) -> np.ndarray:
    """Mean cosine of each query row to its ``k`` nearest rows of ``pool``.

    Both inputs must already be unit-normalized.  This is the hubness
    penalty used by cross-domain similarity local scaling.
    """
    if k > pool.shape[0]:
        raise ValueError(f"k={k} exceeds the {pool.shape[0]} pool rows")
    out = np.empty(queries.shape[0])
    for start in range(0, queries.shape[0], block):
        sims = queries[start:start + block] @ pool.T
        top = -np.partition(-sims, k - 1, axis=1)[:, :k]
        out[start:start + block] = np.sort(top, axis=1).mean(axis=1)
    return out


def top_k_neighbors(query, matrix: EmbeddingMatrix, k: int,
                    metric: str = "cosine", *, csls_k: int = 10,
                    reference=None) -> list[tuple[str, float]]:
    """Exact k-nearest-neighbor search over ``matrix``.

    With ``metric="csls"`` the score is
    ``2*cos(q, y) - r_query - r_y`` where ``r_query`` is the mean cosine of
    the query to its ``csls_k`` nearest rows of ``matrix`` and ``r_y`` the
    mean cosine of row ``y`` to its ``csls_k`` nearest rows of
    ``reference`` (the query-side vocabulary, already mapped).
    """
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (matrix.dim,):
        raise ValueError(f"query has shape {q.shape}, expected ({matrix.dim},)")
    if k > len(matrix):
        raise ValueError(f"k={k} exceeds vocabulary size {len(matrix)}")
    q = normalize_rows(q)
    sims = matrix.vectors @ q
    if metric == "cosine":
        scores = sims
    elif metric == "csls":
        if reference is None:
            raise ValueError("csls needs the query-side reference vectors")
        ref = reference.vectors if isinstance(reference, EmbeddingMatrix) \
            else normalize_rows(reference)
        r_q = mean_topk_similarity(q[None, :], matrix.vectors, csls_k)[0]
        r_y = mean_topk_similarity(matrix.vectors, ref, csls_k)
        scores = 2 * sims - r_q - r_y
    else:
        raise ValueError(f"unknown metric {metric!r}")
    idx = topk_indices(scores[None, :], k)[0]
    return [(matrix.tokens[i], float(scores[i])) for i in idx]
