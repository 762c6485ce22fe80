"""Orthogonal source-to-target embedding maps.

A map ``W`` is applied to row vectors (``x @ W``).  It is initialised by
solving orthogonal Procrustes on a seed lexicon and improved by iterative
refinement over mutual nearest neighbors under the CSLS similarity.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix, mean_topk_similarity, normalize_rows

__all__ = [
    "AlignmentError",
    "DegenerateSeedWarning",
    "LinearMap",
    "SeedLexicon",
    "RefineConfig",
    "RefineReport",
    "seed_identical_strings",
    "load_seed_lexicon",
    "procrustes",
    "csls_score",
    "mutual_csls_pairs",
    "refine",
    "save_map",
    "load_map",
]

logger = logging.getLogger(__name__)

_BLOCK = 1024


class AlignmentError(ValueError):
    pass


class DegenerateSeedWarning(UserWarning):
    """The seed cross-covariance is rank deficient; W is not unique."""


@dataclass(frozen=True)
class LinearMap:
    matrix: np.ndarray
    orthogonal: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"map must be square, got shape {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls(np.eye(dim))

    @property
    def source_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[1]

    def orthogonality_error(self) -> float:
        m = self.matrix
        return float(np.linalg.norm(m.T @ m - np.eye(m.shape[1])))

    def apply(self, vectors, renormalize: bool = True) -> np.ndarray:
        out = np.asarray(vectors, dtype=np.float64) @ self.matrix
        return normalize_rows(out) if renormalize else out

    def transform(self, emb: EmbeddingMatrix) -> EmbeddingMatrix:
        """Map every row of ``emb`` into the target space."""
        return EmbeddingMatrix(emb.tokens, self.apply(emb.vectors))


@dataclass(frozen=True)
class SeedLexicon:
    pairs: tuple[tuple[str, str], ...]
    provenance: str = "file"

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(map(tuple, self.pairs)))
        if not self.pairs:
            raise AlignmentError("seed lexicon is empty")

    def __len__(self):
        return len(self.pairs)

    def check(self, src: EmbeddingMatrix, tgt: EmbeddingMatrix) -> None:
        for s, t in self.pairs:
            if s not in src or t not in tgt:
                raise AlignmentError(
                    f"seed pair ({s!r}, {t!r}) is missing from the embeddings")


@dataclass(frozen=True)
class RefineConfig:
    iterations: int = 5
    csls_k: int = 10
    dict_pool: int = 10_000
    mutual_only: bool = True

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.csls_k < 1:
            raise ValueError("csls_k must be at least 1")
        if self.dict_pool < 1:
            raise ValueError("dict_pool must be positive")


@dataclass
class RefineReport:
    lexicon_sizes: list[int] = field(default_factory=list)
    stopped_early: bool = False


def seed_identical_strings(src: EmbeddingMatrix,
                           tgt: EmbeddingMatrix) -> SeedLexicon:
    """Pair every token spelled identically in both vocabularies."""
    pairs = [(tok, tok) for tok in src.tokens if tok in tgt.index]
    if not pairs:
        raise AlignmentError(
            "source and target vocabularies share no identical strings; "
            "supply a seed lexicon file")
    return SeedLexicon(tuple(pairs), "identical-strings")


def load_seed_lexicon(path, src: EmbeddingMatrix | None = None,
                      tgt: EmbeddingMatrix | None = None) -> SeedLexicon:
    """Read ``source<TAB>target`` lines.

    When embeddings are given, pairs with a side missing from them are
    dropped (common for gold dictionaries against a capped vocabulary).
    """
    pairs = []
    dropped = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise AlignmentError(
                    f"{path}:{lineno}: expected 'source<TAB>target'")
            if (src is not None and parts[0] not in src) or \
                    (tgt is not None and parts[1] not in tgt):
                dropped += 1
                continue
            pairs.append((parts[0], parts[1]))
    if dropped:
        logger.info("%s: dropped %d pairs outside the vocabularies",
                    path, dropped)
    return SeedLexicon(tuple(pairs), "file")


def _solve_procrustes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    m = x.T @ y
    u, s, vt = np.linalg.svd(m)
    if s.size and s[-1] <= s[0] * m.shape[0] * np.finfo(float).eps:
        warnings.warn(
            "seed cross-covariance is rank deficient; the orthogonal map "
            "is not unique", DegenerateSeedWarning, stacklevel=3)
    return u @ vt


def procrustes(src: EmbeddingMatrix, tgt: EmbeddingMatrix,
               seed: SeedLexicon) -> LinearMap:
    """Orthogonal W minimizing ``||XW - Y||_F`` over the seed pairs.

    ``X`` and ``Y`` stack the source and target vectors of the seed pairs.
    With ``X^T Y = U S V^T``, the minimizer is ``W = U V^T``.
    """
    if src.dim != tgt.dim:
        raise AlignmentError(
            f"source dim {src.dim} differs from target dim {tgt.dim}")
    if len(seed) < 2:
        raise AlignmentError("procrustes needs at least 2 seed pairs")
    seed.check(src, tgt)
    if len(seed) < src.dim:
        logger.warning("only %d seed pairs for %d dimensions",
                       len(seed), src.dim)
    x = src.vectors[[src.index[s] for s, _ in seed.pairs]]
    y = tgt.vectors[[tgt.index[t] for _, t in seed.pairs]]
    return LinearMap(_solve_procrustes(x, y))


def csls_score(mapped_query, tgt: EmbeddingMatrix, src_mapped, candidate: str,
               csls_k: int = 10) -> float:
    """CSLS between one mapped source vector and one target word.

    ``2*cos(q, y) - r_T(q) - r_S(y)``: ``r_T(q)`` averages the cosines of
    ``q`` to its ``csls_k`` nearest target words, ``r_S(y)`` those of ``y``
    to its ``csls_k`` nearest mapped source words.
    """
    ref = src_mapped.vectors if isinstance(src_mapped, EmbeddingMatrix) \
        else normalize_rows(src_mapped)
    if csls_k > len(tgt) or csls_k > ref.shape[0]:
        raise ValueError(f"csls_k={csls_k} exceeds a vocabulary size")
    if csls_k < 1:
        raise ValueError("csls_k must be at least 1")
    q = normalize_rows(mapped_query)
    y = tgt[candidate]
    r_t = mean_topk_similarity(q[None, :], tgt.vectors, csls_k)[0]
    r_s = mean_topk_similarity(y[None, :], ref, csls_k)[0]
    return float(2 * np.dot(q, y) - r_t - r_s)


def _rowwise_best(scores: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the lower index on ties
    return np.argmax(scores, axis=1)


def mutual_csls_pairs(xs: np.ndarray, ys: np.ndarray, csls_k: int,
                      mutual_only: bool = True) -> list[tuple[int, int]]:
    """CSLS nearest-neighbor pairs between two unit-normalized row sets.

    Returns ``(i, j)`` index pairs.  With ``mutual_only`` a pair is kept
    only when ``j`` is the best target for ``i`` and ``i`` the best source
    for ``j``; otherwise the union of both directions is returned.
    """
    k_t = min(csls_k, ys.shape[0])
    k_s = min(csls_k, xs.shape[0])
    r_t = mean_topk_similarity(xs, ys, k_t)   # per source row
    r_s = mean_topk_similarity(ys, xs, k_s)   # per target row
    s2t = np.empty(xs.shape[0], dtype=np.int64)
    t2s = np.zeros(ys.shape[0], dtype=np.int64)
    t2s_best = np.full(ys.shape[0], -np.inf)
    for start in range(0, xs.shape[0], _BLOCK):
        sims = xs[start:start + _BLOCK] @ ys.T
        s2t[start:start + _BLOCK] = _rowwise_best(2 * sims - r_s[None, :])
        col = 2 * sims - r_t[start:start + _BLOCK, None]
        best_rows = np.argmax(col, axis=0)
        best_vals = col[best_rows, np.arange(col.shape[1])]
        better = best_vals > t2s_best
        t2s_best[better] = best_vals[better]
        t2s[better] = best_rows[better] + start
    forward = {(i, int(j)) for i, j in enumerate(s2t)}
    backward = {(int(i), j) for j, i in enumerate(t2s)}
    pairs = forward & backward if mutual_only else forward | backward
    return sorted(pairs)


def refine(linear_map: LinearMap, src: EmbeddingMatrix, tgt: EmbeddingMatrix,
           cfg: RefineConfig = RefineConfig(),
           report: RefineReport | None = None) -> LinearMap:
    """Iteratively re-fit the map on its own CSLS mutual nearest neighbors.

    Each iteration maps the ``cfg.dict_pool`` most frequent source words,
    pairs them with the most frequent target words that are mutual CSLS
    nearest neighbors, and re-solves Procrustes on those pairs.  Iteration
    stops early, keeping the previous map, if fewer than two pairs survive.
    """
    if linear_map.source_dim != src.dim or linear_map.target_dim != tgt.dim:
        raise AlignmentError("map dimensions do not match the embeddings")
    report = report if report is not None else RefineReport()
    current = linear_map
    ys = tgt.vectors[:cfg.dict_pool]
    src_pool = src.vectors[:cfg.dict_pool]
    for it in range(cfg.iterations):
        xs = current.apply(src_pool)
        pairs = mutual_csls_pairs(xs, ys, cfg.csls_k, cfg.mutual_only)
        report.lexicon_sizes.append(len(pairs))
        logger.info("refine iteration %d: %d synthetic pairs", it + 1,
                    len(pairs))
        if len(pairs) < 2:
            logger.warning("refinement stopped at iteration %d: only %d "
                           "pairs", it + 1, len(pairs))
            report.stopped_early = True
            break
        i_idx = np.fromiter((i for i, _ in pairs), dtype=np.int64)
        j_idx = np.fromiter((j for _, j in pairs), dtype=np.int64)
        current = LinearMap(_solve_procrustes(src_pool[i_idx], ys[j_idx]))
    return current


def save_map(linear_map: LinearMap, path) -> None:
    m = linear_map.matrix
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            f.write(" ".join(f"{x:.9g}" for x in row) + "\n")


def load_map(path) -> LinearMap:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise AlignmentError(f"{path}: expected header '<d> <d>'")
        rows, cols = int(header[0]), int(header[1])
        data = np.loadtxt(f, dtype=np.float64, ndmin=2)
    if data.shape != (rows, cols):
        raise AlignmentError(
            f"{path}: header says {rows}x{cols}, found {data.shape}")
    m = LinearMap(data, orthogonal=False)
    return LinearMap(data, orthogonal=m.orthogonality_error() < 1e-4)
