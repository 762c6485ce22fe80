"""Bilingual lexicon induction by nearest-neighbor retrieval."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .alignment import LinearMap
from .embeddings import EmbeddingMatrix, mean_topk_similarity, topk_indices

__all__ = [
    "LexiconFormatError",
    "TranslationOption",
    "BilingualLexicon",
    "build_lexicon",
    "export_lexicon",
    "import_lexicon",
    "evaluate_precision",
]

_BLOCK = 512
METRICS = ("cosine", "csls")


class LexiconFormatError(ValueError):
    pass


class TranslationOption(NamedTuple):
    target_token: str
    similarity: float   # cosine between mapped source and target


@dataclass
class BilingualLexicon:
    """Ranked translation options per source token."""

    entries: dict[str, list[TranslationOption]] = field(default_factory=dict)
    k: int = 20
    metric: str = "cosine"

    def __len__(self):
        return len(self.entries)

    def __contains__(self, token):
        return token in self.entries

    def __getitem__(self, token) -> list[TranslationOption]:
        return self.entries[token]

    def options(self, token) -> list[TranslationOption]:
        return self.entries.get(token, [])

    def top1(self) -> dict[str, str]:
        return {s: opts[0].target_token
                for s, opts in self.entries.items() if opts}


def build_lexicon(linear_map: LinearMap, src: EmbeddingMatrix,
                  tgt: EmbeddingMatrix, k: int = 20, metric: str = "cosine",
                  *, csls_k: int = 10, workers: int = 1) -> BilingualLexicon:
    """Retrieve the ``k`` nearest target words for every source word.

    Candidates are ranked by ``metric`` but the stored similarity is always
    the cosine between the mapped source vector and the target vector.
    Work is split into fixed-size row blocks, so results do not depend on
    ``workers``.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > len(tgt):
        raise ValueError(f"k={k} exceeds target vocabulary size {len(tgt)}")
    if linear_map.source_dim != src.dim or linear_map.target_dim != tgt.dim:
        raise ValueError("map dimensions do not match the embeddings")
    mapped = linear_map.apply(src.vectors)
    if metric == "csls":
        r_t = mean_topk_similarity(mapped, tgt.vectors, min(csls_k, len(tgt)))
        r_s = mean_topk_similarity(tgt.vectors, mapped,
                                   min(csls_k, len(src)))

    def block(start):
        sims = mapped[start:start + _BLOCK] @ tgt.vectors.T
        if metric == "csls":
            scores = 2 * sims - r_t[start:start + _BLOCK, None] - r_s[None, :]
        else:
            scores = sims
        idx = topk_indices(scores, k)
        return np.take_along_axis(sims, idx, axis=1), idx

    starts = range(0, len(src), _BLOCK)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(block, starts))
    else:
        results = [block(s) for s in starts]

    entries = {}
    for start, (sims, idx) in zip(starts, results):
        for r in range(idx.shape[0]):
            entries[src.tokens[start + r]] = [
                TranslationOption(tgt.tokens[j], float(np.clip(s, -1, 1)))
                for j, s in zip(idx[r], sims[r])]
    return BilingualLexicon(entries, k=k, metric=metric)


def export_lexicon(lex: BilingualLexicon, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# k={lex.k} metric={lex.metric}\n")
        for src, opts in lex.entries.items():
            for opt in opts:
                f.write(f"{src}\t{opt.target_token}\t{opt.similarity:.6f}\n")


def import_lexicon(path) -> BilingualLexicon:
    """Read a lexicon TSV written by :func:`export_lexicon`.

    Options keep file order.  ``k`` and ``metric`` come from the header
    comment when present.
    """
    entries: dict[str, list[TranslationOption]] = {}
    k, metric = None, "cosine"
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, value = item.partition("=")
                    if key == "k" and value.isdigit():
                        k = int(value)
                    elif key == "metric" and value in METRICS:
                        metric = value
                continue
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise LexiconFormatError(
                    f"{path}:{lineno}: expected 'source<TAB>target<TAB>"
                    f"similarity', got {len(parts)} fields")
            try:
                sim = float(parts[2])
            except ValueError:
                raise LexiconFormatError(
                    f"{path}:{lineno}: bad similarity {parts[2]!r}") from None
            entries.setdefault(parts[0], []).append(
                TranslationOption(parts[1], sim))
    if k is None:
        k = max((len(v) for v in entries.values()), default=0)
    return BilingualLexicon(entries, k=k, metric=metric)


def evaluate_precision(lex: BilingualLexicon, gold) -> dict[str, float]:
    """Precision at 1 and 5 plus coverage against gold translation pairs.

    A gold source word counts as a hit at n if any of its gold targets is
    among its first n options.  Words missing from the lexicon lower
    coverage only.
    """
    by_source: dict[str, set[str]] = {}
    for s, t in gold:
        by_source.setdefault(s, set()).add(t)
    if not by_source:
        raise ValueError("gold set is empty")
    present = [s for s in by_source if s in lex.entries]
    result = {"coverage": len(present) / len(by_source)}
    for n in (1, 5):
        hits = sum(
            any(o.target_token in by_source[s] for o in lex.entries[s][:n])
            for s in present)
        result[f"p_at_{n}"] = hits / len(present) if present else 0.0
    return result
