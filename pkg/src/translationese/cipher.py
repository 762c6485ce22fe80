"""End-to-end check on a ciphered copy of the target language.

A synthetic "source language" is made by relabeling every alphabetic
target token; its embeddings are copies of the target embeddings (optionally
perturbed).  Digits and punctuation keep their spelling and seed the
alignment.  Because the right answer is known for every word, the whole
map -> refine -> lexicon -> gloss chain can be scored exactly.

The module also has small generators for a synthetic target corpus and
matching embeddings, used by the tests and demos when no real data is
around.
"""
from __future__ import annotations

import logging
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import lm as lm_mod
from .alignment import (RefineConfig, RefineReport, procrustes, refine,
                        seed_identical_strings)
from .decoder import GlossConfig, GlossStats, gloss_corpus
from .embeddings import EmbeddingMatrix
from .evaluation import bleu
from .lexicon import build_lexicon, evaluate_precision
from .pipeline import PipelineError, shuffle

__all__ = [
    "CipherReport",
    "make_cipher",
    "synthetic_corpus",
    "synthetic_embeddings",
    "end_to_end_cipher_test",
]

logger = logging.getLogger(__name__)

# Cyrillic lowercase а..я: disjoint from ASCII target vocabularies
_ALPHABET = [chr(c) for c in range(0x0430, 0x0450)]
_CONSONANTS = "bcdfghjklmnprstvwz"
_VOWELS = "aeiou"
_PUNCT = [".", ",", "?", "!", ";", ":", "(", ")", "-", "\"", "'", "%"]


def _encode(i: int) -> str:
    base = len(_ALPHABET)
    i += base * base            # at least three letters
    out = []
    while i:
        i, r = divmod(i, base)
        out.append(_ALPHABET[r])
    return "".join(reversed(out))


def make_cipher(tokens, seed: int) -> dict[str, str]:
    """Bijective relabeling of the alphabetic tokens in ``tokens``."""
    words = [t for t in dict.fromkeys(tokens) if t.isalpha()]
    order = shuffle(range(len(words)), seed)
    cipher = {w: _encode(code) for w, code in zip(words, order)}
    clash = set(cipher.values()) & set(tokens)
    if clash:
        raise PipelineError(
            f"cipher collides with existing tokens: {sorted(clash)[:5]}")
    return cipher


def synthetic_corpus(n_tokens: int = 100_000, seed: int = 0,
                     vocab_size: int = 3000, n_classes: int = 40,
                     n_numbers: int = 120) -> list[list[str]]:
    """Sentences from a random class-based Markov language.

    Words are pseudo-syllabic lowercase strings with Zipfian frequencies;
    a sparse class-transition matrix gives the text local structure for a
    language model to find.  Numbers and punctuation are mixed in so the
    vocabulary has identical-string anchors.
    """
    rng = np.random.default_rng(seed)
    words: list[str] = []
    seen = set()
    while len(words) < vocab_size:
        n_syl = int(rng.integers(1, 4))
        w = "".join(rng.choice(list(_CONSONANTS)) + rng.choice(list(_VOWELS))
                    for _ in range(n_syl))
        if len(w) > 1 and w not in seen:
            seen.add(w)
            words.append(w)
    classes = rng.integers(0, n_classes, size=vocab_size)
    members = [np.flatnonzero(classes == c) for c in range(n_classes)]
    members = [m if m.size else np.array([c]) for c, m in enumerate(members)]
    # each class prefers a handful of successors
    trans = rng.dirichlet(np.full(n_classes + 2, 0.15), size=n_classes + 1)
    numbers = [str(x) for x in rng.choice(np.arange(1, 3000), n_numbers,
                                          replace=False)]
    num_class, end_class = n_classes, n_classes + 1

    def pick(pool):
        ranks = np.arange(1, len(pool) + 1)
        p = 1.0 / ranks
        return pool[rng.choice(len(pool), p=p / p.sum())]

    sentences = []
    total = 0
    while total < n_tokens:
        sent = []
        state = int(rng.integers(0, n_classes))
        while len(sent) < 40:
            if state == num_class:
                sent.append(pick(numbers))
            else:
                sent.append(words[pick(members[state])])
            if rng.random() < 0.08:
                sent.append(_PUNCT[int(rng.integers(1, len(_PUNCT)))])
            nxt = int(rng.choice(n_classes + 2, p=trans[state]))
            if nxt == end_class and len(sent) >= 3:
                break
            state = nxt if nxt != end_class else int(rng.integers(0, n_classes))
        sent.append(".")
        sentences.append(sent)
        total += len(sent)
    return sentences


def synthetic_embeddings(sentences, dim: int = 64, seed: int = 0,
                         cluster_weight: float = 0.5) -> EmbeddingMatrix:
    """Random unit vectors for the corpus vocabulary, frequency-sorted.

    Tokens sharing a first letter share a random cluster direction, which
    gives the space some neighborhood structure (and hubs) without making
    words indistinguishable.
    """
    rng = np.random.default_rng(seed)
    freq = Counter(tok for sent in sentences for tok in sent)
    tokens = [t for t, _ in sorted(freq.items(), key=lambda x: (-x[1], x[0]))]
    centers = {}
    vecs = np.empty((len(tokens), dim))
    for i, tok in enumerate(tokens):
        c = tok[0]
        if c not in centers:
            centers[c] = rng.standard_normal(dim)
        vecs[i] = cluster_weight * centers[c] + rng.standard_normal(dim)
    return EmbeddingMatrix.from_vectors(tokens, vecs)


@dataclass
class CipherReport:
    seed_pairs: int
    refine_sizes: list[int]
    p_at_1: float
    p_at_1_top: float
    top_n: int
    bleu: float
    heldout_sentences: int
    oov_rate: float
    seconds: float
    timings: dict[str, float] = field(default_factory=dict)

    def lines(self):
        yield f"seed_pairs={self.seed_pairs}"
        yield "refine_sizes=" + ",".join(map(str, self.refine_sizes))
        yield f"p_at_1={self.p_at_1:.6f}"
        yield f"p_at_1_top{self.top_n}={self.p_at_1_top:.6f}"
        yield f"bleu={self.bleu:.2f}"
        yield f"heldout_sentences={self.heldout_sentences}"
        yield f"oov_rate={self.oov_rate:.6f}"


def end_to_end_cipher_test(sentences, tgt: EmbeddingMatrix, seed: int = 0,
                           noise: float = 0.0, *, heldout: int = 200,
                           k: int = 20, order: int = 5, top_n: int = 1000,
                           refine_cfg: RefineConfig = RefineConfig(),
                           gloss_cfg: GlossConfig = GlossConfig(),
                           workers: int = 1) -> CipherReport:
    """Run the full glossing chain on a ciphered copy of ``sentences``.

    Parameters
    ----------
    sentences : list of token lists
        Target-language text.  ``heldout`` sentences made only of words in
        ``tgt`` are reserved for glossing; the rest train the language model.
    tgt : EmbeddingMatrix
        Target embeddings covering the text vocabulary.
    seed : int
        Drives the cipher, the held-out split and the noise.
    noise : float
        Standard deviation of Gaussian noise added per component to the
        source copies before renormalization.
    """
    t0 = time.perf_counter()
    timings = {}
    sentences = [list(s) for s in sentences]
    order_idx = shuffle(range(len(sentences)), seed)
    held, rest = [], []
    for i in order_idx:
        s = sentences[i]
        if len(held) < heldout and s and all(t in tgt for t in s):
            held.append(s)
        else:
            rest.append(s)
    if not rest:
        raise PipelineError("no sentences left to train the language model")
    model = lm_mod.train(rest, order=order)
    timings["lm"] = time.perf_counter() - t0

    cipher = make_cipher(tgt.tokens, seed)
    src_tokens = [cipher.get(t, t) for t in tgt.tokens]
    vecs = np.array(tgt.vectors)
    if noise > 0:
        rng = np.random.default_rng(seed)
        vecs = vecs + noise * rng.standard_normal(vecs.shape)
    src = EmbeddingMatrix.from_vectors(src_tokens, vecs)

    t1 = time.perf_counter()
    seed_lex = seed_identical_strings(src, tgt)
    rep = RefineReport()
    cfg = RefineConfig(refine_cfg.iterations, refine_cfg.csls_k,
                       min(refine_cfg.dict_pool, len(src), len(tgt)),
                       refine_cfg.mutual_only)
    w = refine(procrustes(src, tgt, seed_lex), src, tgt, cfg, rep)
    timings["map"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    lex = build_lexicon(w, src, tgt, k=min(k, len(tgt)), workers=workers)
    gold = [(c, t) for t, c in cipher.items()]
    p1 = evaluate_precision(lex, gold)["p_at_1"]
    top_words = [t for t in tgt.tokens if t in cipher][:top_n]
    p1_top = evaluate_precision(lex, [(cipher[t], t) for t in top_words]
                                )["p_at_1"]
    timings["lexicon"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    ciphered = [[cipher.get(t, t) for t in s] for s in held]
    stats = GlossStats()
    glossed = [g.tokens for g in gloss_corpus(ciphered, lex, model, gloss_cfg,
                                              workers=workers, stats=stats)]
    score = bleu(glossed, held) if held else 0.0
    timings["gloss"] = time.perf_counter() - t3
    return CipherReport(
        seed_pairs=len(seed_lex), refine_sizes=rep.lexicon_sizes,
        p_at_1=p1, p_at_1_top=p1_top, top_n=len(top_words), bleu=score,
        heldout_sentences=len(held), oov_rate=stats.oov_rate,
        seconds=time.perf_counter() - t0, timings=timings)
