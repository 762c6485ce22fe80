"""Context-aware word-by-word glossing.

Each source token is replaced by one of its dictionary options.  A
monotone beam search picks the sequence maximizing, per position,
``alpha * log10 P_LM(t | context) + beta * cos(s, t)``.
"""
from __future__ import annotations

import time
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .lexicon import BilingualLexicon
from .lm import BOS, EOS, NGramModel

__all__ = [
    "GlossConfig",
    "GlossHypothesis",
    "GlossedSentence",
    "GlossStats",
    "gloss_sentence",
    "beam_search",
    "gloss_corpus",
    "candidates",
]


@dataclass(frozen=True)
class GlossConfig:
    alpha: float = 0.01
    beta: float = 0.5
    stack_size: int = 100
    oov_policy: str = "copy-through"
    recombine: bool = True
    score_end_marker: bool = True

    def __post_init__(self):
        if self.stack_size < 1:
            raise ValueError("stack_size must be at least 1")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or v != v or v in (
                    float("inf"), float("-inf")):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.oov_policy != "copy-through":
            raise ValueError(f"unsupported oov_policy {self.oov_policy!r}")


@dataclass(frozen=True)
class GlossHypothesis:
    """A partial glossing of the first ``len(produced)`` source tokens."""

    produced: tuple[str, ...]
    score: float
    lm_context: tuple[str, ...]
    oov: tuple[bool, ...] = ()
    # option index chosen at each position; orders ties deterministically
    path: tuple[int, ...] = ()

    def sort_key(self):
        return (-self.score, self.path)


@dataclass(frozen=True)
class GlossedSentence:
    tokens: tuple[str, ...]
    score: float
    alignment: tuple[int, ...]
    oov_flags: tuple[bool, ...]

    def __str__(self):
        return " ".join(self.tokens)


@dataclass
class GlossStats:
    sentences: int = 0
    tokens: int = 0
    oov_tokens: int = 0
    seconds: float = 0.0

    @property
    def oov_rate(self) -> float:
        return self.oov_tokens / self.tokens if self.tokens else 0.0

    @property
    def sentences_per_second(self) -> float:
        return self.sentences / self.seconds if self.seconds > 0 else 0.0


def candidates(token: str, lex: BilingualLexicon):
    """``(target, similarity, is_oov)`` options for one source token."""
    opts = lex.options(token)
    if opts:
        return [(o.target_token, o.similarity, False) for o in opts]
    return [(token, 0.0, True)]


def gloss_sentence(sentence: Sequence[str], lex: BilingualLexicon,
                   lm: NGramModel, cfg: GlossConfig = GlossConfig()
                   ) -> GlossedSentence:
    """Gloss one tokenized, lowercased sentence.

    Source tokens missing from ``lex`` are copied through with similarity
    0; the language model scores the copy (as ``<unk>`` if unknown to it).
    With ``cfg.recombine`` hypotheses sharing the last ``order - 1`` output
    tokens are merged, which cannot change the best result because every
    later score depends only on that context.
    """
    sentence = list(sentence)
    if not sentence:
        return GlossedSentence((), 0.0, (), ())
    winner = beam_search(sentence, lex, lm, cfg)[0]
    return GlossedSentence(winner.produced, winner.score,
                           tuple(range(len(sentence))), winner.oov)


def beam_search(sentence: Sequence[str], lex: BilingualLexicon,
                lm: NGramModel, cfg: GlossConfig = GlossConfig()
                ) -> list[GlossHypothesis]:
    """Final stack of complete hypotheses, best first."""
    alpha, beta = cfg.alpha, cfg.beta
    n_ctx = lm.order - 1
    options = [[(t, lm.map_token(t), beta * sim, oov, j)
                for j, (t, sim, oov) in enumerate(candidates(s, lex))]
               for s in sentence]
    # paths are compared as base-`radix` integers: same order as tuples
    radix = max(len(o) for o in options) if options else 1
    chains: dict = {}

    def chain_for(ctx):
        chain = chains.get(ctx)
        if chain is None:
            chain = chains[ctx] = lm.backoff_chain(ctx)
        return chain

    logprob = lm.logprob_chain
    # hypothesis: (score, path code, raw lm context, back-pointer)
    beam = [(0.0, 0, (BOS,) * n_ctx, None)]
    for opts in options:
        extended = []
        for score, code, ctx, back in beam:
            chain = chain_for(ctx)
            code *= radix
            for tok, mtok, sim_term, oov, j in opts:
                extended.append((
                    score + alpha * logprob(mtok, chain) + sim_term,
                    code + j,
                    (ctx + (tok,))[1:] if n_ctx else (),
                    (back, tok, oov, j)))
        if cfg.recombine:
            best: dict = {}
            for hyp in extended:
                cur = best.get(hyp[2])
                if cur is None or (-hyp[0], hyp[1]) < (-cur[0], cur[1]):
                    best[hyp[2]] = hyp
            extended = list(best.values())
        extended.sort(key=_rank)
        beam = extended[:cfg.stack_size]

    if cfg.score_end_marker:
        eos = lm.map_token(EOS)
        beam = [(s + alpha * logprob(eos, chain_for(ctx)), c, ctx, b)
                for s, c, ctx, b in beam]
        beam.sort(key=_rank)
    return [_unwind(h) for h in beam]


def _rank(hyp):
    return (-hyp[0], hyp[1])


def _unwind(hyp) -> GlossHypothesis:
    score, _, ctx, back = hyp
    toks, oovs, path = [], [], []
    while back is not None:
        back, tok, oov, j = back
        toks.append(tok)
        oovs.append(oov)
        path.append(j)
    return GlossHypothesis(tuple(reversed(toks)), score, ctx,
                           tuple(reversed(oovs)), tuple(reversed(path)))


_worker_state: tuple | None = None


def _init_worker(lex, lm, cfg):
    global _worker_state
    _worker_state = (lex, lm, cfg)


def _gloss_in_worker(sentence):
    lex, lm, cfg = _worker_state
    return gloss_sentence(sentence, lex, lm, cfg)


def gloss_corpus(sentences: Iterable[Sequence[str] | str],
                 lex: BilingualLexicon, lm: NGramModel,
                 cfg: GlossConfig = GlossConfig(), workers: int = 1,
                 stats: GlossStats | None = None) -> Iterator[GlossedSentence]:
    """Gloss a stream of sentences, yielding results in input order.

    ``workers > 1`` decodes in a process pool; output is identical for any
    worker count.  Pass a :class:`GlossStats` to collect throughput and the
    OOV rate.
    """
    stats = stats if stats is not None else GlossStats()
    sentences = ([s.split() if isinstance(s, str) else list(s)
                  for s in sentences])
    start = time.perf_counter()
    if workers > 1 and len(sentences) > 1:
        chunk = max(1, len(sentences) // (workers * 4))
        with ProcessPoolExecutor(workers, initializer=_init_worker,
                                 initargs=(lex, lm, cfg)) as pool:
            results = pool.map(_gloss_in_worker, sentences, chunksize=chunk)
            for out in results:
                _tally(stats, out, start)
                yield out
    else:
        for sent in sentences:
            out = gloss_sentence(sent, lex, lm, cfg)
            _tally(stats, out, start)
            yield out


def _tally(stats: GlossStats, out: GlossedSentence, start: float):
    stats.sentences += 1
    stats.tokens += len(out.tokens)
    stats.oov_tokens += sum(out.oov_flags)
    stats.seconds = time.perf_counter() - start
