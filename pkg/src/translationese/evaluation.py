"""Corpus-level BLEU on pre-tokenized text."""
from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence

__all__ = ["bleu", "bleu_stats"]


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _tok(s):
    return s.split() if isinstance(s, str) else list(s)


def bleu_stats(hypotheses: Iterable, references: Iterable, max_n: int = 4):
    """Clipped n-gram matches, totals and lengths summed over the corpus."""
    hyps = [_tok(h) for h in hypotheses]
    refs = [_tok(r) for r in references]
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses but {len(refs)} references")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            hc, rc = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(len(h) - n + 1, 0)
    return matches, totals, hyp_len, ref_len


def bleu(hypotheses: Iterable, references: Iterable, max_n: int = 4) -> float:
    """BLEU-4 in [0, 100], rounded to 2 decimals.

    Geometric mean of clipped n-gram precisions times the brevity penalty
    ``exp(1 - r/c)`` (applied when ``c <= r``).  Any zero precision gives 0;
    no smoothing and no retokenization.
    """
    matches, totals, c, r = bleu_stats(hypotheses, references, max_n)
    if c == 0 or any(m == 0 for m in matches):
        return 0.0
    log_prec = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return round(100 * bp * math.exp(log_prec), 2)
