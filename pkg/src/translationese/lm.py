"""Backoff n-gram language models.

Training produces interpolated Kneser-Ney estimates (one absolute discount
per order) stored in backoff form, so a model round-trips through the
ARPA format and is queried with standard backoff semantics.  All scores
are log10.
"""
from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "ArpaFormatError",
    "NGramModel",
    "train",
    "train_file",
    "read_corpus",
    "kn_discount",
    "save_arpa",
    "load_arpa",
    "perplexity",
]

logger = logging.getLogger(__name__)

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
# log10 probability given to n-grams that exist only as contexts (e.g. <s>)
NO_PROB = -99.0


class ArpaFormatError(ValueError):
    pass


class NGramModel:
    """Backoff n-gram model.

    ``tables[n - 1]`` maps n-gram tuples to ``(log10 prob, log10 backoff)``;
    the backoff is ``None`` for n-grams that never act as a context.
    """

    def __init__(self, tables: Sequence[dict], smoothing: str = "kneser-ney"):
        if not tables or not tables[0]:
            raise ValueError("a model needs at least a unigram table")
        self.tables = [dict(t) for t in tables]
        self.order = len(self.tables)
        self.smoothing = smoothing
        if (UNK,) not in self.tables[0]:
            raise ValueError("unigram table must contain <unk>")
        self._unigrams = frozenset(w for (w,) in self.tables[0])

    @property
    def vocabulary(self) -> frozenset:
        return self._unigrams

    def __contains__(self, token):
        return token in self._unigrams

    def counts(self) -> list[int]:
        return [len(t) for t in self.tables]

    def logprob(self, token: str, context: Sequence[str] = ()) -> float:
        """log10 P(token | context) with standard backoff.

        Only the last ``order - 1`` context tokens are used; unseen tokens
        are scored as ``<unk>``.
        """
        unigrams = self._unigrams
        w = token if token in unigrams else UNK
        if self.order == 1:
            return self.tables[0][(w,)][0]
        ctx = tuple(t if t in unigrams else UNK
                    for t in context[len(context) - self.order + 1:])
        tables = self.tables
        total = 0.0
        for start in range(len(ctx)):
            h = ctx[start:]
            entry = tables[len(h)].get(h + (w,))
            if entry is not None:
                return total + entry[0]
            ctx_entry = tables[len(h) - 1].get(h)
            if ctx_entry is not None and ctx_entry[1] is not None:
                total += ctx_entry[1]
        return total + tables[0][(w,)][0]

    def map_token(self, token: str) -> str:
        return token if token in self._unigrams else UNK

    def backoff_chain(self, context: Sequence[str]) -> list:
        """Precompute the lookups :meth:`logprob` performs for ``context``.

        Returns ``(table, history, accumulated_backoff)`` triples, longest
        history first; pass the result to :meth:`logprob_chain`.  Histories
        absent from the model are skipped since no n-gram can extend them.
        """
        ctx = tuple(map(self.map_token,
                        context[len(context) - self.order + 1:])) \
            if self.order > 1 else ()
        chain = []
        total = 0.0
        for start in range(len(ctx)):
            h = ctx[start:]
            entry = self.tables[len(h) - 1].get(h)
            if entry is None:
                continue
            chain.append((self.tables[len(h)], h, total))
            if entry[1] is not None:
                total += entry[1]
        chain.append((self.tables[0], (), total))
        return chain

    def logprob_chain(self, token: str, chain: list) -> float:
        """log10 P(token | context) for a chain from :meth:`backoff_chain`.

        ``token`` must already be mapped with :meth:`map_token`.
        """
        for table, h, acc in chain:
            entry = table.get(h + (token,))
            if entry is not None:
                return acc + entry[0]
        raise KeyError(token)

    def score_sentence(self, tokens: Sequence[str], eos: bool = True) -> float:
        """Total log10 probability of a sentence, ``<s>``-padded."""
        context = [BOS] * (self.order - 1)
        total = 0.0
        for tok in list(tokens) + ([EOS] if eos else []):
            total += self.logprob(tok, context)
            context.append(tok)
        return total


def _pad(sentence: Sequence[str], order: int) -> list[str]:
    return [BOS] * (order - 1) + list(sentence) + [EOS]


def read_corpus(path) -> Iterable[list[str]]:
    """Yield whitespace-tokenized lines of a one-sentence-per-line file."""
    with open(path, encoding="utf-8") as f:
        for line in f:
            yield line.split()


def kn_discount(counts: Iterable[int]) -> float | None:
    """``n1 / (n1 + 2 n2)`` from counts-of-counts, or None if undefined."""
    coc = Counter(counts)
    n1, n2 = coc.get(1, 0), coc.get(2, 0)
    if n1 == 0 or n2 == 0:
        return None
    return n1 / (n1 + 2 * n2)


def _count(corpus: Iterable[Sequence[str]], order: int):
    top: Counter = Counter()
    n_sentences = 0
    for sent in corpus:
        if isinstance(sent, str):
            sent = sent.split()
        n_sentences += 1
        padded = _pad(sent, order)
        for i in range(order - 1, len(padded)):
            top[tuple(padded[i - order + 1:i + 1])] += 1
    return top, n_sentences


def _add_context_entries(tables, order):
    """Ensure every context carrying a backoff weight has an entry."""
    for n in range(2, order + 1):
        for gram in tables[n - 1]:
            h = gram[:-1]
            if h not in tables[n - 2]:
                tables[n - 2][h] = [NO_PROB, None]


def _train_kn(top: Counter, order: int, fallback_discount: float):
    # counts[n] holds raw counts at the top order, continuation counts below
    counts: list[dict] = [None] * (order + 1)
    counts[order] = dict(top)
    for n in range(order - 1, 0, -1):
        cc: Counter = Counter()
        for gram in counts[n + 1]:
            cc[gram[1:]] += 1
        counts[n] = dict(cc)

    discounts = []
    for n in range(1, order + 1):
        d = kn_discount(counts[n].values())
        if d is None:
            logger.warning("order %d: KN discount undefined (n1 or n2 is 0); "
                           "using %.2f", n, fallback_discount)
            d = fallback_discount
        discounts.append(d)

    tables: list[dict] = [dict() for _ in range(order)]

    # unigrams: discounted mass goes to <unk>
    d1 = discounts[0]
    total = sum(counts[1].values())
    for (w,), c in counts[1].items():
        tables[0][(w,)] = [math.log10((c - d1) / total), None]
    unk_mass = d1 * len(counts[1]) / total
    if (UNK,) in tables[0]:
        unk_mass += 10 ** tables[0][(UNK,)][0]
    tables[0][(UNK,)] = [math.log10(unk_mass), None]
    tables[0].setdefault((BOS,), [NO_PROB, None])

    for n in range(2, order + 1):
        d = discounts[n - 1]
        ctx_total: dict = defaultdict(int)
        ctx_types: dict = defaultdict(int)
        for gram, c in counts[n].items():
            ctx_total[gram[:-1]] += c
            ctx_types[gram[:-1]] += 1
        gamma = {h: d * ctx_types[h] / ctx_total[h] for h in ctx_total}
        lower = tables[n - 2]
        for gram, c in counts[n].items():
            h = gram[:-1]
            p_lower = 10 ** lower[gram[1:]][0]
            p = (c - d) / ctx_total[h] + gamma[h] * p_lower
            tables[n - 1][gram] = [math.log10(p), None]
        for h, g in gamma.items():
            if h not in lower:
                lower[h] = [NO_PROB, None]
            lower[h][1] = math.log10(g)
    return tables, discounts


def _train_add_k(top: Counter, order: int, k: float):
    """Additive smoothing per order, renormalized into backoff form.

    Seen n-grams get ``(c + k) / (c(h) + k|V|)``; the leftover mass of each
    context is spread over unseen words in proportion to the lower order.
    """
    counts: list[dict] = [None] * (order + 1)
    for n in range(1, order + 1):
        c: Counter = Counter()
        for gram, v in top.items():
            c[gram[order - n:]] += v
        counts[n] = dict(c)
    vocab = {w for (w,) in counts[1]} | {UNK}
    v_size = len(vocab)
    tables: list[dict] = [dict() for _ in range(order)]
    total = sum(counts[1].values())
    for w in vocab:
        c = counts[1].get((w,), 0)
        tables[0][(w,)] = [math.log10((c + k) / (total + k * v_size)), None]
    tables[0].setdefault((BOS,), [NO_PROB, None])
    for n in range(2, order + 1):
        ctx_total: dict = defaultdict(int)
        by_ctx: dict = defaultdict(list)
        for gram, c in counts[n].items():
            ctx_total[gram[:-1]] += c
            by_ctx[gram[:-1]].append(gram)
        lower = tables[n - 2]
        for h, grams in by_ctx.items():
            denom = ctx_total[h] + k * v_size
            seen_p = seen_lower = 0.0
            for gram in grams:
                p = (counts[n][gram] + k) / denom
                tables[n - 1][gram] = [math.log10(p), None]
                seen_p += p
                seen_lower += 10 ** lower[gram[1:]][0]
            left, left_lower = 1.0 - seen_p, 1.0 - seen_lower
            bow = left / left_lower if left > 0 and left_lower > 0 else 1.0
            if h not in lower:
                lower[h] = [NO_PROB, None]
            lower[h][1] = math.log10(bow)
    return tables


def train(corpus: Iterable[Sequence[str]], order: int = 5,
          smoothing: str = "kneser-ney", *, add_k: float = 1.0,
          fallback_discount: float = 0.5) -> NGramModel:
    """Estimate an n-gram model from tokenized sentences.

    Parameters
    ----------
    corpus : iterable of token sequences (or whitespace-separated strings)
    order : int
        Highest n-gram order.
    smoothing : {"kneser-ney", "add-k"}
        Interpolated Kneser-Ney uses ``D = n1 / (n1 + 2 n2)`` per order, with
        continuation counts below the top order; the mass reserved at the
        unigram level is assigned to ``<unk>``.
    add_k : float
        Pseudo-count for ``"add-k"``.
    fallback_discount : float
        Discount used at an order whose counts-of-counts leave the Kneser-Ney
        formula undefined.

    Notes
    -----
    Sentences are padded with ``order - 1`` leading ``<s>`` and one trailing
    ``</s>``.  No count pruning is applied.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if smoothing not in ("kneser-ney", "add-k"):
        raise ValueError(f"unknown smoothing {smoothing!r}")
    top, n_sentences = _count(corpus, order)
    if n_sentences == 0:
        raise ValueError("cannot train on an empty corpus")
    words = {g[-1] for g in top} - {EOS}
    if smoothing == "kneser-ney" and len(words) <= 1:
        logger.warning("corpus has a single distinct token; Kneser-Ney is "
                       "undefined, falling back to add-k (k=%g)", add_k)
        smoothing = "add-k"
    if smoothing == "kneser-ney":
        tables, _ = _train_kn(top, order, fallback_discount)
    else:
        tables = _train_add_k(top, order, add_k)
    _add_context_entries(tables, order)
    return NGramModel([{g: tuple(v) for g, v in t.items()} for t in tables],
                      smoothing=smoothing)


def train_file(path, order: int = 5, smoothing: str = "kneser-ney",
               **kwargs) -> NGramModel:
    return train(read_corpus(path), order, smoothing, **kwargs)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def save_arpa(model: NGramModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n\\data\\\n")
        for n, table in enumerate(model.tables, start=1):
            f.write(f"ngram {n}={len(table)}\n")
        for n, table in enumerate(model.tables, start=1):
            f.write(f"\n\\{n}-grams:\n")
            for gram in sorted(table):
                lp, bow = table[gram]
                line = f"{_fmt(lp)}\t{' '.join(gram)}"
                if bow is not None and n < model.order:
                    line += f"\t{_fmt(bow)}"
                f.write(line + "\n")
        f.write("\n\\end\\\n")


def load_arpa(path) -> NGramModel:
    """Parse an ARPA file.

    Raises
    ------
    ArpaFormatError
        On structural errors, including section sizes that disagree with
        the ``\\data\\`` header; the message carries the line number.
    """
    declared: dict[int, int] = {}
    tables: list[dict] = []
    section = None
    state = "preamble"

    def close_section(lineno):
        if section is not None and len(tables[section - 1]) != declared[section]:
            raise ArpaFormatError(
                f"{path}:{lineno}: {section}-grams section has "
                f"{len(tables[section - 1])} entries, header declares "
                f"{declared[section]}")

    with open(path, encoding="utf-8") as f:
        lineno = 0
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if state == "preamble":
                if line == "\\data\\":
                    state = "header"
                continue
            if not line:
                continue
            if state == "header" and line.startswith("ngram "):
                n, _, cnt = line[6:].partition("=")
                try:
                    declared[int(n)] = int(cnt)
                except ValueError:
                    raise ArpaFormatError(
                        f"{path}:{lineno}: bad header line {line!r}") from None
                continue
            if line == "\\end\\":
                close_section(lineno)
                state = "end"
                break
            if line.startswith("\\") and line.endswith("-grams:"):
                close_section(lineno)
                try:
                    section = int(line[1:-7])
                except ValueError:
                    raise ArpaFormatError(
                        f"{path}:{lineno}: bad section {line!r}") from None
                if section not in declared:
                    raise ArpaFormatError(
                        f"{path}:{lineno}: section {section} not in header")
                while len(tables) < section:
                    tables.append({})
                state = "body"
                continue
            if state != "body":
                raise ArpaFormatError(f"{path}:{lineno}: unexpected {line!r}")
            parts = line.split("\t")
            if len(parts) == 1:
                parts = line.split()
                gram = tuple(parts[1:1 + section])
                rest = parts[1 + section:]
            else:
                gram = tuple(parts[1].split())
                rest = parts[2:]
            try:
                lp = float(parts[0])
                bow = float(rest[0]) if rest else None
            except (ValueError, IndexError):
                raise ArpaFormatError(
                    f"{path}:{lineno}: bad entry {line!r}") from None
            if len(gram) != section:
                raise ArpaFormatError(
                    f"{path}:{lineno}: expected a {section}-gram, got "
                    f"{len(gram)} tokens")
            tables[section - 1][gram] = (lp, bow)
    if state != "end":
        raise ArpaFormatError(f"{path}:{lineno}: missing \\end\\ marker")
    if sorted(declared) != list(range(1, len(tables) + 1)):
        raise ArpaFormatError(f"{path}: header orders {sorted(declared)} do "
                              f"not match sections 1..{len(tables)}")
    unigrams = tables[0]
    if (UNK,) not in unigrams:
        # closed-vocabulary file: give <unk> no mass rather than fail
        unigrams[(UNK,)] = (NO_PROB, None)
    return NGramModel(tables)


def perplexity(model: NGramModel, corpus: Iterable[Sequence[str]]) -> float:
    """``10 ** (-sum(log10 P) / N)`` over all tokens including ``</s>``."""
    total, n = 0.0, 0
    for sent in corpus:
        if isinstance(sent, str):
            sent = sent.split()
        total += model.score_sentence(sent)
        n += len(sent) + 1
    if n == 0:
        raise ValueError("cannot compute perplexity of an empty corpus")
    return 10 ** (-total / n)
