import itertools
import logging
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from translationese.cipher import synthetic_corpus
from translationese.lm import (BOS, EOS, UNK, ArpaFormatError, NGramModel,
                               kn_discount, load_arpa, perplexity, save_arpa,
                               train)

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def corpus():
    return synthetic_corpus(6000, seed=3, vocab_size=300, n_classes=12)


@pytest.fixture(scope="module")
def model5(corpus):
    return train(corpus, order=5)


def _fixture_rows(name):
    for line in (DATA / name).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            continue
        ctx, word, frac = line.split("\t")
        yield ctx.split(), word, Fraction(frac)


def test_kn_bigram_matches_hand_computation():
    model = train(["a b a b"], order=2)
    rows = list(_fixture_rows("kn_abab_bigram.tsv"))
    assert len(rows) == 13
    for ctx, word, p in rows:
        assert 10 ** model.logprob(word, ctx) == pytest.approx(float(p),
                                                              rel=1e-12)


def test_kn_discount_formula():
    assert kn_discount([1, 1, 1, 2]) == pytest.approx(3 / 5)
    assert kn_discount([2, 1, 1]) == pytest.approx(1 / 2)
    assert kn_discount([1, 1]) is None
    assert kn_discount([2, 3]) is None


def _normalization_error(model, context):
    vocab = [w for w in model.vocabulary if w != BOS]
    return abs(sum(10 ** model.logprob(w, context) for w in vocab) - 1.0)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("smoothing", ["kneser-ney", "add-k"])
def test_distributions_sum_to_one(corpus, order, smoothing):
    model = train(corpus, order=order, smoothing=smoothing)
    rng = np.random.default_rng(order)
    padded = [[BOS] * (order - 1) + s for s in corpus]
    for _ in range(20):
        sent = padded[rng.integers(len(padded))]
        i = rng.integers(order - 1, len(sent) + 1)
        ctx = sent[max(0, i - order + 1):i]
        assert _normalization_error(model, ctx) < 1e-6
    # unseen and partially unseen contexts
    assert _normalization_error(model, ["zzz", "qqq", "xxx", "yyy"]) < 1e-6


def test_probabilities_valid(model5):
    for table in model5.tables:
        for gram, (lp, bow) in table.items():
            assert math.isfinite(lp) and lp <= 0
            if bow is not None:
                assert math.isfinite(bow)


def test_table_hit_returns_stored_value(model5):
    gram, (lp, _) = next(iter(model5.tables[2].items()))
    assert model5.logprob(gram[-1], gram[:-1]) == lp


def test_backoff_expansion(model5):
    table2 = model5.tables[1]
    vocab = sorted(w for w in model5.vocabulary if w not in (BOS, UNK))
    for h, w in itertools.product(vocab[:30], vocab[:30]):
        if (h, w) not in table2:
            bow = model5.tables[0][(h,)][1] or 0.0
            assert model5.logprob(w, [h]) == pytest.approx(
                bow + model5.tables[0][(w,)][0], abs=1e-12)
            break
    else:
        pytest.fail("no unseen bigram found")


def test_unknown_token_scores_as_unk(model5):
    assert model5.logprob("never-seen", ["x"]) == model5.logprob(UNK, ["x"])


def test_sentence_start_uses_padding(model5, corpus):
    first = corpus[0][0]
    assert model5.score_sentence([first], eos=False) == \
        model5.logprob(first, [BOS] * 4)
    assert (BOS,) * 4 + (first,) in model5.tables[4]


def test_context_truncated_to_order(model5):
    ctx = ["a", "b", "c", "d", "e", "f", "g"]
    assert model5.logprob("x", ctx) == model5.logprob("x", ctx[-4:])


def test_arpa_roundtrip(tmp_path, model5, corpus):
    save_arpa(model5, tmp_path / "lm.arpa")
    back = load_arpa(tmp_path / "lm.arpa")
    assert back.order == 5
    rng = np.random.default_rng(0)
    vocab = sorted(model5.vocabulary) + ["never-seen"]
    for _ in range(1000):
        ctx = list(rng.choice(vocab, size=rng.integers(0, 5)))
        w = str(rng.choice(vocab))
        assert abs(back.logprob(w, ctx) - model5.logprob(w, ctx)) < 1e-6


def test_arpa_layout(tmp_path):
    model = train(["a b a b"], order=2)
    save_arpa(model, tmp_path / "lm.arpa")
    text = (tmp_path / "lm.arpa").read_text()
    assert "\\data\\\nngram 1=5\nngram 2=4\n" in text
    assert "\\1-grams:\n" in text and "\\2-grams:\n" in text
    assert text.rstrip().endswith("\\end\\")
    two = text.split("\\2-grams:\n")[1].split("\n\n")[0].splitlines()
    assert all(len(line.split("\t")) == 2 for line in two)


def test_unigram_only_model(tmp_path):
    model = train(["a b c", "a"], order=1)
    save_arpa(model, tmp_path / "uni.arpa")
    text = (tmp_path / "uni.arpa").read_text()
    assert "ngram 2" not in text and "\\2-grams:" not in text
    assert load_arpa(tmp_path / "uni.arpa").order == 1


def test_external_kaldi_arpa():
    model = load_arpa(DATA / "kaldi_toy.arpa")
    assert model.order == 3
    assert model.logprob("a", [BOS]) == -0.2880650
    assert model.logprob("b", ["a"]) == -0.5099138
    assert model.logprob("c", []) == -0.9542425
    # unseen trigram and bigram: bow(<s> b) + bow(b) + P(c)
    assert model.logprob("c", [BOS, "b"]) == pytest.approx(
        0.4393327 - 0.2912702 - 0.9542425, abs=1e-12)


def test_arpa_count_mismatch_reports_line(tmp_path):
    text = (DATA / "kaldi_toy.arpa").read_text().replace("ngram 2=9",
                                                         "ngram 2=8")
    (tmp_path / "bad.arpa").write_text(text)
    with pytest.raises(ArpaFormatError, match=r"bad\.arpa:\d+: 2-grams"):
        load_arpa(tmp_path / "bad.arpa")


def test_arpa_truncated(tmp_path):
    text = (DATA / "kaldi_toy.arpa").read_text().replace("\\end\\", "")
    (tmp_path / "bad.arpa").write_text(text)
    with pytest.raises(ArpaFormatError):
        load_arpa(tmp_path / "bad.arpa")


def test_uniform_perplexity():
    v = 7
    words = [f"w{i}" for i in range(v - 2)]
    lp = -math.log10(v)
    table = {(w,): (lp, None) for w in words + [EOS, UNK]}
    table[(BOS,)] = (-99.0, None)
    model = NGramModel([table])
    sents = [["w0", "w3"], ["w1"], ["w4", "w4", "w2"]]
    assert perplexity(model, sents) == pytest.approx(v)


def test_higher_order_fits_training_data_better(corpus):
    pp5 = perplexity(train(corpus, order=5), corpus)
    pp1 = perplexity(train(corpus, order=1), corpus)
    assert pp5 <= pp1


def test_add_k_single_sentence_by_hand():
    k = 0.01
    model = train(["x y"], order=1, smoothing="add-k", add_k=k)
    # tokens x, y, </s> each seen once, plus <unk>: |V| = 4, N = 3
    p = (1 + k) / (3 + 4 * k)
    assert perplexity(model, ["x y"]) == pytest.approx(1 / p)


def test_heldout_perplexity_improves_with_data():
    # sizes large enough that held-out OOVs (scored as <unk>) are rare;
    # below that, shrinking <unk> mass dominates the comparison
    sents = synthetic_corpus(60_000, seed=11, vocab_size=300, n_classes=12)
    held, train_pool = sents[:150], sents[150:]
    pps = [perplexity(train(train_pool[:n], order=3), held)
           for n in (1000, 2000, len(train_pool))]
    assert pps[0] >= pps[1] >= pps[2]


def test_single_token_corpus_falls_back(caplog):
    with caplog.at_level(logging.WARNING):
        model = train(["a a a", "a"], order=2)
    assert model.smoothing == "add-k"
    assert "falling back" in caplog.text
    assert _normalization_error(model, ["a"]) < 1e-9


def test_errors():
    with pytest.raises(ValueError):
        train(["a b"], order=0)
    with pytest.raises(ValueError):
        train([], order=2)
    with pytest.raises(ValueError):
        train(["a b"], smoothing="witten-bell")


def test_score_sentence_is_sum_of_logprobs(model5, corpus):
    sent = corpus[1]
    ctx = [BOS] * 4
    total = 0.0
    for w in sent + [EOS]:
        total += model5.logprob(w, ctx)
        ctx.append(w)
    assert model5.score_sentence(sent) == pytest.approx(total, abs=1e-12)
