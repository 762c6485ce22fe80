import pytest

from translationese.alignment import AlignmentError, RefineConfig
from translationese.cipher import (end_to_end_cipher_test, make_cipher,
                                   synthetic_corpus, synthetic_embeddings)
from translationese.embeddings import EmbeddingMatrix


def test_cipher_is_bijective_on_alphabetic_tokens():
    tokens = ["the", "cat", "42", ".", "sat", "the", "3.5"]
    c = make_cipher(tokens, seed=1)
    assert set(c) == {"the", "cat", "sat"}
    assert len(set(c.values())) == 3
    assert all(len(v) >= 3 and not v.isascii() for v in c.values())
    assert make_cipher(tokens, seed=1) == c


def test_synthetic_corpus_shape():
    sents = synthetic_corpus(5000, seed=2, vocab_size=200, n_classes=8)
    n = sum(map(len, sents))
    assert 5000 <= n < 5100
    assert all(s[-1] == "." for s in sents)
    assert any(t.isdigit() for s in sents for t in s)
    assert synthetic_corpus(5000, seed=2, vocab_size=200, n_classes=8) == sents


def test_synthetic_embeddings_cover_vocabulary():
    sents = synthetic_corpus(3000, seed=0, vocab_size=150, n_classes=6)
    emb = synthetic_embeddings(sents, dim=16)
    assert set(emb.tokens) == {t for s in sents for t in s}
    assert emb.dim == 16


@pytest.fixture(scope="module")
def small_world():
    sents = synthetic_corpus(15_000, seed=4, vocab_size=600, n_classes=16)
    return sents, synthetic_embeddings(sents, dim=48, seed=4)


def test_noiseless_cipher_is_recovered_exactly(small_world):
    sents, tgt = small_world
    rep = end_to_end_cipher_test(sents, tgt, seed=0, heldout=40, order=3)
    assert rep.seed_pairs > 0
    assert rep.p_at_1 == 1.0
    assert rep.bleu == 100.0
    assert rep.oov_rate == 0.0
    assert rep.heldout_sentences == 40


def test_noisy_cipher_still_mostly_right(small_world):
    sents, tgt = small_world
    rep = end_to_end_cipher_test(sents, tgt, seed=1, noise=0.05, heldout=20,
                                 order=3, top_n=300)
    assert rep.top_n == 300
    assert rep.p_at_1_top >= 0.95


def test_report_lines(small_world):
    sents, tgt = small_world
    rep = end_to_end_cipher_test(sents, tgt, heldout=5, order=2,
                                 refine_cfg=RefineConfig(iterations=1))
    lines = list(rep.lines())
    assert lines[0].startswith("seed_pairs=")
    assert "bleu=100.00" in lines


def test_no_identical_strings_is_fatal():
    sents = [["alpha", "beta", "gamma"]] * 20
    tgt = EmbeddingMatrix.from_vectors(["alpha", "beta", "gamma"],
                                       [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(AlignmentError, match="identical strings"):
        end_to_end_cipher_test(sents, tgt, heldout=2, k=2, order=2)
