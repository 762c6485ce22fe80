import math

import numpy as np
import pytest

from translationese.evaluation import bleu, bleu_stats


def test_identical_is_100():
    text = ["the cat sat on the mat", "a b c d e f", "one two three four"]
    assert bleu(text, text) == 100.0


def test_no_shared_unigram_is_zero():
    assert bleu(["x y z w"], ["a b c d"]) == 0.0


def test_hand_computed_fixture():
    hyps = ["the cat sat on the mat", "a b c d"]
    refs = ["the cat is on the mat", "a b c d e"]
    # matched / total n-grams summed over both sentences:
    #   1-grams 5+4 / 6+4, 2-grams 3+3 / 5+3, 3-grams 1+2 / 4+2,
    #   4-grams 0+1 / 3+1;  c = 10, r = 11
    # BLEU = exp(1 - 11/10) * (9/10 * 6/8 * 3/6 * 1/4) ** (1/4) = 0.48767
    assert bleu_stats(hyps, refs) == ([9, 6, 3, 1], [10, 8, 6, 4], 10, 11)
    assert bleu(hyps, refs) == pytest.approx(48.77, abs=0.01)


def test_clipping():
    # "the" appears 7 times in the hypothesis but only twice in the reference
    matches, totals, _, _ = bleu_stats(["the " * 7], ["the cat the mat"], 1)
    assert (matches, totals) == ([2], [7])


def test_no_brevity_penalty_for_longer_output():
    hyps = ["a b c d e f g"]
    refs = ["a b c d e"]
    m = [5, 4, 3, 2]
    t = [7, 6, 5, 4]
    want = 100 * math.exp(sum(math.log(a / b) for a, b in zip(m, t)) / 4)
    assert bleu(hyps, refs) == round(want, 2)


def test_permutation_invariant():
    rng = np.random.default_rng(0)
    words = list("abcdefgh")
    refs = [" ".join(rng.choice(words, size=rng.integers(4, 12)))
            for _ in range(30)]
    hyps = [" ".join(rng.choice(words, size=rng.integers(4, 12)))
            for _ in range(30)]
    perm = rng.permutation(30)
    assert bleu(hyps, refs) == bleu([hyps[i] for i in perm],
                                    [refs[i] for i in perm])


def test_length_mismatch():
    with pytest.raises(ValueError):
        bleu(["a"], ["a", "b"])


def test_token_lists_accepted():
    assert bleu([["a", "b", "c", "d"]], ["a b c d"]) == 100.0
