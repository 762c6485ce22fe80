import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_embeddings, random_orthogonal
from translationese.alignment import (AlignmentError, DegenerateSeedWarning,
                                      LinearMap, RefineConfig, RefineReport,
                                      SeedLexicon, csls_score, load_map,
                                      load_seed_lexicon, procrustes, refine,
                                      save_map, seed_identical_strings)
from translationese.embeddings import EmbeddingMatrix, normalize_rows


def _emb(tokens, vecs):
    return EmbeddingMatrix.from_vectors(tokens, vecs)


def _rotated_pair(n, dim, rng, noise=0.0):
    """Source embeddings and a target copy rotated by a random Q."""
    x = normalize_rows(rng.standard_normal((n, dim)))
    q = random_orthogonal(dim, rng)
    y = x @ q
    if noise:
        y = y + noise * rng.standard_normal(y.shape)
    toks = [f"w{i}" for i in range(n)]
    return _emb([f"s_{t}" for t in toks], x), _emb(toks, y), q


def _seed(n_pairs, offset=0):
    return SeedLexicon(tuple((f"s_w{i}", f"w{i}")
                             for i in range(offset, offset + n_pairs)))


def _objective(x, y, w):
    return np.linalg.norm(x @ w - y)


# -- seeding ----------------------------------------------------------------

def test_identical_strings_seed():
    src = _emb(["2010", ".", "casa"], np.eye(3))
    tgt = _emb(["2010", ".", "house"], np.eye(3))
    seed = seed_identical_strings(src, tgt)
    assert seed.pairs == (("2010", "2010"), (".", "."))
    assert seed.provenance == "identical-strings"


def test_identical_strings_follow_source_order():
    src = _emb(["c", "b", "a"], np.eye(3))
    tgt = _emb(["a", "b", "c"], np.eye(3))
    assert [s for s, _ in seed_identical_strings(src, tgt).pairs] == \
        ["c", "b", "a"]
    assert len(seed_identical_strings(src, src)) == 3


def test_disjoint_vocabularies_raise():
    with pytest.raises(AlignmentError, match="seed lexicon file"):
        seed_identical_strings(_emb(["a"], [[1.0]]), _emb(["b"], [[1.0]]))


def test_seed_file(tmp_path):
    src = _emb(["x", "y", "z"], np.eye(3))
    tgt = _emb(["a", "b", "c"], np.eye(3))
    path = tmp_path / "seed.tsv"
    path.write_text("# comment\nx\ta\ny\tb\nq\tc\n", encoding="utf-8")
    seed = load_seed_lexicon(path, src, tgt)
    assert seed.pairs == (("x", "a"), ("y", "b"))
    path.write_text("x a\n")
    with pytest.raises(AlignmentError, match=":1:"):
        load_seed_lexicon(path)


# -- procrustes -------------------------------------------------------------

def test_identity_recovery(rng):
    x = rng.standard_normal((40, 6))
    toks = [f"w{i}" for i in range(40)]
    src, tgt = _emb(toks, x), _emb(toks, x)
    w = procrustes(src, tgt, seed_identical_strings(src, tgt))
    np.testing.assert_allclose(w.matrix, np.eye(6), atol=1e-6)


def test_rotation_recovery(rng):
    src, tgt, q = _rotated_pair(200, 12, rng)
    w = procrustes(src, tgt, _seed(50))
    x = src.vectors[:50]
    y = tgt.vectors[:50]
    assert _objective(x, y, w.matrix) < 1e-6
    np.testing.assert_allclose(w.matrix, q, atol=1e-8)


def test_noisy_solution_beats_random_orthogonal(rng):
    src, tgt, _ = _rotated_pair(100, 8, rng, noise=0.1)
    seed = _seed(60)
    w = procrustes(src, tgt, seed)
    x, y = src.vectors[:60], tgt.vectors[:60]
    best = _objective(x, y, w.matrix)
    for _ in range(100):
        assert best <= _objective(x, y, random_orthogonal(8, rng)) + 1e-12


def test_procrustes_errors(rng):
    src, tgt, _ = _rotated_pair(10, 4, rng)
    with pytest.raises(AlignmentError):
        procrustes(src, tgt, _seed(1))
    with pytest.raises(AlignmentError):
        procrustes(src, tgt, SeedLexicon((("s_w0", "w0"), ("nope", "w1"))))
    with pytest.raises(AlignmentError):
        procrustes(src, random_embeddings(10, 5, rng), _seed(3))


def test_rank_deficiency_warns_but_returns_orthogonal(rng):
    src, tgt, _ = _rotated_pair(10, 6, rng)
    with pytest.warns(DegenerateSeedWarning):
        w = procrustes(src, tgt, _seed(3))
    assert w.orthogonality_error() < 1e-4


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.integers(1, 8))
def test_procrustes_is_orthogonal_and_optimal(seed, n_pairs, dim):
    rng = np.random.default_rng(seed)
    src = random_embeddings(n_pairs, dim, rng, prefix="s")
    tgt = random_embeddings(n_pairs, dim, rng, prefix="t")
    lex = SeedLexicon(tuple((f"s{i}", f"t{i}") for i in range(n_pairs)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSeedWarning)
        w = procrustes(src, tgt, lex)
    assert w.orthogonality_error() < 1e-4
    best = _objective(src.vectors, tgt.vectors, w.matrix)
    for _ in range(200):
        q = random_orthogonal(dim, rng)
        assert best <= _objective(src.vectors, tgt.vectors, q) + 1e-9


def test_mapped_cosine_matches_dot_of_normalized(rng):
    src, tgt, _ = _rotated_pair(30, 5, rng, noise=0.2)
    w = procrustes(src, tgt, _seed(30))
    for x in src.vectors[:5]:
        xw = x @ w.matrix
        for y in tgt.vectors[:5]:
            cos = np.dot(xw, y) / np.linalg.norm(xw)
            assert abs(cos - np.dot(w.apply(x), y)) < 1e-6


def test_map_file_roundtrip(tmp_path, rng):
    m = LinearMap(random_orthogonal(7, rng))
    save_map(m, tmp_path / "w.txt")
    lines = (tmp_path / "w.txt").read_text().splitlines()
    assert lines[0] == "7 7" and len(lines) == 8
    back = load_map(tmp_path / "w.txt")
    np.testing.assert_allclose(back.matrix, m.matrix, atol=1e-8)
    assert back.orthogonal


def test_map_file_bad_shape(tmp_path):
    (tmp_path / "w.txt").write_text("3 3\n1 0 0\n0 1 0\n")
    with pytest.raises(AlignmentError):
        load_map(tmp_path / "w.txt")


# -- CSLS -------------------------------------------------------------------

def test_csls_single_word_is_zero():
    tgt = _emb(["y"], [[0.6, 0.8]])
    src_mapped = _emb(["x"], [[0.6, 0.8]])
    assert csls_score([0.6, 0.8], tgt, src_mapped, "y", 1) == \
        pytest.approx(0.0, abs=1e-15)


def test_csls_matches_hand_expansion():
    # 5 target words, 5 mapped source words, dim 5, csls_k = 2
    t = normalize_rows(np.array([
        [1, 0, 0, 0, 0], [1, 1, 0, 0, 0], [0, 0, 1, 0, 0],
        [0, 1, 0, 1, 0], [0, 0, 0, 1, 1]], float))
    s = normalize_rows(np.array([
        [1, 0, 1, 0, 0], [0, 1, 0, 0, 0], [0, 0, 0, 0, 1],
        [1, 1, 1, 1, 1], [0, 0, 1, 1, 0]], float))
    tgt = _emb(list("abcde"), t)
    src = _emb(list("vwxyz"), s)
    q = s[0]
    # q = (1,0,1,0,0)/sqrt2; cosines with targets:
    #   a 1/sqrt2, b 1/2, c 1/sqrt2, d 0, e 0  -> r_T = 1/sqrt2
    # candidate b = (1,1,0,0,0)/sqrt2; cosines with mapped sources:
    #   v 1/2, w 1/sqrt2, x 0, y 2/sqrt10, z 0 -> top2: 1/sqrt2, 2/sqrt10
    r_t = 1 / np.sqrt(2)
    r_s = (1 / np.sqrt(2) + 2 / np.sqrt(10)) / 2
    expected = 2 * 0.5 - r_t - r_s
    assert csls_score(q, tgt, src, "b", 2) == pytest.approx(expected,
                                                           abs=1e-9)


def test_csls_errors(rng):
    tgt = random_embeddings(3, 2, rng)
    with pytest.raises(ValueError):
        csls_score([1, 0], tgt, tgt, "w0", 4)


def test_csls_demotes_hub(rng):
    dim = 10
    center = np.eye(dim)[0]
    # a cloud of targets around one direction; the hub sits near its mean
    targets = normalize_rows(2 * center + rng.standard_normal((19, dim)))
    hub = normalize_rows(targets.mean(axis=0))
    t = np.vstack([targets, hub])
    tgt = _emb([f"t{i}" for i in range(20)], t)
    src = _emb([f"s{i}" for i in range(20)],
               2 * center + rng.standard_normal((20, dim)))
    hub_tok = "t19"

    def rank_of_hub(scores):
        order = sorted(range(20), key=lambda j: (-scores[j], j))
        return order.index(19)

    cos_ranks, csls_ranks = [], []
    for q in src.vectors:
        cos = [float(np.dot(q, y)) for y in tgt.vectors]
        csls = [csls_score(q, tgt, src, tok, 3) for tok in tgt.tokens]
        cos_ranks.append(rank_of_hub(cos))
        csls_ranks.append(rank_of_hub(csls))
    assert hub_tok == tgt.tokens[19]
    assert np.mean(csls_ranks) > np.mean(cos_ranks)
    assert sum(r == 0 for r in csls_ranks) < sum(r == 0 for r in cos_ranks)


# -- refinement -------------------------------------------------------------

def test_zero_iterations_is_noop(rng):
    src, tgt, _ = _rotated_pair(50, 5, rng)
    w = LinearMap(random_orthogonal(5, rng))
    out = refine(w, src, tgt, RefineConfig(iterations=0))
    assert np.array_equal(out.matrix, w.matrix)


def test_refine_keeps_exact_recovery(rng):
    src, tgt, q = _rotated_pair(300, 10, rng)
    w = procrustes(src, tgt, _seed(40))
    report = RefineReport()
    w2 = refine(w, src, tgt, RefineConfig(iterations=1, dict_pool=300),
                report)
    assert report.lexicon_sizes == [300]
    assert _objective(src.vectors, tgt.vectors, w2.matrix) < 1e-6


def _seed_accuracy(w, src, tgt, n):
    mapped = w.apply(src.vectors[:n])
    best = np.argmax(mapped @ tgt.vectors.T, axis=1)
    return np.mean(best == np.arange(n))


def test_refine_does_not_hurt_seed_pairs(rng):
    src, tgt, _ = _rotated_pair(400, 20, rng, noise=0.01)
    tgt = _emb(tgt.tokens, tgt.vectors)
    n_seed = 40
    w0 = procrustes(src, tgt, _seed(n_seed))
    w1 = refine(w0, src, tgt, RefineConfig(dict_pool=400))
    assert _seed_accuracy(w1, src, tgt, n_seed) >= \
        _seed_accuracy(w0, src, tgt, n_seed)


def test_refine_is_deterministic(rng):
    src, tgt, _ = _rotated_pair(300, 8, rng, noise=0.05)
    w0 = procrustes(src, tgt, _seed(20))
    cfg = RefineConfig(iterations=3, dict_pool=250)
    a = refine(w0, src, tgt, cfg)
    b = refine(w0, src, tgt, cfg)
    assert a.matrix.tobytes() == b.matrix.tobytes()


def test_refine_stops_early_without_pairs():
    # two source words, both nearest to the same target word
    src = _emb(["a", "b"], [[1, 0.1], [1, -0.1]])
    tgt = _emb(["x", "y"], [[1, 0], [0, 1]])
    w = LinearMap.identity(2)
    report = RefineReport()
    out = refine(w, src, tgt, RefineConfig(csls_k=1), report)
    assert report.stopped_early
    assert report.lexicon_sizes == [1]
    assert np.array_equal(out.matrix, w.matrix)


def test_refine_config_validation():
    with pytest.raises(ValueError):
        RefineConfig(iterations=-1)
    with pytest.raises(ValueError):
        RefineConfig(csls_k=0)
    assert RefineConfig() == RefineConfig(5, 10, 10_000, True)
