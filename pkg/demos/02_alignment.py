# Learning an orthogonal map between two embedding spaces.
#
# The "source" space here is a hidden rotation of the target space plus a
# little noise.  Words spelled the same in both vocabularies (numbers in
# this toy) give a seed dictionary; Procrustes fits the rotation to it and
# refinement re-fits on mutual CSLS nearest neighbours.
import numpy as np

from translationese import (EmbeddingMatrix, RefineConfig, procrustes,
                            refine, seed_identical_strings)
from translationese.alignment import RefineReport

rng = np.random.default_rng(1)
n, dim = 2000, 40
tgt_vecs = rng.standard_normal((n, dim))
q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
src_vecs = tgt_vecs @ q.T + 0.02 * rng.standard_normal((n, dim))

# 30 shared "numbers", the rest spelled differently
tgt_tokens = [str(i) if i < 30 else f"en{i}" for i in range(n)]
src_tokens = [str(i) if i < 30 else f"xx{i}" for i in range(n)]
src = EmbeddingMatrix.from_vectors(src_tokens, src_vecs)
tgt = EmbeddingMatrix.from_vectors(tgt_tokens, tgt_vecs)

seed = seed_identical_strings(src, tgt)
print("seed pairs:", len(seed), seed.pairs[:3])

w0 = procrustes(src, tgt, seed)
print("orthogonality error: %.1e" % w0.orthogonality_error())


def accuracy(w):
    mapped = w.apply(src.vectors)
    return np.mean(np.argmax(mapped @ tgt.vectors.T, axis=1) == np.arange(n))


print("nearest-neighbour accuracy after the seed fit: %.3f" % accuracy(w0))

report = RefineReport()
w = refine(w0, src, tgt, RefineConfig(iterations=5), report)
print("pairs found per refinement iteration:", report.lexicon_sizes)
print("accuracy after refinement: %.3f" % accuracy(w))
print("distance to the true rotation: %.2e" % np.linalg.norm(w.matrix - q))
