# Inducing a bilingual dictionary: k nearest target words per source word.
import tempfile
from pathlib import Path

import numpy as np

from translationese import (EmbeddingMatrix, LinearMap, build_lexicon,
                            evaluate_precision, export_lexicon,
                            import_lexicon)

rng = np.random.default_rng(2)
n, dim = 500, 30
tgt = EmbeddingMatrix.from_vectors([f"t{i}" for i in range(n)],
                                   rng.standard_normal((n, dim)))
# a noisy copy stands in for an already aligned source space
src = EmbeddingMatrix.from_vectors(
    [f"s{i}" for i in range(n)],
    tgt.vectors + 0.2 * rng.standard_normal((n, dim)))
gold = [(f"s{i}", f"t{i}") for i in range(n)]
ident = LinearMap.identity(dim)

for metric in ("cosine", "csls"):
    lex = build_lexicon(ident, src, tgt, k=5, metric=metric)
    print(metric, evaluate_precision(lex, gold))

# every entry keeps the cosine similarity, whatever ranked it
print("s0 ->", [(o.target_token, round(o.similarity, 3)) for o in lex["s0"]])

path = Path(tempfile.mkdtemp()) / "lex.tsv"
export_lexicon(lex, path)
print(path.read_text().splitlines()[:3])
print("re-imported entries:", len(import_lexicon(path)))
