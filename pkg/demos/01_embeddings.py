# Loading word vectors and asking for neighbours.
#
# Embedding files are the plain-text .vec layout: a "count dim" header and
# then one "token v1 ... vd" line per word, most frequent first.
import tempfile
from pathlib import Path

import numpy as np

from translationese import load_embeddings, top_k_neighbors
from translationese.embeddings import cosine

rng = np.random.default_rng(0)
words = ["river", "stream", "bank", "money", "cash", "shore"]
# two loose topics: water and finance
water, finance = rng.standard_normal(8), rng.standard_normal(8)
topic = [water, water, finance, finance, finance, water]
vecs = np.array([2 * t + rng.standard_normal(8) for t in topic])

tmp = Path(tempfile.mkdtemp())
with open(tmp / "toy.vec", "w") as f:
    f.write(f"{len(words) + 1} 8\n")
    for w, v in zip(words, vecs):
        f.write(w + " " + " ".join(f"{x:.5f}" for x in v) + "\n")
    f.write("broken line\n")               # skipped, and counted

emb = load_embeddings(tmp / "toy.vec")
print("tokens:", emb.tokens, "skipped lines:", emb.skipped)
print("row norms:", np.round(np.linalg.norm(emb.vectors, axis=1), 6))

print("cos(river, stream) = %.3f" % cosine(emb["river"], emb["stream"]))
print("cos(river, money)  = %.3f" % cosine(emb["river"], emb["money"]))

# neighbours of "bank": the query itself comes first
for tok, score in top_k_neighbors(emb["bank"], emb, 3):
    print(f"  {tok:8s} {score:+.3f}")

# only the first rows are kept with a vocabulary cap
print("capped:", load_embeddings(tmp / "toy.vec", vocab_limit=3).tokens)
