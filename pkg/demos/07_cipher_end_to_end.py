# The whole chain on a language whose answer key we know.
#
# A synthetic target corpus gets random embeddings; a "source language" is
# made by relabelling every alphabetic word into Cyrillic-looking strings
# and copying the vectors.  Numbers and punctuation keep their spelling and
# provide the seed dictionary.  Mapping, refinement, dictionary induction
# and glossing should then recover the original text.
from translationese.cipher import (end_to_end_cipher_test, make_cipher,
                                   synthetic_corpus, synthetic_embeddings)

sents = synthetic_corpus(20_000, seed=0, vocab_size=800, n_classes=20)
print("sample sentence:", " ".join(sents[0]))
cipher = make_cipher([t for s in sents for t in s], seed=0)
print("ciphered:       ", " ".join(cipher.get(t, t) for t in sents[0]))

tgt = synthetic_embeddings(sents, dim=48, seed=0)
for noise in (0.0, 0.05):
    rep = end_to_end_cipher_test(sents, tgt, seed=0, noise=noise,
                                 heldout=50, order=4)
    print(f"\nnoise={noise}: {rep.seconds:.1f}s")
    for line in rep.lines():
        print("  " + line)
