# An interpolated Kneser-Ney n-gram model with ARPA input/output.
import tempfile
from pathlib import Path

from translationese import load_arpa, perplexity, save_arpa, train
from translationese.cipher import synthetic_corpus

# the smallest interesting corpus
tiny = train(["a b a b"], order=2)
for ctx, w in ([["a"], "b"], [["b"], "a"], [["a"], "</s>"], [[], "a"]):
    print(f"P({w} | {' '.join(ctx) or '-'}) = {10 ** tiny.logprob(w, ctx):.4f}")

# every conditional distribution sums to one
vocab = [w for w in tiny.vocabulary if w != "<s>"]
print("sum over words after 'a':",
      sum(10 ** tiny.logprob(w, ["a"]) for w in vocab))

# the synthetic generator is a first-order (class bigram) process, so
# orders above 2 have nothing more to learn and only spread mass thinner
sents = synthetic_corpus(30_000, seed=4, vocab_size=400, n_classes=12)
train_part, test_part = sents[100:], sents[:100]
for order in (1, 2, 3, 5):
    model = train(train_part, order=order)
    print(f"order {order}: held-out perplexity "
          f"{perplexity(model, test_part):.1f}")

path = Path(tempfile.mkdtemp()) / "lm.arpa"
save_arpa(model, path)
print(path.read_text().splitlines()[:8])
back = load_arpa(path)
print("reloaded counts:", back.counts())
