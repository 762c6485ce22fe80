# Word-by-word glossing with a language model choosing among options.
#
# Each source word has several dictionary translations.  The decoder keeps
# the 100 best partial glosses and scores each choice as
#   alpha * log10 P_LM(word | previous words) + beta * similarity.
from translationese import (BilingualLexicon, GlossConfig, gloss_sentence,
                            train)
from translationese.lexicon import TranslationOption as Opt

lm = train(["the river shore was green", "we sat on the river shore",
            "she put money in the bank", "the bank lent money",
            "money from the bank", "a shore near the river"] * 5, order=3)

lex = BilingualLexicon({
    "le": [Opt("the", 0.9)],
    "fleuve": [Opt("river", 0.8), Opt("stream", 0.7)],
    "argent": [Opt("money", 0.8), Opt("silver", 0.75)],
    # equally similar: only context can decide
    "rive": [Opt("bank", 0.6), Opt("shore", 0.6)],
}, k=20)

for src in ("le fleuve rive", "argent le rive", "le fleuve zxqv rive"):
    out = gloss_sentence(src.split(), lex, lm)
    print(f"{src:22s} -> {out}   score {out.score:.3f} oov {out.oov_flags}")

# without the language model the first-listed option always wins
flat = GlossConfig(alpha=0.0)
print("alpha=0:", gloss_sentence("le fleuve rive".split(), lex, lm, flat))
