# Preparing Translationese/target training files, then scoring with BLEU.
import tempfile
from pathlib import Path

from translationese import (BilingualLexicon, ParallelCorpus,
                            PipelineConfig, bleu, prepare_training_data,
                            train)
from translationese.lexicon import TranslationOption as Opt
from translationese.pipeline import shuffle

# reproducible shuffling: Fisher-Yates driven by SplitMix64
print(shuffle(range(10), seed=42))
print(shuffle(range(10), seed=42))

fr = ParallelCorpus("fr", [s.split() for s in
                           ["le chat", "le chien", "un chat noir",
                            "le " * 101]],               # too long: dropped
                    [s.split() for s in
                     ["the cat", "the dog", "a black cat", "the"]])
de = ParallelCorpus("de", [s.split() for s in ["die katze", "der hund"]],
                    [s.split() for s in ["the cat", "the dog"]])
lexicons = {
    "fr": BilingualLexicon({"le": [Opt("the", .9)], "chat": [Opt("cat", .9)],
                            "chien": [Opt("dog", .9)],
                            "un": [Opt("a", .9)],
                            "noir": [Opt("black", .9)]}),
    "de": BilingualLexicon({"die": [Opt("the", .9)],
                            "der": [Opt("the", .9)],
                            "katze": [Opt("cat", .9)],
                            "hund": [Opt("dog", .9)]}),
}
lm = train(["the cat", "the dog", "a black cat"], order=2)

out = Path(tempfile.mkdtemp())
cfg = PipelineConfig(dev_size=2, shuffle_seed=7)
summary = prepare_training_data([fr, de], lexicons, lm, cfg, out)
print(summary["languages"])
for name in ("train.src", "train.tgt", "dev.src", "dev.tgt"):
    print(f"{name:10s}", (out / name).read_text().splitlines())

# corpus BLEU-4 with brevity penalty; short toy lines share few 4-grams,
# so score a small hand-checkable pair instead
hyps = ["the cat sat on the mat", "a b c d"]
refs = ["the cat is on the mat", "a b c d e"]
print("BLEU:", bleu(hyps, refs))                      # 48.77
print("identical:", bleu(refs, refs), " nothing shared:", bleu(["x"], ["y"]))
