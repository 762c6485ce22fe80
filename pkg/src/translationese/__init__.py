"""Unsupervised source-to-Translationese glossing.

Cross-lingual embedding alignment, bilingual dictionary induction, n-gram
language modeling and a context-aware word-by-word beam glosser, plus the
data preparation around them.
"""

__version__ = "0.1.0"

from .alignment import (LinearMap, RefineConfig, SeedLexicon, csls_score,
                        load_map, procrustes, refine, save_map,
                        seed_identical_strings)
from .decoder import GlossConfig, GlossedSentence, gloss_corpus, gloss_sentence
from .embeddings import (EmbeddingMatrix, cosine, load_embeddings,
                         save_embeddings, top_k_neighbors)
from .evaluation import bleu
from .lexicon import (BilingualLexicon, TranslationOption, build_lexicon,
                      evaluate_precision, export_lexicon, import_lexicon)
from .lm import NGramModel, load_arpa, perplexity, save_arpa, train
from .pipeline import PipelineConfig, ParallelCorpus, prepare_training_data

__all__ = [
    "EmbeddingMatrix", "load_embeddings", "save_embeddings", "cosine",
    "top_k_neighbors",
    "LinearMap", "SeedLexicon", "RefineConfig", "seed_identical_strings",
    "procrustes", "csls_score", "refine", "save_map", "load_map",
    "BilingualLexicon", "TranslationOption", "build_lexicon",
    "export_lexicon", "import_lexicon", "evaluate_precision",
    "NGramModel", "train", "save_arpa", "load_arpa", "perplexity",
    "GlossConfig", "GlossedSentence", "gloss_sentence", "gloss_corpus",
    "PipelineConfig", "ParallelCorpus", "prepare_training_data", "bleu",
]
