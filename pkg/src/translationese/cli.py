"""Command-line interface.

Every artifact-producing subcommand writes ``<out>.manifest`` next to its
output, recording the fully resolved configuration and content digests of
inputs and outputs.  Failures exit nonzero with a single stderr line
``error:<category>: <message>``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .alignment import (AlignmentError, RefineReport, load_map,
                        load_seed_lexicon, procrustes, refine, save_map,
                        seed_identical_strings)
from .cipher import end_to_end_cipher_test, synthetic_embeddings
from .decoder import GlossStats, gloss_corpus
from .embeddings import EmbeddingFormatError, load_embeddings
from .evaluation import bleu
from .lexicon import (LexiconFormatError, build_lexicon, evaluate_precision,
                      export_lexicon, import_lexicon)
from .lm import ArpaFormatError, load_arpa, read_corpus, save_arpa, train
from .pipeline import (ParallelCorpus, PipelineConfig, PipelineError,
                       prepare_training_data, write_manifest)

logger = logging.getLogger("translationese")

EXIT_CODES = {"internal": 1, "io": 3, "format": 4, "config": 5,
              "alignment": 6}


class CommandError(Exception):
    def __init__(self, category, message):
        super().__init__(message)
        self.category = category


# flag dest -> PipelineConfig key
_CONFIG_FLAGS = {
    "vocab_limit", "refine_iterations", "csls_k", "dict_pool", "mutual_only",
    "k", "metric", "order", "smoothing", "alpha", "beta", "stack_size",
    "recombine", "score_end_marker", "max_len", "dev_size", "shuffle_seed",
    "workers", "src_emb", "tgt_emb", "seed_dict", "map", "lexicon", "lm",
}


def _resolve(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config \
        else PipelineConfig()
    given = {k: v for k, v in vars(args).items()
             if k in _CONFIG_FLAGS and v is not None}
    return cfg.update(given)


def _require(value, flag):
    if value is None:
        raise CommandError("config", f"{flag} is required")
    return value


def _params(cfg: PipelineConfig, **extra):
    out = {k: v for k, v in cfg.items() if v is not None}
    out.update({k: v for k, v in extra.items() if v is not None})
    return out


def cmd_map(args, cfg):
    src_path = _require(cfg.src_emb, "--src-emb")
    tgt_path = _require(cfg.tgt_emb, "--tgt-emb")
    out = _require(args.out, "--out")
    src = load_embeddings(src_path, cfg.vocab_limit)
    tgt = load_embeddings(tgt_path, cfg.vocab_limit)
    if cfg.seed_dict:
        seed = load_seed_lexicon(cfg.seed_dict, src, tgt)
    else:
        seed = seed_identical_strings(src, tgt)
    rcfg = cfg.refine_config()
    report = RefineReport()
    w = refine(procrustes(src, tgt, seed), src, tgt, rcfg, report)
    save_map(w, out)
    write_manifest(out, "map", _params(
        cfg, seed_pairs=len(seed), seed_provenance=seed.provenance,
        refine_sizes=",".join(map(str, report.lexicon_sizes))),
        inputs={"src_emb": src_path, "tgt_emb": tgt_path,
                "seed_dict": cfg.seed_dict},
        outputs={"map": out})
    print(f"map written to {out} ({len(seed)} seed pairs, refinement "
          f"lexicon sizes {report.lexicon_sizes})")


def cmd_dict(args, cfg):
    src_path = _require(cfg.src_emb, "--src-emb")
    tgt_path = _require(cfg.tgt_emb, "--tgt-emb")
    map_path = _require(cfg.map, "--map")
    out = _require(args.out, "--out")
    src = load_embeddings(src_path, cfg.vocab_limit)
    tgt = load_embeddings(tgt_path, cfg.vocab_limit)
    lex = build_lexicon(load_map(map_path), src, tgt, k=cfg.k,
                        metric=cfg.metric, csls_k=cfg.csls_k,
                        workers=cfg.workers)
    export_lexicon(lex, out)
    write_manifest(out, "dict", _params(cfg),
                   inputs={"src_emb": src_path, "tgt_emb": tgt_path,
                           "map": map_path},
                   outputs={"lexicon": out})
    print(f"lexicon with {len(lex)} entries written to {out}")


def cmd_lm_train(args, cfg):
    corpus = _require(args.corpus, "--corpus")
    out = _require(args.out, "--out")
    if not Path(corpus).is_file():
        raise FileNotFoundError(f"no such file: {corpus}")
    model = train(read_corpus(corpus), order=cfg.order,
                  smoothing=cfg.smoothing, add_k=args.add_k)
    save_arpa(model, out)
    write_manifest(out, "lm-train", _params(cfg, add_k=args.add_k),
                   inputs={"corpus": corpus}, outputs={"lm": out})
    print(f"{cfg.order}-gram model ({model.counts()}) written to {out}")


def _read_lines(path):
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f]


def cmd_gloss(args, cfg):
    lex_path = _require(cfg.lexicon, "--lexicon")
    lm_path = _require(cfg.lm, "--lm")
    inp = _require(args.input, "--input")
    out = _require(args.out, "--out")
    lex = import_lexicon(lex_path)
    model = load_arpa(lm_path)
    sentences = _read_lines(inp)
    stats = GlossStats()
    with open(out, "w", encoding="utf-8", newline="\n") as f_out:
        side = open(args.scores_out, "w", encoding="utf-8", newline="\n") \
            if args.scores_out else None
        try:
            for g in gloss_corpus(sentences, lex, model, cfg.gloss_config(),
                                  workers=cfg.workers, stats=stats):
                f_out.write(str(g) + "\n")
                if side:
                    flags = " ".join("1" if o else "0" for o in g.oov_flags)
                    side.write(f"{g.score:.6f}\t{flags}\n")
        finally:
            if side:
                side.close()
    write_manifest(out, "gloss", _params(cfg),
                   inputs={"lexicon": lex_path, "lm": lm_path, "input": inp},
                   outputs={"glossed": out, "scores": args.scores_out})
    logger.info("%.1f sentences/s", stats.sentences_per_second)
    print(f"glossed {stats.sentences} sentences, OOV rate "
          f"{stats.oov_rate:.4f}")


def cmd_prepare(args, cfg):
    lm_path = _require(cfg.lm, "--lm")
    out = Path(_require(args.out, "--out"))
    if not args.pair:
        raise CommandError("config", "at least one --pair is required")
    model = load_arpa(lm_path)
    corpora, lexicons, inputs = [], {}, {"lm": lm_path}
    for lang, src, tgt, lex in args.pair:
        corpora.append(ParallelCorpus.from_files(lang, src, tgt))
        lexicons[lang] = import_lexicon(lex)
        inputs.update({f"{lang}.src": src, f"{lang}.tgt": tgt,
                       f"{lang}.lexicon": lex})
    summary = prepare_training_data(corpora, lexicons, model, cfg, out)
    langs = {f"{lang}.kept": v["kept"]
             for lang, v in summary["languages"].items()}
    write_manifest(out / "prepare", "prepare",
                   _params(cfg, train_pairs=summary["train"],
                           dev_pairs=summary["dev"], **langs),
                   inputs=inputs, outputs=summary["paths"])
    print(f"wrote {summary['train']} training and {summary['dev']} dev "
          f"pairs to {out}")


def cmd_bleu(args, cfg):
    hyp = _read_lines(_require(args.hyp, "--hyp"))
    ref = _read_lines(_require(args.ref, "--ref"))
    score = bleu(hyp, ref)
    line = f"BLEU = {score:.2f}"
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")
        write_manifest(args.out, "bleu", _params(cfg),
                       inputs={"hyp": args.hyp, "ref": args.ref},
                       outputs={"score": args.out})
    print(line)


def cmd_dict_eval(args, cfg):
    lex = import_lexicon(_require(cfg.lexicon, "--lexicon"))
    gold_path = _require(args.gold, "--gold")
    gold = []
    with open(gold_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise LexiconFormatError(
                    f"{gold_path}:{lineno}: expected 'source target'")
            gold.append((parts[0], parts[1]))
    res = evaluate_precision(lex, gold)
    text = "\n".join(f"{k}={res[k]:.6f}"
                     for k in ("p_at_1", "p_at_5", "coverage"))
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        write_manifest(args.out, "dict-eval", _params(cfg),
                       inputs={"lexicon": cfg.lexicon, "gold": gold_path},
                       outputs={"report": args.out})
    print(text)


def cmd_cipher_test(args, cfg):
    corpus = _require(args.corpus, "--corpus")
    sentences = [s for s in _read_lines(corpus) if s]
    seed = cfg.shuffle_seed
    if cfg.tgt_emb:
        tgt = load_embeddings(cfg.tgt_emb, cfg.vocab_limit)
    else:
        tgt = synthetic_embeddings(sentences, dim=args.emb_dim, seed=seed)
    report = end_to_end_cipher_test(
        sentences, tgt, seed=seed, noise=args.noise, heldout=args.heldout,
        k=cfg.k, order=cfg.order, refine_cfg=cfg.refine_config(),
        gloss_cfg=cfg.gloss_config(), workers=cfg.workers)
    text = "\n".join(report.lines())
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        write_manifest(args.out, "cipher-test",
                       _params(cfg, noise=args.noise, heldout=args.heldout,
                               emb_dim=None if cfg.tgt_emb else args.emb_dim),
                       inputs={"corpus": corpus, "tgt_emb": cfg.tgt_emb},
                       outputs={"report": args.out})
    print(text)
    print(f"seconds={report.seconds:.1f}")


def _gloss_flags(p):
    p.add_argument("--alpha", type=float, help="LM weight (default 0.01)")
    p.add_argument("--beta", type=float,
                   help="similarity weight (default 0.5)")
    p.add_argument("--stack-size", type=int, help="beam size (default 100)")
    p.add_argument("--no-recombine", dest="recombine", action="store_const",
                   const=False, help="disable hypothesis recombination")
    p.add_argument("--no-end-marker", dest="score_end_marker",
                   action="store_const", const=False,
                   help="do not score </s> at sentence end")


def _embedding_flags(p):
    p.add_argument("--src-emb", help="source embeddings (.vec text)")
    p.add_argument("--tgt-emb", help="target embeddings (.vec text)")
    p.add_argument("--vocab-limit", type=int,
                   help="rows kept per embedding file (default 100000)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--seed", dest="shuffle_seed", type=int,
                        help="random seed (default 0)")
    common.add_argument("--workers", type=int, help="parallel workers")
    common.add_argument("--out", help="output path")
    common.add_argument("--log-level", default="WARNING")

    parser = argparse.ArgumentParser(
        prog="translationese",
        description="Unsupervised word-by-word glossing toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", parents=[common],
                       help="learn the source-to-target orthogonal map")
    _embedding_flags(p)
    p.add_argument("--seed-dict", help="seed lexicon TSV (default: "
                   "identical strings)")
    p.add_argument("--refine-iterations", type=int)
    p.add_argument("--csls-k", type=int)
    p.add_argument("--dict-pool", type=int)
    p.add_argument("--no-mutual", dest="mutual_only", action="store_const",
                   const=False)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("dict", parents=[common],
                       help="extract the k-NN bilingual lexicon")
    _embedding_flags(p)
    p.add_argument("--map", help="map file from 'map'")
    p.add_argument("--k", type=int, help="options per word (default 20)")
    p.add_argument("--metric", choices=["cosine", "csls"])
    p.add_argument("--csls-k", type=int)
    p.set_defaults(func=cmd_dict)

    p = sub.add_parser("lm-train", parents=[common],
                       help="train an n-gram LM and write ARPA")
    p.add_argument("--corpus", help="one tokenized sentence per line")
    p.add_argument("--order", type=int, help="n-gram order (default 5)")
    p.add_argument("--smoothing", choices=["kneser-ney", "add-k"])
    p.add_argument("--add-k", type=float, default=1.0)
    p.set_defaults(func=cmd_lm_train)

    p = sub.add_parser("gloss", parents=[common],
                       help="gloss source text into Translationese")
    p.add_argument("--lexicon")
    p.add_argument("--lm", help="ARPA language model")
    p.add_argument("--input", help="source text, one sentence per line")
    p.add_argument("--scores-out", help="side file: score<TAB>oov flags")
    _gloss_flags(p)
    p.set_defaults(func=cmd_gloss)

    p = sub.add_parser("prepare", parents=[common],
                       help="build Translationese/target training files")
    p.add_argument("--lm", help="ARPA language model")
    p.add_argument("--pair", nargs=4, action="append",
                   metavar=("LANG", "SRC", "TGT", "LEXICON"))
    p.add_argument("--max-len", type=int)
    p.add_argument("--dev-size", type=int)
    _gloss_flags(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("bleu", parents=[common], help="corpus BLEU-4")
    p.add_argument("--hyp")
    p.add_argument("--ref")
    p.set_defaults(func=cmd_bleu)

    p = sub.add_parser("dict-eval", parents=[common],
                       help="lexicon precision against a gold dictionary")
    p.add_argument("--lexicon")
    p.add_argument("--gold", help="'source target' pairs, one per line")
    p.set_defaults(func=cmd_dict_eval)

    p = sub.add_parser("cipher-test", parents=[common],
                       help="end-to-end check on a ciphered corpus")
    p.add_argument("--corpus")
    p.add_argument("--tgt-emb", help="target embeddings; random ones are "
                   "generated when omitted")
    p.add_argument("--vocab-limit", type=int)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--heldout", type=int, default=200)
    p.add_argument("--emb-dim", type=int, default=64)
    p.add_argument("--k", type=int)
    p.add_argument("--order", type=int)
    p.set_defaults(func=cmd_cipher_test)
    return parser


def _category(exc) -> str:
    if isinstance(exc, CommandError):
        return exc.category
    if isinstance(exc, OSError):
        return "io"
    if isinstance(exc, (EmbeddingFormatError, ArpaFormatError,
                        LexiconFormatError)):
        return "format"
    if isinstance(exc, AlignmentError):
        return "alignment"
    if isinstance(exc, (PipelineError, ValueError)):
        return "config"
    return "internal"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        args.func(args, cfg)
    except Exception as exc:  # noqa: BLE001 - mapped to an exit category
        cat = _category(exc)
        msg = str(exc).replace("\n", " ")
        print(f"error:{cat}: {msg}", file=sys.stderr)
        if cat == "internal":
            logger.debug("traceback", exc_info=True)
        return EXIT_CODES[cat]
    return 0


if __name__ == "__main__":
    sys.exit(main())
