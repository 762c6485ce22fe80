"""Training-data preparation for a Translationese-to-target translator.

Each source-language parallel corpus is length-filtered and its source
side glossed; all languages are then pooled, shuffled reproducibly, and a
development set is split off.
"""
from __future__ import annotations

import dataclasses
import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

from .alignment import RefineConfig
from .decoder import GlossConfig, GlossStats, gloss_corpus
from .lexicon import BilingualLexicon
from .lm import NGramModel

__all__ = [
    "PipelineError",
    "SplitMix64",
    "shuffle",
    "PipelineConfig",
    "ParallelCorpus",
    "prepare_training_data",
    "file_digest",
    "write_manifest",
]

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


class PipelineError(ValueError):
    pass


class SplitMix64:
    """The SplitMix64 generator (Steele, Lea & Flood), 64-bit outputs."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def shuffle(items, seed: int) -> list:
    """Fisher-Yates shuffle of a copy of ``items``.

    For ``i`` from ``n - 1`` down to 1, swap ``i`` with
    ``j = next() % (i + 1)``.  Fixed so that other implementations can
    reproduce the permutation exactly.
    """
    out = list(items)
    rng = SplitMix64(seed)
    for i in range(len(out) - 1, 0, -1):
        j = rng.next() % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline, with the standard glossing defaults."""

    src_emb: str | None = None
    tgt_emb: str | None = None
    seed_dict: str | None = None
    map: str | None = None
    lexicon: str | None = None
    lm: str | None = None
    vocab_limit: int = 100_000
    refine_iterations: int = 5
    csls_k: int = 10
    dict_pool: int = 10_000
    mutual_only: bool = True
    k: int = 20
    metric: str = "cosine"
    order: int = 5
    smoothing: str = "kneser-ney"
    alpha: float = 0.01
    beta: float = 0.5
    stack_size: int = 100
    recombine: bool = True
    score_end_marker: bool = True
    max_len: int = 100
    dev_size: int = 3000
    shuffle_seed: int = 0
    workers: int = 1

    def gloss_config(self) -> GlossConfig:
        return GlossConfig(alpha=self.alpha, beta=self.beta,
                           stack_size=self.stack_size,
                           recombine=self.recombine,
                           score_end_marker=self.score_end_marker)

    def refine_config(self) -> RefineConfig:
        return RefineConfig(iterations=self.refine_iterations,
                            csls_k=self.csls_k, dict_pool=self.dict_pool,
                            mutual_only=self.mutual_only)

    def update(self, values: dict) -> "PipelineConfig":
        """Return a copy with string or typed ``values`` applied."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        changes = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in fields:
                raise PipelineError(f"unknown config key {key!r}")
            changes[key] = _coerce(key, fields[key].default, raw)
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        """Read a flat ``key = value`` file (``#`` starts a comment)."""
        values = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise PipelineError(f"{path}:{lineno}: expected key=value")
                values[key.strip()] = value.strip()
        return cls().update(values)

    def items(self):
        return dataclasses.asdict(self).items()


def _coerce(key, default, raw):
    if not isinstance(raw, str):
        return raw
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise PipelineError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise PipelineError(f"{key}: cannot parse {raw!r}") from None
    return raw


@dataclass
class ParallelCorpus:
    lang: str
    source: list[list[str]]
    target: list[list[str]]

    def __post_init__(self):
        if len(self.source) != len(self.target):
            raise PipelineError(
                f"{self.lang}: {len(self.source)} source lines but "
                f"{len(self.target)} target lines")

    def __len__(self):
        return len(self.source)

    @classmethod
    def from_files(cls, lang, source_path, target_path) -> "ParallelCorpus":
        with open(source_path, encoding="utf-8") as f:
            src = [line.split() for line in f]
        with open(target_path, encoding="utf-8") as f:
            tgt = [line.split() for line in f]
        return cls(lang, src, tgt)

    def filter_length(self, max_len: int) -> "ParallelCorpus":
        keep = [(s, t) for s, t in zip(self.source, self.target)
                if len(s) <= max_len and len(t) <= max_len]
        return ParallelCorpus(self.lang, [s for s, _ in keep],
                              [t for _, t in keep])


def prepare_training_data(corpora, lexicons: dict[str, BilingualLexicon],
                          lm: NGramModel, cfg: PipelineConfig, out_dir,
                          workers: int | None = None) -> dict:
    """Write ``train.src``/``train.tgt``/``dev.src``/``dev.tgt``.

    Pairs with either side longer than ``cfg.max_len`` tokens are dropped,
    source sides are glossed with the language's lexicon, all languages are
    pooled in the given order, shuffled with :func:`shuffle` under
    ``cfg.shuffle_seed``, and the first ``cfg.dev_size`` pairs become the
    development set.

    Returns a summary with file paths and per-language counts.
    """
    workers = cfg.workers if workers is None else workers
    out_dir = Path(out_dir)
    gloss_cfg = cfg.gloss_config()
    pooled: list[tuple[str, str]] = []
    summary: dict = {"languages": {}}
    for corpus in corpora:
        if corpus.lang not in lexicons:
            raise PipelineError(f"no lexicon for language {corpus.lang!r}")
        kept = corpus.filter_length(cfg.max_len)
        stats = GlossStats()
        glossed = gloss_corpus(kept.source, lexicons[corpus.lang], lm,
                               gloss_cfg, workers=workers, stats=stats)
        for g, tgt in zip(glossed, kept.target):
            pooled.append((str(g), " ".join(tgt)))
        summary["languages"][corpus.lang] = {
            "pairs": len(corpus), "kept": len(kept),
            "oov_rate": stats.oov_rate}
        logger.info("%s: kept %d of %d pairs, OOV rate %.4f", corpus.lang,
                    len(kept), len(corpus), stats.oov_rate)
    if cfg.dev_size >= len(pooled):
        raise PipelineError(
            f"dev_size={cfg.dev_size} leaves no training data out of "
            f"{len(pooled)} pairs")
    pooled = shuffle(pooled, cfg.shuffle_seed)
    dev, train = pooled[:cfg.dev_size], pooled[cfg.dev_size:]
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for split, rows in (("train", train), ("dev", dev)):
        for side, col in (("src", 0), ("tgt", 1)):
            path = out_dir / f"{split}.{side}"
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                for row in rows:
                    f.write(row[col] + "\n")
            paths[f"{split}_{side}"] = path
    summary.update(paths=paths, train=len(train), dev=len(dev))
    return summary


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(artifact, command: str, params: dict,
                   inputs: dict | None = None,
                   outputs: dict | None = None) -> Path:
    """Write ``<artifact>.manifest``: flags, input and output digests.

    The content contains no timestamps, so reruns are byte-identical.
    """
    artifact = Path(artifact)
    path = artifact.parent / (artifact.name + ".manifest")
    lines = [f"command={command}"]
    lines += [f"{k}={v}" for k, v in sorted(params.items())]
    for kind, files in (("input", inputs or {}), ("output", outputs or {})):
        for name, p in sorted(files.items()):
            if p is None:
                continue
            lines.append(f"{kind}.{name}={p} sha256:{file_digest(p)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
