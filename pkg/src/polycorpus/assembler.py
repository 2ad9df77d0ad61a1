"""Per-epoch training-set construction.

For every language ``s`` the epoch contains its monolingual blocks, and for
every unordered pair ``{s, t}`` the union of both directions of natural
bitext. Pairs below the threshold are replicated ``factor`` times and topped
up with pivot-translated, code-switched synthetic pairs until the synthetic
count equals ``threshold - natural``.

Randomness is keyed, never sequential, so any worker count gives the same
epoch:

* natural copy ``k`` of pair ``(a, b)``: ``substream(seed, "dir", a, b, k)``
* English subset for ``(a, b)``: ``substream(seed, "pivot", a, b)``
* synthetic item ``i`` of ``(a, b)``: ``substream(seed, "synth", a, b, i)``
* monolingual quota sample for ``s``: ``substream(seed, "mono", s)``
* final order: ``substream(seed, "shuffle").permutation(n)``
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .augmentor import PER_SENTENCE_LANGUAGE, AugmentConfig, AugmentedPair, code_switch_parallel
from .errors import CorpusError, InsufficientPoolError, ProviderError, UnknownPairError
from .fsutil import atomic_open, sha256_file
from .ingestion import NATURAL, REPLICATED, SYNTHETIC, MonolingualRecord, SentencePair
from .lexicon import Lexicon
from .providers import TranslationProvider, checked_translate

log = logging.getLogger(__name__)

FORWARD = "forward"
BACKWARD = "backward"
RANDOM = "random"

DEFAULT_THRESHOLD = 25_000
DEFAULT_FACTOR = 3
DEFAULT_BLOCK_SIZE = 512


def pair_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass
class TrainingRecord:
    text: str
    loss_spans: tuple[tuple[int, int], ...]
    meta: dict
    tokens: tuple[int, ...] | None = None

    def __post_init__(self):
        n = len(self.text.encode("utf-8"))
        prev_end = 0
        for s, e in self.loss_spans:
            if not (prev_end <= s < e <= n):
                raise ValueError(f"bad loss span ({s}, {e}) for text of {n} bytes")
            prev_end = e

    def to_json(self) -> dict:
        out = {"text": self.text, "loss_spans": [list(s) for s in self.loss_spans], "meta": self.meta}
        if self.tokens is not None:
            out["tokens"] = list(self.tokens)
        return out

    def canonical(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True)


def _nbytes(s: str) -> int:
    return len(s.encode("utf-8"))


def make_connected_record(pair: SentencePair | AugmentedPair, direction: str = RANDOM,
                          rng: np.random.Generator | None = None, stage: int | None = None) -> TrainingRecord:
    """Join both sides with one ASCII space.

    Natural and replicated pairs get a single loss span over the whole text.
    An :class:`AugmentedPair` is always rendered switched-source first and its
    loss span covers only the target side; ``direction`` does not apply to it
    because its direction was fixed when it was synthesized.
    """
    if isinstance(pair, AugmentedPair):
        first, second = pair.switched_text, pair.tgt_text
        text = f"{first} {second}"
        start = _nbytes(first) + 1
        meta = {"src_lang": pair.src_lang, "tgt_lang": pair.tgt_lang, "direction": FORWARD,
                "origin": SYNTHETIC, "epoch_stage": stage}
        return TrainingRecord(text, ((start, _nbytes(text)),), meta)
    if direction == RANDOM:
        if rng is None:
            raise ValueError("random direction needs an rng")
        direction = FORWARD if rng.random() < 0.5 else BACKWARD
    if direction == FORWARD:
        first, second, s, t = pair.src_text, pair.tgt_text, pair.src_lang, pair.tgt_lang
    elif direction == BACKWARD:
        first, second, s, t = pair.tgt_text, pair.src_text, pair.tgt_lang, pair.src_lang
    else:
        raise ValueError(f"unknown direction {direction!r}")
    text = f"{first} {second}"
    meta = {"src_lang": s, "tgt_lang": t, "direction": direction, "origin": pair.origin, "epoch_stage": stage}
    return TrainingRecord(text, ((0, _nbytes(text)),), meta)


def block_split(rec: MonolingualRecord, tokenizer, block_size: int = DEFAULT_BLOCK_SIZE,
                stage: int | None = None) -> list[TrainingRecord]:
    """Cut a monolingual record into consecutive windows of ``block_size`` tokens.

    Token ids are kept on each record; ``text`` is the decoded window, which
    may contain U+FFFD where a window boundary splits a multi-byte character.
    """
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    ids = tokenizer.encode(rec.text)
    out = []
    for start in range(0, len(ids), block_size):
        chunk = tuple(ids[start:start + block_size])
        text = tokenizer.decode(chunk)
        meta = {"src_lang": rec.lang, "tgt_lang": None, "direction": "mono", "origin": NATURAL,
                "epoch_stage": stage, "source_id": rec.source_id}
        span = ((0, _nbytes(text)),) if text else ()
        out.append(TrainingRecord(text, span, meta, chunk))
    return out


def replicate_low_resource(pairs: Sequence[SentencePair], threshold: int = DEFAULT_THRESHOLD,
                           factor: int = DEFAULT_FACTOR) -> list[SentencePair]:
    """Repeat below-threshold data ``factor`` times; copies 2..factor are tagged replicated."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    pairs = list(pairs)
    if len(pairs) >= threshold:
        return pairs
    out = list(pairs)
    for _ in range(factor - 1):
        out.extend(p.with_origin(REPLICATED) for p in pairs)
    return out


def _translate_side(sources: list[str], lang: str, provider, stage: str) -> list[str]:
    if lang == "en":
        return list(sources)
    return checked_translate(provider, sources, "en", lang, stage=stage)


def synthesize_pivot_pairs(en_pool: Sequence[MonolingualRecord], s: str, t: str, n: int,
                           provider: TranslationProvider, lex: Lexicon, cfg: AugmentConfig,
                           rng: np.random.Generator, item_rngs=None) -> list[AugmentedPair]:
    """Translate ``n`` English sentences into ``s`` and ``t`` and code-switch the source side.

    Each item draws its direction (s->t or t->s) 50/50 before switching.
    ``rng`` selects the English subset; ``item_rngs(i)`` supplies the per-item
    generator (defaults to consuming ``rng`` sequentially).
    """
    if n <= 0:
        return []
    if len(en_pool) < n:
        raise InsufficientPoolError(f"English pool has {len(en_pool)} sentences, {n} needed for {s}-{t}")
    if cfg.strategy != PER_SENTENCE_LANGUAGE:
        cfg = AugmentConfig(cfg.replace_prob, cfg.language_pool, PER_SENTENCE_LANGUAGE, cfg.seed)
    picked = rng.permutation(len(en_pool))[:n]
    sources = [en_pool[int(i)].text for i in picked]
    side_s = _translate_side(sources, s, provider, f"en->{s}")
    side_t = _translate_side(sources, t, provider, f"en->{t}")
    out = []
    for i, (xs, xt) in enumerate(zip(side_s, side_t)):
        r = item_rngs(i) if item_rngs else rng
        try:
            if r.random() < 0.5:
                pair = SentencePair(s, t, xs, xt, SYNTHETIC)
            else:
                pair = SentencePair(t, s, xt, xs, SYNTHETIC)
        except CorpusError as exc:
            raise ProviderError(f"unusable translation: {exc}", index=i) from exc
        out.append(code_switch_parallel(pair, lex, cfg, r))
    return out


@dataclass
class DirectionStats:
    pair: tuple[str, str]
    natural_count: int = 0
    replicated_count: int = 0
    synthetic_count: int = 0


@dataclass
class EpochConfig:
    languages: list[str]
    threshold: int = DEFAULT_THRESHOLD
    factor: int = DEFAULT_FACTOR
    block_size: int = DEFAULT_BLOCK_SIZE
    replace_prob: float = 0.90
    language_pool: list[str] | None = None
    mono_quota: int | None = None
    fill_empty_pairs: bool = False
    stage: int | None = None


@dataclass
class EpochSources:
    mono: dict[str, list[MonolingualRecord]] = field(default_factory=dict)
    parallel: dict[tuple[str, str], list[SentencePair]] = field(default_factory=dict)
    en_pool: list[MonolingualRecord] = field(default_factory=list)


@dataclass
class EpochPlan:
    threshold: int
    factor: int
    mono_counts: dict[str, int]
    para_counts: dict[tuple[str, str], int]
    fill_sizes: dict[tuple[str, str], int]

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "factor": self.factor,
            "mono_counts": dict(sorted(self.mono_counts.items())),
            "para_counts": {f"{a}-{b}": n for (a, b), n in sorted(self.para_counts.items())},
            "fill_sizes": {f"{a}-{b}": n for (a, b), n in sorted(self.fill_sizes.items())},
        }


def _mono_subset(records: list[MonolingualRecord], quota: int | None, seed: int, lang: str):
    if quota is None or len(records) <= quota:
        return records
    idx = np.sort(rngmod.substream(seed, "mono", lang).permutation(len(records))[:quota])
    return [records[int(i)] for i in idx]


def _assemble_pair(a, b, natural, cfg, sources, provider, lex, seed):
    n = len(natural)
    stats = DirectionStats((a, b), natural_count=n)
    if n == 0 and not cfg.fill_empty_pairs:
        return [], stats, 0
    if n < cfg.threshold:
        expanded = replicate_low_resource(natural, cfg.threshold, cfg.factor)
        fill = cfg.threshold - n
    else:
        expanded, fill = natural, 0
    stats.replicated_count = len(expanded) - n
    records = [
        make_connected_record(p, RANDOM, rngmod.substream(seed, "dir", a, b, k), cfg.stage)
        for k, p in enumerate(expanded)
    ]
    if fill:
        pool = cfg.language_pool if cfg.language_pool is not None else cfg.languages
        aug_cfg = AugmentConfig(cfg.replace_prob, frozenset(pool), PER_SENTENCE_LANGUAGE, seed)
        try:
            synth = synthesize_pivot_pairs(
                sources.en_pool, a, b, fill, provider, lex, aug_cfg,
                rngmod.substream(seed, "pivot", a, b),
                item_rngs=lambda i: rngmod.substream(seed, "synth", a, b, i),
            )
        except ProviderError as exc:
            raise ProviderError(f"{a}-{b}: {exc}", index=exc.index) from exc
        except CorpusError as exc:
            raise type(exc)(f"{a}-{b}: {exc}") from exc
        records.extend(make_connected_record(p, stage=cfg.stage) for p in synth)
        stats.synthetic_count = len(synth)
    return records, stats, fill


def build_epoch(cfg: EpochConfig, sources: EpochSources, provider: TranslationProvider,
                lex: Lexicon, seed: int, tokenizer=None, workers: int = 1):
    """Build one epoch. Returns ``(plan, records, stats)`` with records already shuffled."""
    if tokenizer is None:
        from .vocab_lab.bpe import TokenizerModel
        tokenizer = TokenizerModel.byte_level()
    langs = list(dict.fromkeys(cfg.languages))
    lang_set = set(langs)

    records: list[TrainingRecord] = []
    mono_counts = {}
    for s in langs:
        subset = _mono_subset(sources.mono.get(s, []), cfg.mono_quota, seed, s)
        mono_counts[s] = len(subset)
        for rec in subset:
            records.extend(block_split(rec, tokenizer, cfg.block_size, cfg.stage))

    unions: dict[tuple[str, str], list[SentencePair]] = {}
    for a in sorted(lang_set):
        for b in sorted(lang_set):
            if a < b:
                unions[(a, b)] = list(sources.parallel.get((a, b), [])) + list(sources.parallel.get((b, a), []))

    def task(key):
        out = _assemble_pair(key[0], key[1], unions[key], cfg, sources, provider, lex, seed)
        log.info("pair %s-%s: natural=%d replicated=%d synthetic=%d",
                 key[0], key[1], out[1].natural_count, out[1].replicated_count, out[1].synthetic_count)
        return out

    keys = list(unions)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(task, keys))
    else:
        results = [task(k) for k in keys]

    stats, fills, counts = [], {}, {}
    for key, (recs, st, fill) in zip(keys, results):
        records.extend(recs)
        counts[key] = st.natural_count
        if recs or st.natural_count:
            stats.append(st)
        fills[key] = fill

    order = rngmod.substream(seed, "shuffle").permutation(len(records))
    shuffled = [records[int(i)] for i in order]
    plan = EpochPlan(cfg.threshold, cfg.factor, mono_counts, counts, fills)
    return plan, shuffled, stats


def write_epoch(out_dir, records: Sequence[TrainingRecord], plan: EpochPlan,
                stats: Sequence[DirectionStats], shard_size: int = 10_000, extra: dict | None = None) -> dict:
    """Write sharded JSONL plus ``manifest.json``; returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    shards = []
    for n, start in enumerate(range(0, max(len(records), 1), shard_size)):
        chunk = records[start:start + shard_size]
        name = f"shard-{n:05d}.jsonl"
        with atomic_open(out_dir / name) as f:
            for rec in chunk:
                f.write(rec.canonical() + "\n")
        shards.append({"path": name, "sha256": sha256_file(out_dir / name), "records": len(chunk)})
    manifest = {
        "shards": shards,
        "plan": plan.to_json(),
        "stats": [{**asdict(s), "pair": f"{s.pair[0]}-{s.pair[1]}"} for s in stats],
    }
    if extra:
        manifest.update(extra)
    with atomic_open(out_dir / "manifest.json") as f:
        json.dump(manifest, f, ensure_ascii=False, indent=2, sort_keys=True)
    return manifest


# ---------------------------------------------------------------- stage quotas

STAGE_DEFAULTS = {
    1: {"pair_quota": 50_000, "mono_quota": 400_000},
    2: {"pair_quota": 50_000, "mono_quota": 200_000},
    3: {"pair_quota": 350_000, "pair_quota_under": 700_000, "mono_quota": 30_000, "mono_quota_under": 15_000},
}


@dataclass
class StageConfig:
    stage: int
    pair_quota: int
    mono_quota: int
    pair_quota_under: int | None = None
    mono_quota_under: int | None = None
    synthetic_ratio: float = 0.0
    copies: int = 1
    underperforming: frozenset = frozenset()

    def __post_init__(self):
        if self.stage not in (1, 2, 3):
            raise ValueError(f"stage must be 1, 2 or 3, got {self.stage}")
        self.underperforming = frozenset(pair_key(*p) for p in self.underperforming)

    @classmethod
    def for_stage(cls, stage: int, underperforming=()) -> "StageConfig":
        d = STAGE_DEFAULTS.get(stage)
        if d is None:
            raise ValueError(f"stage must be 1, 2 or 3, got {stage}")
        copies = {1: 3, 2: 2, 3: 1}[stage]
        ratio = 1.0 if stage == 2 else 0.0
        return cls(stage, d["pair_quota"], d["mono_quota"], d.get("pair_quota_under"),
                   d.get("mono_quota_under"), ratio, copies, frozenset(underperforming))


@dataclass(frozen=True)
class PairQuota:
    parallel_quota: int
    natural: int
    replicated: int
    synthetic: int

    @property
    def total(self) -> int:
        return self.natural + self.replicated + self.synthetic


@dataclass
class StagePlan:
    stage: int
    pair_quotas: dict[tuple[str, str], PairQuota]
    mono_quotas: dict[str, int]


def stage_sample(stats: Sequence[DirectionStats], stage: StageConfig, rng=None) -> StagePlan:
    """Per-pair and per-language sampling quotas for one pretraining stage.

    ``rng`` is accepted for interface symmetry; the quotas themselves are
    deterministic. Use :func:`realize_quota` to draw concrete items.
    """
    known = {pair_key(*s.pair) for s in stats}
    unknown = stage.underperforming - known
    if unknown:
        raise UnknownPairError(f"underperforming pairs not in stats: {sorted(unknown)}")
    under_langs = {l for p in stage.underperforming for l in p}
    quotas = {}
    langs = set()
    for s in stats:
        key = pair_key(*s.pair)
        langs.update(key)
        avail = s.natural_count
        if stage.stage == 3:
            q = stage.pair_quota_under if key in stage.underperforming else stage.pair_quota
            quotas[key] = PairQuota(q, min(avail, q), 0, 0)
            continue
        q = stage.pair_quota
        natural = min(avail, q)
        if avail < q:
            replicated = natural * (stage.copies - 1)
            synthetic = int(round(natural * stage.synthetic_ratio))
        else:
            replicated = synthetic = 0
        quotas[key] = PairQuota(q, natural, replicated, synthetic)
    if stage.stage == 3:
        mono = {l: (stage.mono_quota_under if l in under_langs else stage.mono_quota) for l in sorted(langs)}
    else:
        mono = {l: stage.mono_quota for l in sorted(langs)}
    return StagePlan(stage.stage, quotas, mono)


def realize_quota(items: Sequence, count: int, rng: np.random.Generator) -> list:
    """Seeded sample of ``count`` items without replacement (all items if fewer)."""
    if count >= len(items):
        return list(items)
    idx = np.sort(rng.permutation(len(items))[:count])
    return [items[int(i)] for i in idx]
