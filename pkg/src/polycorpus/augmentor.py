"""Code-switching augmentation (synonym random alignment).

Words of a lowercased sentence are swapped for dictionary translations in
other languages, producing pseudo-parallel pairs. All randomness comes from the
generator passed in; the batch helpers derive one keyed substream per record so
results do not depend on worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import regex

from . import rng as rngmod
from .errors import EmptyInputError, EmptyPoolError
from .ingestion import MonolingualRecord, SentencePair
from .lexicon import Lexicon, lookup

WHITESPACE = "whitespace"
PER_CHARACTER = "per_character"
PLUGIN = "plugin"

PER_SENTENCE_LANGUAGE = "per_sentence_language"
PER_WORD_LANGUAGE = "per_word_language"

TARGET_ONLY = "target_only"
FULL_PAIR = "full_pair"

CHARACTER_LANGS = frozenset({"zh", "ja", "zhtrad"})

_WORD_RE = regex.compile(r"[^\s\x1c-\x1f]+")  # same notion of space as str.split
_GRAPHEME_RE = regex.compile(r"\X")


@dataclass(frozen=True)
class Token:
    text: str
    start: int  # UTF-8 byte offset, inclusive
    end: int  # UTF-8 byte offset, exclusive


@dataclass
class SegmenterPolicy:
    modes: dict[str, str] = field(default_factory=dict)
    plugins: dict[str, Callable[[str], list[str]]] = field(default_factory=dict)

    def register(self, lang: str, segmenter: Callable[[str], list[str]]):
        self.plugins[lang] = segmenter
        self.modes[lang] = PLUGIN

    def mode_for(self, lang: str) -> str:
        if lang in self.modes:
            return self.modes[lang]
        if lang in self.plugins:
            return PLUGIN
        return PER_CHARACTER if lang in CHARACTER_LANGS else WHITESPACE


DEFAULT_POLICY = SegmenterPolicy()


def _with_byte_spans(text: str, char_spans) -> list[Token]:
    out = []
    char_pos = byte_pos = 0
    for s, e in char_spans:
        byte_pos += len(text[char_pos:s].encode("utf-8"))
        width = len(text[s:e].encode("utf-8"))
        out.append(Token(text[s:e], byte_pos, byte_pos + width))
        byte_pos += width
        char_pos = e
    return out


def segment(text: str, lang: str, policy: SegmenterPolicy | None = None) -> list[Token]:
    policy = policy or DEFAULT_POLICY
    mode = policy.mode_for(lang)
    if mode == WHITESPACE:
        spans = [m.span() for m in _WORD_RE.finditer(text)]
    elif mode == PER_CHARACTER:
        spans = [m.span() for m in _GRAPHEME_RE.finditer(text) if not m.group().isspace()]
    elif mode == PLUGIN:
        spans = []
        pos = 0
        for piece in policy.plugins[lang](text):
            if not piece or piece.isspace():
                continue
            s = text.find(piece, pos)
            if s < 0:
                raise ValueError(f"segmenter for {lang!r} returned {piece!r} not found in text")
            spans.append((s, s + len(piece)))
            pos = s + len(piece)
    else:
        raise ValueError(f"unknown segmenter mode {mode!r}")
    return _with_byte_spans(text, spans)


def rejoin(text: str, tokens: Sequence[Token], replacements: dict[int, str] | None = None) -> str:
    """Rebuild ``text`` keeping the original separators, swapping replaced tokens."""
    replacements = replacements or {}
    raw = text.encode("utf-8")
    parts = []
    pos = 0
    for i, tok in enumerate(tokens):
        parts.append(raw[pos:tok.start].decode("utf-8"))
        parts.append(replacements.get(i, tok.text))
        pos = tok.end
    parts.append(raw[pos:].decode("utf-8"))
    return "".join(parts)


@dataclass(frozen=True)
class AugmentConfig:
    replace_prob: float = 0.90
    language_pool: frozenset = frozenset()
    strategy: str = PER_SENTENCE_LANGUAGE
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.replace_prob <= 1.0:
            raise ValueError(f"replace_prob must be in [0, 1], got {self.replace_prob}")
        if self.strategy not in (PER_SENTENCE_LANGUAGE, PER_WORD_LANGUAGE):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        object.__setattr__(self, "language_pool", frozenset(self.language_pool))

    def pool_without(self, lang: str) -> list[str]:
        pool = sorted(self.language_pool - {lang})
        if not pool:
            raise EmptyPoolError(f"language pool has no language other than {lang!r}")
        return pool


@dataclass(frozen=True)
class Replacement:
    position: int
    original: str
    chosen: str
    chosen_lang: str


@dataclass(frozen=True)
class AugmentedPair:
    base: SentencePair | MonolingualRecord
    switched_text: str
    loss_scope: str
    replacement_log: tuple[Replacement, ...]
    eligible_count: int

    @property
    def src_lang(self) -> str:
        return self.base.src_lang if isinstance(self.base, SentencePair) else self.base.lang

    @property
    def tgt_lang(self) -> str:
        return self.base.tgt_lang if isinstance(self.base, SentencePair) else self.base.lang

    @property
    def src_text(self) -> str:
        return self.switched_text

    @property
    def tgt_text(self) -> str:
        return self.base.tgt_text if isinstance(self.base, SentencePair) else self.base.text

    def to_json(self) -> dict:
        return {
            "src_lang": self.src_lang,
            "tgt_lang": self.tgt_lang,
            "src_text": self.src_text,
            "tgt_text": self.tgt_text,
            "loss_scope": self.loss_scope,
            "replacements": [
                {"position": r.position, "original": r.original, "chosen": r.chosen, "lang": r.chosen_lang}
                for r in self.replacement_log
            ],
            "origin": "synthetic",
        }


def _switch(text, lang, lex, cfg, rng, pick_lang, policy):
    lowered = text.lower()
    tokens = segment(lowered, lang, policy)
    chosen = {}
    log = []
    eligible = 0
    for i, tok in enumerate(tokens):
        target = pick_lang()
        syns = lookup(lex, tok.text, lang, target)
        if not syns:
            continue
        eligible += 1
        if rng.random() < cfg.replace_prob:
            word = rngmod.choice(rng, syns)
            chosen[i] = word
            log.append(Replacement(i, tok.text, word, target))
    return rejoin(lowered, tokens, chosen), tuple(log), eligible


def code_switch_parallel(pair: SentencePair, lex: Lexicon, cfg: AugmentConfig,
                         rng: np.random.Generator,
                         policy: SegmenterPolicy | None = None) -> AugmentedPair:
    """Switch the source side into one randomly drawn language."""
    if cfg.strategy != PER_SENTENCE_LANGUAGE:
        raise ValueError("code_switch_parallel requires strategy=per_sentence_language")
    target = rngmod.choice(rng, cfg.pool_without(pair.src_lang))
    text, log, eligible = _switch(pair.src_text, pair.src_lang, lex, cfg, rng,
                                  lambda: target, policy)
    return AugmentedPair(pair, text, TARGET_ONLY, log, eligible)


def code_switch_monolingual(rec: MonolingualRecord, lex: Lexicon, cfg: AugmentConfig,
                            rng: np.random.Generator,
                            policy: SegmenterPolicy | None = None) -> AugmentedPair:
    """Switch every word into an independently drawn language."""
    if cfg.strategy != PER_WORD_LANGUAGE:
        raise ValueError("code_switch_monolingual requires strategy=per_word_language")
    pool = cfg.pool_without(rec.lang)
    text, log, eligible = _switch(rec.text, rec.lang, lex, cfg, rng,
                                  lambda: rngmod.choice(rng, pool), policy)
    return AugmentedPair(rec, text, FULL_PAIR, log, eligible)


def estimate_replacement_rate(pairs: Iterable[AugmentedPair]) -> float:
    replaced = eligible = seen = 0
    for p in pairs:
        seen += 1
        replaced += len(p.replacement_log)
        eligible += p.eligible_count
    if not seen or not eligible:
        raise EmptyInputError("no eligible positions to estimate a replacement rate from")
    return replaced / eligible


def augment_batch(items: Sequence, lex: Lexicon, cfg: AugmentConfig, workers: int = 1,
                  policy: SegmenterPolicy | None = None, stream: str = "augment") -> list[AugmentedPair]:
    """Augment many records; record ``i`` always uses substream ``(seed, stream, i)``."""
    fn = code_switch_parallel if cfg.strategy == PER_SENTENCE_LANGUAGE else code_switch_monolingual

    def one(i):
        return fn(items[i], lex, cfg, rngmod.substream(cfg.seed, stream, i), policy)

    if workers <= 1:
        return [one(i) for i in range(len(items))]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(one, range(len(items))))


def dump_jsonl(pairs: Iterable[AugmentedPair], f):
    for p in pairs:
        f.write(json.dumps(p.to_json(), ensure_ascii=False) + "\n")
