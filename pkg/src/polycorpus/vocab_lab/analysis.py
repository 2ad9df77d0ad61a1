"""Tokenizer economics: fertility, candidate selection and vocabulary extension."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import DuplicateTokenError, EmptyInputError, InsufficientCandidatesError, ShapeMismatchError
from ..ingestion import EmbeddingMatrix, MonolingualRecord
from .bpe import TokenizerModel

CHARACTER_UNIT_LANGS = frozenset({"zh", "ja", "zhtrad"})


@dataclass(frozen=True)
class FertilityReport:
    lang: str
    token_count: int
    base_unit_count: int

    @property
    def fertility(self) -> float:
        return self.token_count / self.base_unit_count


def base_units(text: str, lang: str) -> int:
    if lang in CHARACTER_UNIT_LANGS:
        return sum(1 for ch in text if not ch.isspace())
    return len(text.split())


def fertility(tok, corpus: Iterable[MonolingualRecord], lang: str) -> FertilityReport:
    """Tokens per base unit (word, or character for zh/ja).

    Each whitespace-delimited chunk is tokenized separately, so separators are
    never counted as tokens. ``tok`` only needs an ``encode(str) -> list``.
    """
    tokens = units = 0
    for rec in corpus:
        text = rec.text if isinstance(rec, MonolingualRecord) else str(rec)
        units += base_units(text, lang)
        tokens += sum(len(tok.encode(w)) for w in text.split())
    if units == 0:
        raise EmptyInputError(f"no base units in corpus for {lang!r}")
    return FertilityReport(lang, tokens, units)


def derive_candidates(corpus: Iterable[MonolingualRecord], tok: TokenizerModel, n: int) -> list[str]:
    """The ``n`` most frequent words that currently need two or more tokens."""
    if n < 1:
        raise ValueError("n must be >= 1")
    counts = Counter()
    for rec in corpus:
        text = rec.text if isinstance(rec, MonolingualRecord) else str(rec)
        counts.update(text.split())
    existing = set(tok.added_tokens)
    ranked = sorted(
        (w for w in counts if w not in existing and len(tok.encode(w)) >= 2),
        key=lambda w: (-counts[w], w),
    )
    if len(ranked) < n:
        raise InsufficientCandidatesError(f"only {len(ranked)} multi-token words, {n} requested")
    return ranked[:n]


def extend_vocab(tok: TokenizerModel, candidates, emb: EmbeddingMatrix) -> tuple[TokenizerModel, EmbeddingMatrix]:
    """Append ``candidates`` as added tokens, each initialized to the mean embedding row."""
    candidates = list(candidates)
    if len(set(candidates)) != len(candidates):
        raise DuplicateTokenError("candidate list contains duplicates")
    clash = set(candidates) & set(tok.added_tokens)
    if clash:
        raise DuplicateTokenError(f"already added: {sorted(clash)[:5]}")
    if emb.vocab_size != tok.vocab_size:
        raise ShapeMismatchError(f"embedding has {emb.vocab_size} rows, tokenizer has {tok.vocab_size} ids")
    if not candidates:
        return tok, emb
    mean = emb.rows.mean(axis=0)
    rows = np.vstack([emb.rows, np.tile(mean, (len(candidates), 1))])
    labels = None if emb.labels is None else emb.labels + list(candidates)
    return tok.with_added(candidates), EmbeddingMatrix(rows, labels)
