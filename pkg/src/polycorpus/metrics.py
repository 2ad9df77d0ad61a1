"""Corpus BLEU / spBLEU, language-ratio reports and pivot translation."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EmptyCorpusError, EmptyInputError, LengthMismatchError, ProviderError
from .ingestion import LabelFile
from .providers import TranslationProvider, checked_translate


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_len: int
    ref_len: int
    counts: tuple[int, ...] = ()
    totals: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {"score": self.score, "precisions": list(self.precisions),
                "brevity_penalty": self.brevity_penalty, "hyp_len": self.hyp_len,
                "ref_len": self.ref_len, "counts": list(self.counts), "totals": list(self.totals)}


def parse_smoothing(text: str | None) -> tuple[str, float]:
    """``None``/``"none"`` or ``"add-k:K"``."""
    if text is None or text == "none":
        return "none", 0.0
    if text.startswith("add-k"):
        _, _, k = text.partition(":")
        return "add_k", float(k) if k else 1.0
    raise ValueError(f"unknown smoothing {text!r}")


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hyps: Sequence, refs: Sequence, max_n: int = 4, smoothing=None) -> BleuScore:
    """Corpus-level BLEU with clipped counts.

    Strings are split on whitespace; any other sequence is used as tokens.
    ``smoothing`` is ``None``/``"none"`` or ``("add_k", k)`` / ``"add-k:k"``;
    add-k applies to orders 2 and up.
    """
    if len(hyps) != len(refs):
        raise LengthMismatchError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise EmptyCorpusError("BLEU needs at least one sentence")
    mode, k = smoothing if isinstance(smoothing, tuple) else parse_smoothing(smoothing)
    counts = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        h = h.split() if isinstance(h, str) else list(h)
        r = r.split() if isinstance(r, str) else list(r)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            hn, rn = _ngrams(h, n), _ngrams(r, n)
            counts[n - 1] += sum(min(c, rn[g]) for g, c in hn.items())
            totals[n - 1] += max(0, len(h) - n + 1)
    precisions = []
    for n in range(max_n):
        if mode == "add_k" and n >= 1:
            precisions.append((counts[n] + k) / (totals[n] + k))
        else:
            precisions.append(counts[n] / totals[n] if totals[n] else 0.0)
    if hyp_len == 0:
        bp = 0.0
    elif hyp_len < ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0
    if min(precisions) <= 0.0:
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
    return BleuScore(score, tuple(precisions), bp, hyp_len, ref_len, tuple(counts), tuple(totals))


def spbleu(hyps: Sequence[str], refs: Sequence[str], tok, smoothing=None, max_n: int = 4) -> BleuScore:
    """BLEU over subword ids produced by ``tok.encode``."""
    if len(hyps) != len(refs):
        raise LengthMismatchError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    return corpus_bleu([tok.encode(h) for h in hyps], [tok.encode(r) for r in refs], max_n, smoothing)


@dataclass(frozen=True)
class RatioReport:
    r_target: float
    r_contrast: float
    n: int


def language_ratio(labels: LabelFile | Sequence[str], target: str, contrast: str) -> RatioReport:
    codes = labels.labels if isinstance(labels, LabelFile) else list(labels)
    if not codes:
        raise EmptyInputError("no labels")
    c = Counter(codes)
    n = len(codes)
    return RatioReport(c[target] / n, c[contrast] / n, n)


@dataclass
class PivotResult:
    translations: list[str]
    intermediate: list[str] = field(default_factory=list)


def pivot_translate(provider: TranslationProvider, sentences: Sequence[str], src: str, pivot: str,
                    tgt: str) -> PivotResult:
    """``src -> pivot -> tgt`` through two provider calls; the pivot text is kept."""
    if src == pivot or pivot == tgt:
        raise ValueError("pivot must differ from source and target")
    sentences = list(sentences)
    if not sentences:
        return PivotResult([], [])
    mid = checked_translate(provider, sentences, src, pivot, stage=f"{src}->{pivot}")
    out = checked_translate(provider, mid, pivot, tgt, stage=f"{pivot}->{tgt}")
    return PivotResult(out, mid)


__all__ = ["BleuScore", "PivotResult", "ProviderError", "RatioReport", "corpus_bleu",
           "language_ratio", "parse_smoothing", "pivot_translate", "spbleu"]
