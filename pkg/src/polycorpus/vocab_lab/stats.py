"""Similarity, rank-correlation and distribution-shift statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import (DegenerateError, DimensionMismatchError, EmptySampleError,
                      LengthMismatchError, ShapeMismatchError, ZeroVectorError)
from ..ingestion import EmbeddingMatrix


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"vector lengths differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVectorError("cosine of a zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))


@dataclass(frozen=True)
class QualityReport:
    mean_cosine: float
    r_at_1: float
    query_count: int
    correct_top1: int


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ZeroVectorError("embedding row with zero norm")
    return m / norms


def retrieval_r_at_1(queries: EmbeddingMatrix, pool: EmbeddingMatrix, gold) -> QualityReport:
    """Nearest pool row by cosine for every query; ties go to the lowest index.

    ``mean_cosine`` averages the cosine between each query and its gold row.
    """
    q, p = queries.rows, pool.rows
    if p.shape[0] == 0:
        raise DimensionMismatchError("empty retrieval pool")
    if q.shape[1] != p.shape[1]:
        raise DimensionMismatchError(f"query dim {q.shape[1]} != pool dim {p.shape[1]}")
    gold = np.asarray(gold, dtype=np.int64)
    if gold.shape != (q.shape[0],):
        raise DimensionMismatchError("gold map must have one entry per query")
    qu, pu = _unit_rows(q), _unit_rows(p)
    sims = qu @ pu.T
    top = np.argmax(sims, axis=1)  # first maximum on ties
    correct = int(np.sum(top == gold))
    gold_sims = sims[np.arange(q.shape[0]), gold]
    n = q.shape[0]
    return QualityReport(float(np.mean(gold_sims)) if n else 0.0, correct / n if n else 0.0, n, correct)


def average_ranks(x) -> np.ndarray:
    """1-based ranks, tied values sharing the mean of their positions."""
    a = np.asarray(x, dtype=np.float64)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(a.size, dtype=np.float64)
    sorted_a = a[order]
    i = 0
    n = a.size
    while i < n:
        j = i
        while j + 1 < n and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatchError(f"series lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise LengthMismatchError("need at least two observations")
    rx = average_ranks(x) - (x.size + 1) / 2.0
    ry = average_ranks(y) - (y.size + 1) / 2.0
    sx, sy = math.sqrt(float(rx @ rx)), math.sqrt(float(ry @ ry))
    if sx == 0 or sy == 0:
        raise DegenerateError("constant series has no rank correlation")
    return max(-1.0, min(1.0, float(rx @ ry) / (sx * sy)))


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 0.2:
        # series converges slowly here and the value is 1 to double precision
        return 1.0
    total = 0.0
    for k in range(1, terms + 1):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < 1e-18:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    na, nb = a.size, b.size
    if na == 0 or nb == 0:
        raise EmptySampleError("KS test needs two non-empty samples")
    i = j = 0
    d = 0.0
    while i < na and j < nb:
        x = min(a[i], b[j])
        while i < na and a[i] == x:
            i += 1
        while j < nb and b[j] == x:
            j += 1
        d = max(d, abs(i / na - j / nb))
    return d


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic two-sided p-value."""
    d = ks_statistic(a, b)
    na, nb = np.size(a), np.size(b)
    ne = na * nb / (na + nb)
    return d, kolmogorov_sf(math.sqrt(ne) * d)


@dataclass(frozen=True)
class ShiftReport:
    per_token: list[tuple[int, float, float]]
    shift_tokens: list[int]
    alpha: float

    @property
    def shift_count(self) -> int:
        return len(self.shift_tokens)

    @property
    def shift_distance(self) -> float | None:
        if not self.shift_tokens:
            return None
        stat = {t: d for t, d, _ in self.per_token}
        return float(np.mean([stat[t] for t in self.shift_tokens]))


def ks_lottery(before: EmbeddingMatrix, after: EmbeddingMatrix, alpha: float = 0.05) -> ShiftReport:
    """Flag embedding rows whose value distribution shifted between checkpoints."""
    if before.rows.shape != after.rows.shape:
        raise ShapeMismatchError(f"shapes differ: {before.rows.shape} vs {after.rows.shape}")
    per_token = []
    shifted = []
    for i in range(before.vocab_size):
        d, p = ks_two_sample(before.rows[i], after.rows[i])
        per_token.append((i, d, p))
        if p < alpha:
            shifted.append(i)
    return ShiftReport(per_token, shifted, alpha)
