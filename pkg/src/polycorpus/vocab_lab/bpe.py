"""Byte-level BPE with an added-token overlay.

Every byte has its own base token, so any input is encodable. Added tokens are
matched leftmost-longest before BPE runs on the remaining byte spans. Merges
are applied lowest rank first, leftmost occurrence first.
"""

from __future__ import annotations

import heapq
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache

from ..errors import DuplicateTokenError, FormatError
from ..fsutil import atomic_open


@lru_cache(maxsize=1)
def bytes_to_unicode() -> dict[int, str]:
    """Printable stand-in character for every byte (GPT-2 convention)."""
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(ord("¡"), ord("¬") + 1)) \
        + list(range(ord("®"), ord("ÿ") + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, map(chr, cs)))


@lru_cache(maxsize=1)
def _unicode_to_bytes() -> dict[str, int]:
    return {c: b for b, c in bytes_to_unicode().items()}


def render_token(token: bytes) -> str:
    table = bytes_to_unicode()
    return "".join(table[b] for b in token)


def parse_token(s: str) -> bytes:
    table = _unicode_to_bytes()
    try:
        return bytes(table[c] for c in s)
    except KeyError as exc:
        raise FormatError(f"token {s!r} contains a character outside the byte alphabet") from exc


@dataclass
class TokenizerModel:
    base_vocab: dict[bytes, int]
    merges: list[tuple[bytes, bytes]] = field(default_factory=list)
    added_tokens: list[str] = field(default_factory=list)

    def __post_init__(self):
        missing = [b for b in range(256) if bytes([b]) not in self.base_vocab]
        if missing:
            raise FormatError(f"base vocabulary lacks {len(missing)} single-byte tokens")
        if len(set(self.base_vocab.values())) != len(self.base_vocab):
            raise FormatError("duplicate ids in base vocabulary")
        known = {bytes([b]) for b in range(256)}
        self._ranks = {}
        for rank, (a, b) in enumerate(self.merges):
            if a not in known or b not in known:
                raise FormatError(f"merge {rank} uses a token not produced by an earlier merge")
            if a + b not in self.base_vocab:
                raise FormatError(f"merge {rank} result {a + b!r} missing from vocabulary")
            self._ranks.setdefault((a, b), rank)
            known.add(a + b)
        if len(set(self.added_tokens)) != len(self.added_tokens):
            raise DuplicateTokenError("added tokens must be distinct")
        if any(not t for t in self.added_tokens):
            raise FormatError("added tokens must be non-empty")
        self._id_to_bytes = {i: t for t, i in self.base_vocab.items()}
        first_added = max(self.base_vocab.values()) + 1
        self._added_ids = {t.encode("utf-8"): first_added + i for i, t in enumerate(self.added_tokens)}
        for t, i in self._added_ids.items():
            self._id_to_bytes[i] = t
        if self.added_tokens:
            alts = sorted(self._added_ids, key=lambda t: (-len(t), t))
            self._added_re = re.compile(b"|".join(re.escape(t) for t in alts))
        else:
            self._added_re = None
        self._cache: dict[bytes, tuple[int, ...]] = {}

    @classmethod
    def byte_level(cls, merges=(), added_tokens=()) -> "TokenizerModel":
        vocab = {bytes([b]): b for b in range(256)}
        merges = [(bytes(a), bytes(b)) for a, b in merges]
        for a, b in merges:
            vocab.setdefault(a + b, len(vocab))
        return cls(vocab, merges, list(added_tokens))

    @property
    def vocab_size(self) -> int:
        return len(self.base_vocab) + len(self.added_tokens)

    def with_added(self, tokens) -> "TokenizerModel":
        return TokenizerModel(dict(self.base_vocab), list(self.merges), self.added_tokens + list(tokens))

    def _bpe(self, data: bytes) -> tuple[int, ...]:
        cached = self._cache.get(data)
        if cached is not None:
            return cached
        n = len(data)
        syms = [data[i:i + 1] for i in range(n)]
        nxt = list(range(1, n + 1))
        nxt[-1] = -1
        prev = list(range(-1, n - 1))
        ranks = self._ranks
        heap = []
        for i in range(n - 1):
            r = ranks.get((syms[i], syms[i + 1]))
            if r is not None:
                heap.append((r, i, syms[i], syms[i + 1]))
        heapq.heapify(heap)
        while heap:
            r, i, a, b = heapq.heappop(heap)
            j = nxt[i]
            if syms[i] != a or j == -1 or syms[j] != b:
                continue
            merged = a + b
            syms[i] = merged
            syms[j] = b""
            nxt[i] = nxt[j]
            if nxt[j] != -1:
                prev[nxt[j]] = i
            p = prev[i]
            if p != -1:
                r2 = ranks.get((syms[p], merged))
                if r2 is not None:
                    heapq.heappush(heap, (r2, p, syms[p], merged))
            q = nxt[i]
            if q != -1:
                r2 = ranks.get((merged, syms[q]))
                if r2 is not None:
                    heapq.heappush(heap, (r2, i, merged, syms[q]))
        ids = []
        i = 0
        while i != -1:
            ids.append(self.base_vocab[syms[i]])
            i = nxt[i]
        out = tuple(ids)
        if n <= 64:
            self._cache[data] = out
        return out

    def encode_bytes(self, data: bytes) -> list[int]:
        out: list[int] = []
        pos = 0
        if self._added_re is not None:
            for m in self._added_re.finditer(data):
                if m.start() > pos:
                    out.extend(self._bpe(data[pos:m.start()]))
                out.append(self._added_ids[m.group()])
                pos = m.end()
        if pos < len(data):
            out.extend(self._bpe(data[pos:]))
        return out

    def encode(self, text: str) -> list[int]:
        return self.encode_bytes(text.encode("utf-8"))

    def decode_bytes(self, ids) -> bytes:
        try:
            return b"".join(self._id_to_bytes[i] for i in ids)
        except KeyError as exc:
            raise FormatError(f"unknown token id {exc.args[0]}") from None

    def decode(self, ids, errors: str = "replace") -> str:
        return self.decode_bytes(ids).decode("utf-8", errors=errors)

    def to_json(self) -> dict:
        return {
            "vocab": {render_token(t): i for t, i in sorted(self.base_vocab.items(), key=lambda kv: kv[1])},
            "merges": [f"{render_token(a)} {render_token(b)}" for a, b in self.merges],
            "added": list(self.added_tokens),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TokenizerModel":
        try:
            vocab = {parse_token(t): int(i) for t, i in obj["vocab"].items()}
            merges = []
            for m in obj.get("merges", []):
                a, b = m.split(" ")
                merges.append((parse_token(a), parse_token(b)))
        except (KeyError, ValueError, AttributeError) as exc:
            raise FormatError(f"malformed tokenizer JSON: {exc}") from exc
        return cls(vocab, merges, list(obj.get("added", [])))

    def save(self, path):
        with atomic_open(path) as f:
            json.dump(self.to_json(), f, ensure_ascii=False, indent=1)

    @classmethod
    def load(cls, path) -> "TokenizerModel":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def bpe_tokenize(tok: TokenizerModel, text: str) -> list[int]:
    return tok.encode(text)
