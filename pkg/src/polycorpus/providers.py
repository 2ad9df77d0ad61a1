"""Translation backends used for pivot synthesis and pivot evaluation.

A provider maps a batch of sentences from one language to another and must
return exactly one translation per input. ``CachedProvider`` persists every
answer so reruns never touch the backend.
"""

from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
from pathlib import Path
from typing import Sequence

from .errors import ProviderError
from .ingestion import parse_pair_filename, read_bilingual_dictionary


class TranslationProvider:
    def translate(self, sentences: Sequence[str], src: str, tgt: str) -> list[str]:
        raise NotImplementedError


class IdentityProvider(TranslationProvider):
    def translate(self, sentences, src, tgt):
        return list(sentences)


class DictionaryProvider(TranslationProvider):
    """Word-by-word lookup; unknown words pass through unchanged."""

    def __init__(self, tables: dict[tuple[str, str], dict[str, str]]):
        self.tables = tables

    @classmethod
    def from_dir(cls, directory) -> "DictionaryProvider":
        tables = {}
        for path in sorted(Path(directory).glob("*.txt")):
            src, tgt = parse_pair_filename(path)
            table = tables.setdefault((src, tgt), {})
            for e in read_bilingual_dictionary(path, src, tgt):
                table.setdefault(e.src_word.lower(), e.tgt_word)
        return cls(tables)

    def translate(self, sentences, src, tgt):
        if src == tgt:
            return list(sentences)
        table = self.tables.get((src, tgt))
        if table is None:
            raise ProviderError(f"no dictionary for {src}->{tgt}")
        return [" ".join(table.get(w.lower(), w) for w in s.split()) for s in sentences]


class HttpProvider(TranslationProvider):
    """POSTs ``{sentences, src, tgt}`` and expects ``{translations}`` back."""

    def __init__(self, url: str, timeout: float = 60.0, batch_size: int = 64):
        self.url = url
        self.timeout = timeout
        self.batch_size = batch_size

    def translate(self, sentences, src, tgt):
        out = []
        for start in range(0, len(sentences), self.batch_size):
            batch = list(sentences[start:start + self.batch_size])
            body = json.dumps({"sentences": batch, "src": src, "tgt": tgt}).encode("utf-8")
            req = urllib.request.Request(self.url, data=body, headers={"Content-Type": "application/json"})
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
            except (urllib.error.URLError, OSError, ValueError) as exc:
                raise ProviderError(f"HTTP backend failed: {exc}", index=start) from exc
            got = payload.get("translations") if isinstance(payload, dict) else None
            if not isinstance(got, list) or len(got) != len(batch):
                raise ProviderError("HTTP backend returned a malformed batch", index=start)
            out.extend(str(t) for t in got)
        return out


class CachedProvider(TranslationProvider):
    """Persistent (src, tgt, sentence) -> translation cache in front of a backend.

    With ``backend=None`` the provider is cache-only and a miss is an error.
    The cache file is JSONL, one ``{src, tgt, text, translation}`` per line.
    """

    def __init__(self, backend: TranslationProvider | None, cache_path=None):
        self.backend = backend
        self.cache_path = Path(cache_path) if cache_path else None
        self._cache: dict[tuple[str, str, str], str] = {}
        self._pending: list[dict] = []
        self._lock = threading.Lock()
        self.hits = self.misses = 0
        if self.cache_path and self.cache_path.exists():
            with open(self.cache_path, encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        e = json.loads(line)
                        self._cache[(e["src"], e["tgt"], e["text"])] = e["translation"]

    def translate(self, sentences, src, tgt):
        with self._lock:
            missing = [i for i, s in enumerate(sentences) if (src, tgt, s) not in self._cache]
            self.hits += len(sentences) - len(missing)
            self.misses += len(missing)
        if missing:
            if self.backend is None:
                raise ProviderError(f"cache miss for {src}->{tgt}", index=missing[0])
            fresh = checked_translate(self.backend, [sentences[i] for i in missing], src, tgt)
            with self._lock:
                for i, t in zip(missing, fresh):
                    key = (src, tgt, sentences[i])
                    if key not in self._cache:
                        self._cache[key] = t
                        self._pending.append({"src": src, "tgt": tgt, "text": sentences[i], "translation": t})
        with self._lock:
            return [self._cache[(src, tgt, s)] for s in sentences]

    def flush(self):
        """Append new cache entries to disk, sorted so the file is reproducible."""
        if not self.cache_path:
            return
        with self._lock:
            pending = sorted(self._pending, key=lambda e: (e["src"], e["tgt"], e["text"]))
            self._pending = []
        if pending:
            self.cache_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.cache_path, "a", encoding="utf-8") as f:
                for e in pending:
                    f.write(json.dumps(e, ensure_ascii=False) + "\n")


def checked_translate(provider: TranslationProvider, sentences: Sequence[str], src: str, tgt: str,
                      stage: str | None = None) -> list[str]:
    """Call ``provider`` and enforce the one-translation-per-input contract."""
    sentences = list(sentences)
    if not sentences:
        return []
    try:
        out = provider.translate(sentences, src, tgt)
    except ProviderError as exc:
        if stage and exc.stage is None:
            raise ProviderError(str(exc), index=exc.index, stage=stage) from exc
        raise
    except Exception as exc:
        raise ProviderError(f"backend failure: {exc}", stage=stage) from exc
    if len(out) != len(sentences):
        raise ProviderError(f"provider returned {len(out)} translations for {len(sentences)} inputs",
                            stage=stage)
    for i, t in enumerate(out):
        if not isinstance(t, str) or not t.strip():
            raise ProviderError("empty translation", index=i, stage=stage)
    return out
