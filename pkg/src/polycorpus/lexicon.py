"""Multilingual lexicon merged from bilingual dictionaries.

Each key is a ``(word, lang)`` pair rendered ``word_lang``; its value maps
every other language to an ordered list of synonyms. Key words are lowercased,
synonyms keep their original case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import FormatError
from .fsutil import atomic_open
from .ingestion import DictEntryPair, check_lang, is_punctuation

Key = tuple[str, str]


def _usable(word: str) -> bool:
    return bool(word) and not any(ch.isspace() for ch in word) and not is_punctuation(word)


@dataclass
class Lexicon:
    entries: dict[Key, dict[str, list[str]]] = field(default_factory=dict)
    hop_depth: int = 1

    @property
    def supported_langs(self) -> set[str]:
        langs = set()
        for (_, lang), sets in self.entries.items():
            langs.add(lang)
            langs.update(sets)
        return langs

    def _add(self, key: Key, lang: str, word: str) -> bool:
        if lang == key[1] or not _usable(word):
            return False
        syns = self.entries.setdefault(key, {}).setdefault(lang, [])
        if word in syns:
            return False
        syns.append(word)
        return True

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, Lexicon):
            return NotImplemented
        return self.hop_depth == other.hop_depth and self.entries == other.entries

    def dumps(self) -> str:
        lines = [f"#hop_depth={self.hop_depth}"]
        for word, lang in sorted(self.entries):
            sets = self.entries[(word, lang)]
            body = "|".join(
                f"{l}:" + ",".join(_escape(w) for w in sets[l]) for l in sorted(sets) if sets[l]
            )
            lines.append(f"{_escape(word)}_{lang}\t{body}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with atomic_open(path) as f:
            f.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Lexicon":
        lex = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            if line.startswith("#hop_depth="):
                lex.hop_depth = int(line.split("=", 1)[1])
                continue
            try:
                head, body = line.split("\t", 1)
                word, _, lang = _unescape(head).rpartition("_")
                check_lang(lang)
                key = (word, lang)
                lex.entries.setdefault(key, {})
                for chunk in _split_unescaped(body, "|"):
                    l, _, words = chunk.partition(":")
                    check_lang(l)
                    for w in _split_unescaped(words, ","):
                        lex._add(key, l, _unescape(w))
            except (ValueError, FormatError) as exc:
                raise FormatError(f"bad lexicon line: {exc}", line=lineno) from exc
        return lex

    @classmethod
    def load(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as f:
            return cls.loads(f.read())


_ESCAPES = {"\\": "\\\\", ",": "\\,", "|": "\\|", "\t": "\\t", ":": "\\:"}


def _escape(word: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in word)


def _unescape(s: str) -> str:
    out = []
    it = iter(s)
    for ch in it:
        if ch == "\\":
            nxt = next(it, "")
            out.append("\t" if nxt == "t" else nxt)
        else:
            out.append(ch)
    return "".join(out)


def _split_unescaped(s: str, sep: str) -> list[str]:
    parts, cur, escaped = [], [], False
    for ch in s:
        if escaped:
            cur.append("\\" + ch)
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == sep:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p for p in parts if p]


def build_multilingual_lexicon(dicts: Iterable[Iterable[DictEntryPair]]) -> Lexicon:
    """Merge bilingual dictionaries, making every entry symmetric."""
    lex = Lexicon()
    for stream in dicts:
        for e in stream:
            lex._add((e.src_word.lower(), e.src_lang), e.tgt_lang, e.tgt_word)
            lex._add((e.tgt_word.lower(), e.tgt_lang), e.src_lang, e.src_word)
    return lex


def expand_two_hop(lex: Lexicon) -> Lexicon:
    """Add translations reachable through exactly one intermediate word.

    Only 1-hop synonyms of the original lexicon are followed, so a chain
    a->b->c->d gives a the word c but never d.
    """
    if lex.hop_depth != 1:
        raise ValueError(f"expand_two_hop expects a 1-hop lexicon, got hop_depth={lex.hop_depth}")
    out = Lexicon({k: {l: list(ws) for l, ws in v.items()} for k, v in lex.entries.items()}, 2)
    for key, sets in lex.entries.items():
        for lang, words in sets.items():
            for w in words:
                for lang2, words2 in lex.entries.get((w.lower(), lang), {}).items():
                    if lang2 == key[1]:
                        continue
                    for w2 in words2:
                        out._add(key, lang2, w2)
    return out


def lookup(lex: Lexicon, word: str, src_lang: str, tgt_lang: str) -> list[str]:
    return list(lex.entries.get((word.lower(), src_lang), {}).get(tgt_lang, ()))


def lexicon_stats(lex: Lexicon, lang: str) -> int:
    """Number of distinct (case-folded) words of ``lang`` anywhere in the lexicon."""
    words = set()
    for (word, key_lang), sets in lex.entries.items():
        if key_lang == lang:
            words.add(word)
        for w in sets.get(lang, ()):
            words.add(w.lower())
    return len(words)
