"""Readers and writers for the on-disk source formats.

Formats:

* monolingual: one UTF-8 sentence per line
* parallel: two-column TSV ``src_text<TAB>tgt_text``
* bilingual dictionary: ``src_word<whitespace>tgt_word`` per line
* embeddings: header ``V D`` followed by ``V`` rows ``label v1 ... vD``
* language labels: one language code per line, aligned to sentence index

Readers are lenient by default: malformed lines are skipped and counted in an
optional :class:`ReadStats`. With ``strict=True`` the first malformed line
raises.
"""

from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import EncodingError, FormatError, IoError
from .fsutil import atomic_open

NATURAL = "natural"
REPLICATED = "replicated"
SYNTHETIC = "synthetic"
ORIGINS = (NATURAL, REPLICATED, SYNTHETIC)

_LANG_RE = re.compile(r"[a-z]{2,8}")


def check_lang(code: str) -> str:
    if not isinstance(code, str) or not _LANG_RE.fullmatch(code):
        raise FormatError(f"invalid language code {code!r}")
    return code


def is_punctuation(word: str) -> bool:
    """True when every character is in a Unicode P* category."""
    return bool(word) and all(unicodedata.category(ch).startswith("P") for ch in word)


@dataclass(frozen=True)
class MonolingualRecord:
    lang: str
    text: str
    source_id: str = ""

    def __post_init__(self):
        check_lang(self.lang)
        if not self.text.strip():
            raise FormatError("empty monolingual text")
        if "\n" in self.text or "\r" in self.text:
            raise FormatError("monolingual text contains a newline")


@dataclass(frozen=True)
class SentencePair:
    src_lang: str
    tgt_lang: str
    src_text: str
    tgt_text: str
    origin: str = NATURAL

    def __post_init__(self):
        check_lang(self.src_lang)
        check_lang(self.tgt_lang)
        if self.src_lang == self.tgt_lang:
            raise FormatError(f"source and target language are both {self.src_lang!r}")
        if not self.src_text.strip() or not self.tgt_text.strip():
            raise FormatError("empty side in sentence pair")
        if self.origin not in ORIGINS:
            raise FormatError(f"unknown origin {self.origin!r}")

    def with_origin(self, origin: str) -> "SentencePair":
        return SentencePair(self.src_lang, self.tgt_lang, self.src_text, self.tgt_text, origin)

    @property
    def pair_key(self) -> tuple[str, str]:
        """Unordered language pair, alphabetically sorted."""
        a, b = sorted((self.src_lang, self.tgt_lang))
        return a, b


@dataclass(frozen=True)
class DictEntryPair:
    src_lang: str
    tgt_lang: str
    src_word: str
    tgt_word: str

    def __post_init__(self):
        check_lang(self.src_lang)
        check_lang(self.tgt_lang)
        if self.src_lang == self.tgt_lang:
            raise FormatError("dictionary languages must differ")
        for w in (self.src_word, self.tgt_word):
            if not w or any(ch.isspace() for ch in w):
                raise FormatError(f"dictionary word {w!r} is empty or contains whitespace")
            if is_punctuation(w):
                raise FormatError(f"dictionary word {w!r} is pure punctuation")


@dataclass
class EmbeddingMatrix:
    rows: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise FormatError(f"embedding matrix must be 2-D, got shape {self.rows.shape}")
        if not np.all(np.isfinite(self.rows)):
            raise FormatError("embedding matrix contains non-finite values")
        if self.labels is not None and len(self.labels) != self.rows.shape[0]:
            raise FormatError("label count does not match row count")

    @property
    def vocab_size(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass
class LabelFile:
    labels: list[str]

    @property
    def entries(self) -> list[tuple[int, str]]:
        return list(enumerate(self.labels))

    def __len__(self):
        return len(self.labels)


@dataclass
class ReadStats:
    total: int = 0
    yielded: int = 0
    skipped: int = 0
    punct_dropped: int = 0
    duplicates: int = 0
    skipped_lines: list[int] = field(default_factory=list)

    def skip(self, lineno: int):
        self.skipped += 1
        self.skipped_lines.append(lineno)


def _open_binary(path):
    try:
        return open(path, "rb")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _lines(path, strict: bool, stats: ReadStats) -> Iterator[tuple[int, str]]:
    """Decoded lines without terminators; undecodable lines are skipped or raise."""
    with _open_binary(path) as f:
        for lineno, raw in enumerate(f, start=1):
            stats.total += 1
            raw = raw.rstrip(b"\n")
            if raw.endswith(b"\r"):
                raw = raw[:-1]
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                if strict:
                    raise EncodingError(f"invalid UTF-8 ({exc.reason})", path, lineno) from exc
                stats.skip(lineno)
                continue
            yield lineno, line


def read_monolingual(path, lang: str, strict: bool = False,
                     stats: ReadStats | None = None) -> Iterator[MonolingualRecord]:
    check_lang(lang)
    stats = stats if stats is not None else ReadStats()
    name = Path(path).name
    for lineno, line in _lines(path, strict, stats):
        text = line.strip()
        if not text:
            if strict:
                raise FormatError("empty line", path, lineno)
            stats.skip(lineno)
            continue
        stats.yielded += 1
        yield MonolingualRecord(lang, text, f"{name}:{lineno}")


def read_parallel(path, src: str, tgt: str, strict: bool = False,
                  stats: ReadStats | None = None) -> Iterator[SentencePair]:
    check_lang(src)
    check_lang(tgt)
    stats = stats if stats is not None else ReadStats()
    for lineno, line in _lines(path, strict, stats):
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0].strip() or not cols[1].strip():
            if strict:
                raise FormatError(f"expected 2 non-empty columns, got {len(cols)}", path, lineno)
            stats.skip(lineno)
            continue
        stats.yielded += 1
        yield SentencePair(src, tgt, cols[0].strip(), cols[1].strip())


def read_bilingual_dictionary(path, src: str, tgt: str, strict: bool = False,
                              stats: ReadStats | None = None) -> list[DictEntryPair]:
    check_lang(src)
    check_lang(tgt)
    stats = stats if stats is not None else ReadStats()
    seen = set()
    out = []
    for lineno, line in _lines(path, strict, stats):
        fields = line.split()
        if len(fields) != 2:
            if strict:
                raise FormatError(f"expected 2 fields, got {len(fields)}", path, lineno)
            stats.skip(lineno)
            continue
        if is_punctuation(fields[0]) or is_punctuation(fields[1]):
            stats.punct_dropped += 1
            continue
        key = (fields[0], fields[1])
        if key in seen:
            stats.duplicates += 1
            continue
        seen.add(key)
        stats.yielded += 1
        out.append(DictEntryPair(src, tgt, fields[0], fields[1]))
    return out


def read_embeddings(path) -> EmbeddingMatrix:
    stats = ReadStats()
    lines = _lines(path, True, stats)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError("missing 'V D' header", path, 1) from None
    parts = header.split()
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise FormatError(f"bad header {header!r}, expected 'V D'", path, lineno)
    vocab_size, dim = int(parts[0]), int(parts[1])
    rows = np.empty((vocab_size, dim), dtype=np.float64)
    labels = []
    i = 0
    for lineno, line in lines:
        if not line.strip():
            continue
        fields = line.split()
        if i >= vocab_size:
            raise FormatError(f"more rows than header V={vocab_size}", path, lineno)
        if len(fields) - 1 != dim:
            raise FormatError(f"row {i} has {len(fields) - 1} values, expected {dim}", path, lineno)
        try:
            vals = [float(v) for v in fields[1:]]
        except ValueError as exc:
            raise FormatError(f"row {i}: non-numeric value ({exc})", path, lineno) from exc
        if not all(math.isfinite(v) for v in vals):
            raise FormatError(f"row {i}: non-finite value", path, lineno)
        labels.append(fields[0])
        rows[i] = vals
        i += 1
    if i != vocab_size:
        raise FormatError(f"header declares {vocab_size} rows, found {i}", path)
    return EmbeddingMatrix(rows, labels)


def read_labels(path) -> LabelFile:
    stats = ReadStats()
    labels = []
    for lineno, line in _lines(path, True, stats):
        code = line.strip()
        try:
            labels.append(check_lang(code))
        except FormatError:
            raise FormatError(f"invalid language label {code!r}", path, lineno) from None
    return LabelFile(labels)


def write_monolingual(path, records: Iterable[MonolingualRecord]) -> int:
    n = 0
    with atomic_open(path) as f:
        for rec in records:
            f.write(rec.text + "\n")
            n += 1
    return n


def write_parallel(path, pairs: Iterable[SentencePair]) -> int:
    n = 0
    with atomic_open(path) as f:
        for p in pairs:
            if "\t" in p.src_text or "\t" in p.tgt_text:
                raise FormatError("cannot write a TAB inside a TSV field")
            f.write(f"{p.src_text}\t{p.tgt_text}\n")
            n += 1
    return n


def write_dictionary(path, entries: Iterable[DictEntryPair]) -> int:
    n = 0
    with atomic_open(path) as f:
        for e in entries:
            f.write(f"{e.src_word}\t{e.tgt_word}\n")
            n += 1
    return n


def write_embeddings(path, emb: EmbeddingMatrix):
    labels = emb.labels or [f"t{i}" for i in range(emb.vocab_size)]
    with atomic_open(path) as f:
        f.write(f"{emb.vocab_size} {emb.dim}\n")
        for label, row in zip(labels, emb.rows):
            f.write(label + " " + " ".join(repr(float(v)) for v in row) + "\n")


def write_labels(path, labels: LabelFile):
    with atomic_open(path) as f:
        for code in labels.labels:
            f.write(code + "\n")


def parse_pair_filename(path) -> tuple[str, str]:
    """``en-fr.tsv`` -> ``("en", "fr")``."""
    stem = Path(path).name.split(".")[0]
    parts = stem.split("-")
    if len(parts) != 2:
        raise FormatError(f"cannot parse language pair from file name {Path(path).name!r}")
    return check_lang(parts[0]), check_lang(parts[1])


def read_parallel_dir(directory, strict: bool = False) -> dict[tuple[str, str], list[SentencePair]]:
    """All ``{src}-{tgt}.tsv`` files in ``directory``, keyed by direction."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IoError(f"not a directory: {directory}")
    out = {}
    for path in sorted(directory.glob("*.tsv")):
        src, tgt = parse_pair_filename(path)
        out[(src, tgt)] = list(read_parallel(path, src, tgt, strict=strict))
    return out
