"""Keyed, counter-based random streams.

Every random decision in the pipeline draws from a Philox generator whose key
is a hash of the master seed and a record-level identifier. Output therefore
does not depend on the order (or the thread) in which records are processed.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_words(seed: int, parts: tuple) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(str(int(seed) & 0xFFFFFFFFFFFFFFFF).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def substream(seed: int, *parts) -> np.random.Generator:
    """Independent generator for ``(seed, *parts)``.

    Same arguments always give the same stream; different ``parts`` give
    statistically independent streams.
    """
    return np.random.Generator(np.random.Philox(key=_key_words(seed, parts)))


def derive_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit child seed from ``rng``."""
    return int(rng.integers(0, 2**63 - 1))


def choice(rng: np.random.Generator, items):
    """Uniform draw from a non-empty sequence."""
    return items[int(rng.integers(len(items)))]
