"""Keyed small-domain permutations for shuffling packet fields.

A keyed Fisher-Yates shuffle whose coin flips come from HMAC-SHA256 over
``(nonce, counter)``.  The same key and nonce always give the same
permutation; no inverse is offered because nobody needs one.
"""
from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass


@dataclass(frozen=True)
class Permutation:
    """``mapping[k]`` is the input position that lands at output position ``k`` (0-based)."""

    mapping: tuple

    def __len__(self) -> int:
        return len(self.mapping)

    def apply(self, seq) -> list:
        if len(seq) != len(self.mapping):
            raise ValueError(f"permutation of size {len(self.mapping)} applied to {len(seq)} items")
        return [seq[src] for src in self.mapping]


class _PrfStream:
    def __init__(self, key: bytes, nonce: bytes):
        self._key = key
        self._nonce = nonce
        self._counter = 0
        self._buf = b""

    def _take(self, k: int) -> bytes:
        while len(self._buf) < k:
            block = hmac.new(self._key, self._nonce + struct.pack(">Q", self._counter),
                             hashlib.sha256).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:k], self._buf[k:]
        return out

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection sampling."""
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            v = int.from_bytes(self._take(8), "big")
            if v < limit:
                return v % bound


def prp_shuffle(key: bytes, nonce: bytes, n: int) -> Permutation:
    if n < 1:
        raise ValueError("permutation size must be at least 1")
    stream = _PrfStream(key, nonce)
    items = list(range(n))
    for k in range(n - 1, 0, -1):
        r = stream.below(k + 1)
        items[k], items[r] = items[r], items[k]
    return Permutation(tuple(items))
