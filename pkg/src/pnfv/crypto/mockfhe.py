"""Functionally exact stand-in for a fully homomorphic encryption scheme.

A ciphertext simply seals the integer plaintext together with the id of the
key that made it.  Addition and multiplication are unbounded and exact.
This is **not encryption**: it exists so the FHE-based network-function
construction can be exercised end to end without a real FHE library.

Bit-decomposed values are lists of ciphertexts, least significant bit
first; :func:`equal_bits`, :func:`geq_bits` and :func:`leq_bits` evaluate
the comparison circuits on them using only additions and multiplications.
"""
from __future__ import annotations

import os
import random
import struct

from ..counters import bump

_nonce_rng = random.Random(os.urandom(16))


class KeyMismatch(ValueError):
    """Ciphertexts from different keys were combined or decrypted."""


class FheCiphertext:
    __slots__ = ("key_id", "_value", "nonce")

    def __init__(self, key_id: bytes, value: int, nonce: int = 0):
        self.key_id = key_id
        self._value = value
        self.nonce = nonce

    def __repr__(self) -> str:
        return "<FheCiphertext>"

    def _other(self, other) -> int:
        if isinstance(other, FheCiphertext):
            if other.key_id != self.key_id:
                raise KeyMismatch("ciphertexts under different keys")
            return other._value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FheCiphertext(self.key_id, self._value + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FheCiphertext(self.key_id, self._value - v)

    def __rsub__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FheCiphertext(self.key_id, v - self._value)

    def __neg__(self):
        return FheCiphertext(self.key_id, -self._value)

    def __mul__(self, other):
        v = self._other(other)
        if v is NotImplemented:
            return v
        return FheCiphertext(self.key_id, self._value * v)

    __rmul__ = __mul__

    def to_bytes(self) -> bytes:
        """``key_id(8) | nonce(8) | len(2) | signed big-endian value``."""
        nbytes = (self._value.bit_length() + 8) // 8 or 1
        body = self._value.to_bytes(nbytes, "big", signed=True)
        return self.key_id + struct.pack(">QH", self.nonce, nbytes) + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "FheCiphertext":
        if len(data) < 18:
            raise ValueError("truncated FHE ciphertext")
        nonce, nbytes = struct.unpack(">QH", data[8:18])
        if len(data) != 18 + nbytes:
            raise ValueError("FHE ciphertext length mismatch")
        return cls(data[:8], int.from_bytes(data[18:], "big", signed=True), nonce)


def mockfhe_add(a: FheCiphertext, b: FheCiphertext) -> FheCiphertext:
    return a + b


def mockfhe_mul(a: FheCiphertext, b: FheCiphertext) -> FheCiphertext:
    return a * b


class MockFhePublicKey:
    def __init__(self, key_id: bytes):
        self.key_id = key_id

    def encrypt(self, m: int) -> FheCiphertext:
        bump("encryptions")
        return FheCiphertext(self.key_id, int(m), _nonce_rng.getrandbits(64))

    def encrypt_bits(self, m: int, width: int) -> list:
        if not 0 <= m < (1 << width):
            raise ValueError(f"{m} does not fit in {width} bits")
        return [self.encrypt((m >> k) & 1) for k in range(width)]

    def encrypt_vector(self, values) -> list:
        return [self.encrypt(v) for v in values]


class MockFhePrivateKey:
    def __init__(self, public_key: MockFhePublicKey):
        self.public_key = public_key

    def decrypt(self, c: FheCiphertext) -> int:
        if c.key_id != self.public_key.key_id:
            raise KeyMismatch("ciphertext was produced under a different key")
        bump("decryptions")
        return c._value

    def decrypt_bits(self, bits) -> int:
        return sum(self.decrypt(b) << k for k, b in enumerate(bits))


def generate_mockfhe_keypair():
    pk = MockFhePublicKey(os.urandom(8))
    return pk, MockFhePrivateKey(pk)


def _check_widths(a_bits, b_bits) -> None:
    if len(a_bits) != len(b_bits):
        raise ValueError(f"circuit width mismatch: {len(a_bits)} vs {len(b_bits)} bits")


def _agree(a, b):
    # a*b + (1-a)(1-b) == 1 - a - b + 2ab
    return 1 - a - b + 2 * (a * b)


def equal_bits(a_bits, b_bits):
    """Encrypted 1 iff the two bit vectors agree everywhere."""
    _check_widths(a_bits, b_bits)
    out = _agree(a_bits[0], b_bits[0])
    for a, b in zip(a_bits[1:], b_bits[1:]):
        out = out * _agree(a, b)
    return out


def geq_bits(a_bits, b_bits):
    """Encrypted 1 iff ``a >= b``; scans from the most significant bit."""
    _check_widths(a_bits, b_bits)
    total = None
    prefix = None
    for a, b in zip(reversed(a_bits), reversed(b_bits)):
        strict = a * (1 - b)
        term = strict if prefix is None else prefix * strict
        total = term if total is None else total + term
        agree = _agree(a, b)
        prefix = agree if prefix is None else prefix * agree
    return total + prefix


def leq_bits(a_bits, b_bits):
    return geq_bits(b_bits, a_bits)
