"""Probabilistic public-key encryption for short byte strings.

Hashed ElGamal over the group with an encrypt-then-MAC tag: a fresh
``g^r`` is sent along, ``H(y^r)`` keys a SHAKE-256 keystream and an
HMAC-SHA256 tag.  Decrypting under the wrong key fails the tag check.
"""
from __future__ import annotations

import hashlib
import hmac
import random

from ..counters import bump
from .group import ELEMENT_SIZE, BilinearGroup, ExponentGroup, random_prime

CAPACITY = 64
TAG_SIZE = 16
DEFAULT_PRIME_BITS = 128

_sysrand = random.SystemRandom()


class IntegrityError(ValueError):
    """Ciphertext failed authentication (wrong key or tampering)."""


def _derive(group: BilinearGroup, shared, ephemeral: bytes) -> tuple:
    seed = hashlib.sha256(b"pnfv/pke/" + ephemeral + group.encode(shared)).digest()
    return seed[:16], seed[16:]


class PkePublicKey:
    def __init__(self, group: BilinearGroup, g, y):
        self.group = group
        self.g = g
        self.y = y

    def __eq__(self, other) -> bool:
        return isinstance(other, PkePublicKey) and (self.group, self.g, self.y) == (
            other.group, other.g, other.y)

    def __hash__(self) -> int:
        return hash((self.g, self.y))

    def encrypt(self, message: bytes, rng=None) -> bytes:
        if len(message) > CAPACITY:
            raise ValueError(f"message longer than {CAPACITY} bytes")
        grp = self.group
        r = grp.random_exponent(rng)
        ephemeral = grp.encode(grp.exp(self.g, r))
        stream_key, mac_key = _derive(grp, grp.exp(self.y, r), ephemeral)
        stream = hashlib.shake_256(stream_key).digest(len(message))
        body = bytes(m ^ s for m, s in zip(message, stream))
        tag = hmac.new(mac_key, ephemeral + body, hashlib.sha256).digest()[:TAG_SIZE]
        bump("encryptions")
        return ephemeral + body + tag


class PkePrivateKey:
    def __init__(self, public_key: PkePublicKey, secret: int):
        self.public_key = public_key
        self.secret = secret

    def decrypt(self, ciphertext: bytes) -> bytes:
        if len(ciphertext) < ELEMENT_SIZE + TAG_SIZE:
            raise IntegrityError("ciphertext too short")
        grp = self.public_key.group
        ephemeral = ciphertext[:ELEMENT_SIZE]
        body = ciphertext[ELEMENT_SIZE:-TAG_SIZE]
        tag = ciphertext[-TAG_SIZE:]
        try:
            shared = grp.exp(grp.decode(ephemeral), self.secret)
        except ValueError as exc:
            raise IntegrityError(str(exc)) from None
        stream_key, mac_key = _derive(grp, shared, ephemeral)
        expected = hmac.new(mac_key, ephemeral + body, hashlib.sha256).digest()[:TAG_SIZE]
        if not hmac.compare_digest(expected, tag):
            raise IntegrityError("authentication tag mismatch")
        bump("decryptions")
        stream = hashlib.shake_256(stream_key).digest(len(body))
        return bytes(c ^ s for c, s in zip(body, stream))


def generate_pke_keypair(prime_bits: int = DEFAULT_PRIME_BITS, rng=None):
    rng = rng or _sysrand
    grp = ExponentGroup(random_prime(prime_bits, rng))
    g = grp.exp(grp.generator, rng.randrange(1, grp.order))
    x = rng.randrange(1, grp.order)
    pk = PkePublicKey(grp, g, grp.exp(g, x))
    return pk, PkePrivateKey(pk, x)
