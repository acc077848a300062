"""Public-key encryption with keyword search (pairing-based construction).

Keys: secret ``s``, public ``g^s``.  A keyword ``w`` encrypts to
``(g^r, H2(e(H1(w), g^s)^r))``; its trapdoor is ``H1(w)^s``; a ciphertext
and a trapdoor match iff ``H2(e(T, g^r))`` equals the stored digest.
Trapdoors are deterministic per key and keyword, ciphertexts are randomized.
"""
from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass

from ..counters import bump
from .group import ELEMENT_SIZE, BilinearGroup, ExponentGroup, random_prime

DEFAULT_PRIME_BITS = 128
DIGEST_SIZE = 32

_sysrand = random.SystemRandom()


@dataclass(frozen=True)
class PeksCiphertext:
    a: int
    b: bytes

    def to_bytes(self) -> bytes:
        return self.a.to_bytes(ELEMENT_SIZE, "big") + self.b

    @classmethod
    def from_bytes(cls, data: bytes) -> "PeksCiphertext":
        if len(data) != ELEMENT_SIZE + DIGEST_SIZE:
            raise ValueError("bad PEKS ciphertext length")
        return cls(int.from_bytes(data[:ELEMENT_SIZE], "big"), data[ELEMENT_SIZE:])


@dataclass(frozen=True)
class Trapdoor:
    element: int

    def to_bytes(self) -> bytes:
        return self.element.to_bytes(ELEMENT_SIZE, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Trapdoor":
        if len(data) != ELEMENT_SIZE:
            raise ValueError("bad trapdoor length")
        return cls(int.from_bytes(data, "big"))


class PeksPublicKey:
    def __init__(self, group: BilinearGroup, g, y):
        self.group = group
        self.g = g
        self.y = y

    def __eq__(self, other) -> bool:
        return isinstance(other, PeksPublicKey) and (self.group, self.g, self.y) == (
            other.group, other.g, other.y)

    def __hash__(self) -> int:
        return hash((self.g, self.y))

    def _h2(self, gt_element) -> bytes:
        return hashlib.sha256(b"pnfv/H2/" + self.group.gt_encode(gt_element)).digest()

    def encrypt(self, keyword: bytes, rng=None) -> PeksCiphertext:
        grp = self.group
        r = grp.random_exponent(rng)
        shared = grp.gt_exp(grp.pair(grp.hash_to_g1(keyword), self.y), r)
        bump("encryptions")
        return PeksCiphertext(grp.exp(self.g, r), self._h2(shared))

    def test(self, ct: PeksCiphertext, trapdoor: Trapdoor) -> bool:
        bump("tests")
        digest = self._h2(self.group.pair(trapdoor.element, ct.a))
        return hmac.compare_digest(digest, ct.b)


class PeksPrivateKey:
    def __init__(self, public_key: PeksPublicKey, secret: int):
        self.public_key = public_key
        self.secret = secret

    def trapdoor(self, keyword: bytes) -> Trapdoor:
        grp = self.public_key.group
        return Trapdoor(grp.exp(grp.hash_to_g1(keyword), self.secret))


def peks_test(pk: PeksPublicKey, ct: PeksCiphertext, trapdoor: Trapdoor) -> bool:
    return pk.test(ct, trapdoor)


def generate_peks_keypair(prime_bits: int = DEFAULT_PRIME_BITS, rng=None):
    """Return ``(public_key, private_key)`` over a prime-order exponent group."""
    rng = rng or _sysrand
    grp = ExponentGroup(random_prime(prime_bits, rng))
    g = grp.exp(grp.generator, rng.randrange(1, grp.order))
    s = rng.randrange(1, grp.order)
    pk = PeksPublicKey(grp, g, grp.exp(g, s))
    return pk, PeksPrivateKey(pk, s)
