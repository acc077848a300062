"""Bilinear group interface and the exponent-tracking test backend.

The schemes only talk to a group through :class:`BilinearGroup`: a source
group G1 and a target group G2 of the same order with a pairing
``e: G1 x G1 -> G2``.  Elements are opaque hashable values; the group
object supplies the operations.

:class:`ExponentGroup` stores every element as its discrete logarithm with
respect to a fixed generator, so the group law is addition mod the order and
the pairing is multiplication of exponents.  It is functionally exact and
fast, and offers **no security whatsoever**.  A real pairing library can be
dropped in by implementing the same abstract methods.
"""
from __future__ import annotations

import abc
import hashlib
import random

import gmpy2

from ..counters import bump

ELEMENT_SIZE = 32

_sysrand = random.SystemRandom()


class BilinearGroup(abc.ABC):
    """Abstract source/target group pair with a pairing."""

    order: int
    element_size: int = ELEMENT_SIZE

    # source group G1
    @property
    @abc.abstractmethod
    def identity(self): ...

    @property
    @abc.abstractmethod
    def generator(self): ...

    @abc.abstractmethod
    def op(self, a, b): ...

    @abc.abstractmethod
    def inv(self, a): ...

    @abc.abstractmethod
    def exp(self, a, k: int): ...

    # target group G2
    @property
    @abc.abstractmethod
    def gt_identity(self): ...

    @abc.abstractmethod
    def gt_op(self, a, b): ...

    @abc.abstractmethod
    def gt_inv(self, a): ...

    @abc.abstractmethod
    def gt_exp(self, a, k: int): ...

    @abc.abstractmethod
    def pair(self, a, b): ...

    @abc.abstractmethod
    def hash_to_g1(self, data: bytes): ...

    @abc.abstractmethod
    def encode(self, element) -> bytes: ...

    @abc.abstractmethod
    def decode(self, data: bytes): ...

    @abc.abstractmethod
    def gt_encode(self, element) -> bytes: ...

    def random_exponent(self, rng=None) -> int:
        return (rng or _sysrand).randrange(self.order)


class ExponentGroup(BilinearGroup):
    """Insecure stand-in group: elements are their own discrete logs mod ``order``."""

    def __init__(self, order: int):
        if order < 2:
            raise ValueError("group order must be at least 2")
        if order.bit_length() > 8 * ELEMENT_SIZE:
            raise ValueError(f"order does not fit a {ELEMENT_SIZE}-byte encoding")
        self.order = order

    def __repr__(self) -> str:
        return f"ExponentGroup(order~2^{self.order.bit_length()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ExponentGroup) and other.order == self.order

    def __hash__(self) -> int:
        return hash(("ExponentGroup", self.order))

    identity = 0
    generator = 1
    gt_identity = 0
    gt_generator = 1

    def op(self, a: int, b: int) -> int:
        return (a + b) % self.order

    def inv(self, a: int) -> int:
        return -a % self.order

    def exp(self, a: int, k: int) -> int:
        return a * k % self.order

    gt_op = op
    gt_inv = inv
    gt_exp = exp

    def pair(self, a: int, b: int) -> int:
        bump("pairings")
        return a * b % self.order

    def hash_to_g1(self, data: bytes) -> int:
        digest = hashlib.sha512(b"pnfv/H1/" + data).digest()
        return int.from_bytes(digest, "big") % self.order

    def encode(self, element: int) -> bytes:
        return element.to_bytes(ELEMENT_SIZE, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != ELEMENT_SIZE:
            raise ValueError(f"element encoding must be {ELEMENT_SIZE} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= self.order:
            raise ValueError("encoded element outside the group")
        return value

    gt_encode = encode
    gt_decode = decode


def random_prime(bits: int, rng=None) -> int:
    rng = rng or _sysrand
    while True:
        candidate = int(gmpy2.next_prime(rng.getrandbits(bits) | (1 << (bits - 1))))
        if candidate.bit_length() == bits:
            return candidate


BACKENDS = ("exponent", "pairing")


def check_backend(name: str) -> None:
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {', '.join(BACKENDS)}")
    if name == "pairing":
        raise NotImplementedError(
            "no pairing backend is bundled; implement BilinearGroup over a pairing library")
