"""BGN-style encryption: unlimited additions and one multiplication.

Key generation picks two primes ``q1, q2`` and a group of order
``n = q1 * q2`` with generators ``g`` and ``u``; ``h = u^q2`` generates the
order-``q1`` subgroup.  A message ``m`` encrypts to ``g^m h^r``.  Raising a
ciphertext to ``q1`` kills the ``h`` component and leaves ``(g^q1)^m``,
whose discrete log is recovered by baby-step/giant-step over a bounded
range.  Pairing two source-level ciphertexts gives a target-level
encryption of the product.

Ciphertexts support ``+``, ``-`` and unary ``-`` at either level, ``*``
between two source-level ciphertexts (the pairing) and ``*`` by a plain
integer.  Adding a plain integer encrypts it first.
"""
from __future__ import annotations

import random

from ..counters import bump
from .dlog import DEFAULT_BABY_STEPS, BabyStepGiantStep, DlogNotFound
from .group import ELEMENT_SIZE, BilinearGroup, ExponentGroup, random_prime

SOURCE = "G1"
TARGET = "G2"

DEFAULT_PRIME_BITS = 64
MIN_PRIME_BITS = 40
DEFAULT_MESSAGE_BOUND = 1 << 32

_sysrand = random.SystemRandom()

__all__ = [
    "BgnCiphertext", "BgnPrivateKey", "BgnPublicKey", "DlogNotFound", "LevelError",
    "SOURCE", "TARGET", "generate_bgn_keypair",
]


class LevelError(TypeError):
    """Operands live at incompatible levels (or were multiplied twice)."""


class BgnPublicKey:
    """Public BGN parameters ``(n, G1, G2, e, g, h)``.

    Args:
      group: the bilinear group of composite order ``n``.
      g: generator of G1.
      h: generator of the order-``q1`` subgroup.
      message_bound: encryption accepts ``0 <= m < message_bound``.
    """

    def __init__(self, group: BilinearGroup, g, h, message_bound: int = DEFAULT_MESSAGE_BOUND):
        self.group = group
        self.n = group.order
        self.g = g
        self.h = h
        self.message_bound = message_bound
        self._gt_g = group.pair(g, g)
        self._gt_h = group.pair(g, h)

    def __repr__(self) -> str:
        return f"<BgnPublicKey n~2^{self.n.bit_length()}>"

    def __eq__(self, other) -> bool:
        return (isinstance(other, BgnPublicKey) and self.group == other.group
                and (self.g, self.h) == (other.g, other.h))

    def __hash__(self) -> int:
        return hash((self.n, self.g, self.h))

    def _check_message(self, m: int) -> None:
        if not 0 <= m < self.message_bound:
            raise ValueError(f"message {m} outside [0, {self.message_bound})")

    def encrypt(self, m: int, rng=None) -> "BgnCiphertext":
        """Source-level encryption ``g^m h^r`` with fresh ``r``."""
        self._check_message(m)
        grp = self.group
        r = grp.random_exponent(rng)
        bump("encryptions")
        return BgnCiphertext(self, SOURCE, grp.op(grp.exp(self.g, m), grp.exp(self.h, r)))

    def encrypt_target(self, m: int, rng=None) -> "BgnCiphertext":
        """Target-level encryption ``e(g,g)^m e(g,h)^r``."""
        self._check_message(m)
        grp = self.group
        r = grp.random_exponent(rng)
        bump("encryptions")
        return BgnCiphertext(
            self, TARGET, grp.gt_op(grp.gt_exp(self._gt_g, m), grp.gt_exp(self._gt_h, r)))

    def encrypt_signed(self, m: int, level: str = SOURCE, rng=None) -> "BgnCiphertext":
        """Encrypt a possibly negative ``m`` as the negation of ``E(-m)``."""
        enc = self.encrypt if level == SOURCE else self.encrypt_target
        return enc(m, rng) if m >= 0 else -enc(-m, rng)

    def lift(self, c: "BgnCiphertext") -> "BgnCiphertext":
        """Move a source ciphertext to the target group by pairing with ``g``."""
        if c.level != SOURCE:
            raise LevelError("only source-level ciphertexts can be lifted")
        return BgnCiphertext(self, TARGET, self.group.pair(c.element, self.g))

    def from_bytes(self, data: bytes, level: str = SOURCE) -> "BgnCiphertext":
        grp = self.group
        element = grp.decode(data) if level == SOURCE else grp.gt_decode(data)
        return BgnCiphertext(self, level, element)


class BgnPrivateKey:
    """Holds the factor ``q1``; decrypts with a shared, lazily built BSGS table."""

    def __init__(self, public_key: BgnPublicKey, q1: int, baby_steps: int = DEFAULT_BABY_STEPS):
        if public_key.n % q1:
            raise ValueError("q1 does not divide the group order")
        self.public_key = public_key
        self.q1 = q1
        grp = public_key.group
        self._base = {
            SOURCE: grp.exp(public_key.g, q1),
            TARGET: grp.gt_exp(public_key._gt_g, q1),
        }
        self._solvers = {
            SOURCE: BabyStepGiantStep(grp.op, grp.inv, grp.identity, self._base[SOURCE], baby_steps),
            TARGET: BabyStepGiantStep(grp.gt_op, grp.gt_inv, grp.gt_identity, self._base[TARGET],
                                      baby_steps),
        }

    def __repr__(self) -> str:
        return f"<BgnPrivateKey for {self.public_key!r}>"

    def _project(self, c: "BgnCiphertext"):
        if c.public_key is not self.public_key and c.public_key != self.public_key:
            raise ValueError("ciphertext was produced under a different key")
        grp = self.public_key.group
        return grp.exp(c.element, self.q1) if c.level == SOURCE else grp.gt_exp(c.element, self.q1)

    def decrypt(self, c: "BgnCiphertext", bound: int | None = None, signed: bool = False) -> int:
        """Recover the plaintext of ``c``.

        Args:
          c: ciphertext at either level.
          bound: search ``[0, bound)``, or ``[-bound, bound)`` when ``signed``.
            Defaults to the key's message bound.
          signed: also look for negative plaintexts.

        Raises:
          DlogNotFound: the plaintext lies outside the bound.
        """
        bound = self.public_key.message_bound if bound is None else bound
        target = self._project(c)
        bump("decryptions")
        solver = self._solvers[c.level]
        return solver.solve_signed(target, bound) if signed else solver.solve(target, bound)

    def is_value(self, c: "BgnCiphertext", v: int) -> bool:
        """True iff ``c`` decrypts to ``v``, checked without a discrete log."""
        grp = self.public_key.group
        base = self._base[c.level]
        expected = grp.exp(base, v) if c.level == SOURCE else grp.gt_exp(base, v)
        return self._project(c) == expected


class BgnCiphertext:
    __slots__ = ("public_key", "level", "element")

    def __init__(self, public_key: BgnPublicKey, level: str, element):
        self.public_key = public_key
        self.level = level
        self.element = element

    def __repr__(self) -> str:
        return f"<BgnCiphertext {self.level}>"

    def __eq__(self, other) -> bool:
        return (isinstance(other, BgnCiphertext) and self.level == other.level
                and self.element == other.element and self.public_key == other.public_key)

    def __hash__(self) -> int:
        return hash((self.level, self.element))

    def _coerce(self, other) -> "BgnCiphertext":
        if isinstance(other, int):
            return self.public_key.encrypt_signed(other, self.level)
        if not isinstance(other, BgnCiphertext):
            return NotImplemented
        if other.public_key is not self.public_key and other.public_key != self.public_key:
            raise ValueError("ciphertexts were produced under different keys")
        if other.level != self.level:
            raise LevelError(f"cannot combine {self.level} and {other.level} ciphertexts")
        return other

    def __add__(self, other) -> "BgnCiphertext":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        grp = self.public_key.group
        fn = grp.op if self.level == SOURCE else grp.gt_op
        return BgnCiphertext(self.public_key, self.level, fn(self.element, other.element))

    __radd__ = __add__

    def __neg__(self) -> "BgnCiphertext":
        grp = self.public_key.group
        fn = grp.inv if self.level == SOURCE else grp.gt_inv
        return BgnCiphertext(self.public_key, self.level, fn(self.element))

    def __sub__(self, other) -> "BgnCiphertext":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "BgnCiphertext":
        return (-self) + other

    def __mul__(self, other) -> "BgnCiphertext":
        grp = self.public_key.group
        if isinstance(other, int):
            fn = grp.exp if self.level == SOURCE else grp.gt_exp
            return BgnCiphertext(self.public_key, self.level, fn(self.element, other))
        if not isinstance(other, BgnCiphertext):
            return NotImplemented
        if self.level != SOURCE or other.level != SOURCE:
            raise LevelError("BGN allows a single multiplication of source-level ciphertexts")
        if other.public_key is not self.public_key and other.public_key != self.public_key:
            raise ValueError("ciphertexts were produced under different keys")
        return BgnCiphertext(self.public_key, TARGET, grp.pair(self.element, other.element))

    def __rmul__(self, other) -> "BgnCiphertext":
        if isinstance(other, int):
            return self * other
        return NotImplemented

    def to_bytes(self) -> bytes:
        grp = self.public_key.group
        return grp.encode(self.element) if self.level == SOURCE else grp.gt_encode(self.element)


def generate_bgn_keypair(prime_bits: int = DEFAULT_PRIME_BITS,
                         message_bound: int = DEFAULT_MESSAGE_BOUND,
                         rng=None, baby_steps: int = DEFAULT_BABY_STEPS):
    """Return ``(public_key, private_key)`` on the exponent-tracking backend.

    ``prime_bits`` is the size of each factor of the group order.  It has to
    leave room for signed plaintexts up to ``message_bound`` in the order-``q2``
    subgroup, and the order must fit the fixed element encoding.
    """
    if prime_bits < MIN_PRIME_BITS:
        raise ValueError(f"prime_bits must be at least {MIN_PRIME_BITS}")
    if 2 * prime_bits > 8 * ELEMENT_SIZE:
        raise ValueError(f"prime_bits must be at most {4 * ELEMENT_SIZE}")
    if (2 * message_bound).bit_length() >= prime_bits:
        raise ValueError("message bound too large for the chosen prime size")
    rng = rng or _sysrand
    q1 = random_prime(prime_bits, rng)
    q2 = random_prime(prime_bits, rng)
    while q2 == q1:
        q2 = random_prime(prime_bits, rng)
    grp = ExponentGroup(q1 * q2)
    n = grp.order
    # generators of a cyclic group of order n are exactly the units mod n
    while True:
        g_log = rng.randrange(1, n)
        u_log = rng.randrange(1, n)
        if g_log % q1 and g_log % q2 and u_log % q1 and u_log % q2:
            break
    g = grp.exp(grp.generator, g_log)
    h = grp.exp(grp.exp(grp.generator, u_log), q2)
    pk = BgnPublicKey(grp, g, h, message_bound)
    return pk, BgnPrivateKey(pk, q1, baby_steps)
