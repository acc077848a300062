"""Network functions evaluated entirely under (mock) fully homomorphic encryption.

The cloud holds ``E(x)`` bit-decomposed per field and, for each policy,
encryptions of the selector vectors ``e_i`` and ``e_j`` and of the bits of
``y`` (or ``a`` and ``b``) and ``z``.  It computes

    x <- m(x) * (z e_j - x o e_j) + x

with ``m(x) = <x, e_i> (==) y`` or ``(<x, e_i> >= a) * (<x, e_i> <= b)``,
policy after policy, and returns ``E(psi^N(x))``.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..crypto.mockfhe import (FheCiphertext, MockFhePrivateKey, MockFhePublicKey, equal_bits,
                              geq_bits, leq_bits)
from ..netfn import Equality, Layout, NetworkFunction, Packet, check_replace_only
from .codec import SchemeId, TransformedFunction, WireError, pack_items, unpack_items

EQ, RANGE = 0, 1


@dataclass(frozen=True)
class FheBundle:
    kind: int
    e_i: tuple
    e_j: tuple
    operands: tuple  # (y_bits,) or (a_bits, b_bits)
    z_bits: tuple

    def ciphertexts(self) -> list:
        out = list(self.e_i) + list(self.e_j)
        for bits in self.operands:
            out += bits
        return out + list(self.z_bits)

    def to_bytes(self) -> bytes:
        groups = [self.e_i, self.e_j, *self.operands, self.z_bits]
        return bytes([self.kind]) + pack_items(
            pack_items(c.to_bytes() for c in g) for g in groups)

    @classmethod
    def from_bytes(cls, data: bytes) -> "FheBundle":
        if not data or data[0] not in (EQ, RANGE):
            raise WireError("bad FHE bundle kind")
        groups = [tuple(FheCiphertext.from_bytes(c) for c in unpack_items(g))
                  for g in unpack_items(data[1:])]
        want = 4 if data[0] == EQ else 5
        if len(groups) != want:
            raise WireError(f"FHE bundle needs {want} groups, found {len(groups)}")
        return cls(data[0], groups[0], groups[1], tuple(groups[2:-1]), groups[-1])


@dataclass
class FheEncryptedPacket:
    """Per-field bit ciphertexts, least significant bit first."""

    bits: list

    @property
    def width(self) -> int:
        return len(self.bits[0])

    def words(self) -> list:
        """Homomorphically recombine the bits into one ciphertext per field."""
        out = []
        for field in self.bits:
            acc = field[0]
            for k, bit in enumerate(field[1:], start=1):
                acc = acc + bit * (1 << k)
            out.append(acc)
        return out


def _selector(pk: MockFhePublicKey, n: int, index: int) -> tuple:
    return tuple(pk.encrypt(int(l == index)) for l in range(1, n + 1))


def fhe_transform(pk: MockFhePublicKey, nf: NetworkFunction, layout: Layout,
                  width: int | None = None) -> TransformedFunction:
    """Encrypt each policy into ``(E(e_i), E(e_j), E(y) | E(a), E(b), E(z))``."""
    check_replace_only(nf)
    nf.validate(layout)
    width = width or layout.max_width
    n = len(layout)
    bundles = []
    for policy in nf:
        m, act = policy.match, policy.action
        if isinstance(m, Equality):
            kind, operands = EQ, (tuple(pk.encrypt_bits(m.y, width)),)
        else:
            kind = RANGE
            operands = (tuple(pk.encrypt_bits(m.a, width)), tuple(pk.encrypt_bits(m.b, width)))
        bundles.append(FheBundle(kind, _selector(pk, n, m.i), _selector(pk, n, act.j), operands,
                                 tuple(pk.encrypt_bits(act.z, width))))
    return TransformedFunction(SchemeId.FHE, tuple(bundles), n)


def fhe_encrypt_packet(pk: MockFhePublicKey, x: Packet, width: int | None = None):
    width = width or x.layout.max_width
    return FheEncryptedPacket([pk.encrypt_bits(v, width) for v in x.values])


def _inner_bits(bits: list, selector: tuple) -> list:
    """Bits of ``<x, e_i>``: for each position, the sum of that bit across fields weighted by e_i."""
    width = len(bits[0])
    out = []
    for t in range(width):
        acc = bits[0][t] * selector[0]
        for l in range(1, len(bits)):
            acc = acc + bits[l][t] * selector[l]
        out.append(acc)
    return out


def fhe_process(phi: TransformedFunction, enc: FheEncryptedPacket) -> FheEncryptedPacket:
    """Apply every encrypted policy in order and return ``E(psi^N(x))``."""
    if phi.scheme != SchemeId.FHE:
        raise ValueError("not an FHE transformed function")
    bits = [list(field) for field in enc.bits]
    n = len(bits)
    if n != phi.n_fields:
        raise ValueError(f"packet has {n} fields, transformed function expects {phi.n_fields}")
    for bundle in phi.bundles:
        if len(bundle.z_bits) != len(bits[0]):
            raise ValueError(f"circuit width mismatch: policy {len(bundle.z_bits)} bits, "
                             f"packet {len(bits[0])} bits")
        selected = _inner_bits(bits, bundle.e_i)
        if bundle.kind == EQ:
            m = equal_bits(selected, bundle.operands[0])
        else:
            m = geq_bits(selected, bundle.operands[0]) * leq_bits(selected, bundle.operands[1])
        for l in range(n):
            gate = m * bundle.e_j[l]
            field = bits[l]
            for t, z in enumerate(bundle.z_bits):
                field[t] = field[t] + gate * (z - field[t])
    return FheEncryptedPacket(bits)


def fhe_decrypt(sk: MockFhePrivateKey, words: list, layout: Layout) -> Packet:
    return Packet(tuple(sk.decrypt(c) for c in words), layout)


def fhe_run(pk, sk, phi: TransformedFunction, x: Packet) -> Packet:
    """``dec(proc(phi, enc(x)))`` in one call."""
    width = len(phi.bundles[0].z_bits)
    return fhe_decrypt(sk, fhe_process(phi, fhe_encrypt_packet(pk, x, width)).words(), x.layout)


def fhe_transformed_from_bytes(data: bytes) -> TransformedFunction:
    from .codec import split_transformed
    scheme, n_fields, raws = split_transformed(data)
    if scheme != SchemeId.FHE:
        raise WireError("not an FHE transformed function")
    return TransformedFunction(scheme, tuple(FheBundle.from_bytes(r) for r in raws), n_fields)
