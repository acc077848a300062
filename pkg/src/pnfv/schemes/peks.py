"""Network functions via searchable encryption (equality policies only).

The entry middlebox encrypts every field twice, once for the client
(``E(x_l||l)``, public-key encryption) and once for search
(``Ɛ(x_l||l)``, PEKS), plus a searchable copy of the bare index ``Ɛ(l)``.
All three vectors are shuffled with the same per-packet permutation.

For each policy ``x_i == y -> x_j <- z`` the cloud holds the trapdoors
``T(y||i)`` and ``T(j)`` and the client-encrypted replacement ``E(z||j)``.
If some shuffled field matches ``T(y||i)`` it finds the slot whose index
matches ``T(j)`` and swaps in ``E(z||j)``.  The cloud learns which policy
fired but not ``x``, ``y`` or ``z``.

To keep later policies consistent with earlier rewrites, each bundle also
carries ``Ɛ(z||j)``, which replaces the searchable copy of the rewritten
slot.  The client decrypts exactly ``n`` ciphertexts whatever happens.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

from ..crypto.peks import PeksCiphertext, PeksPrivateKey, PeksPublicKey, Trapdoor
from ..crypto.pke import PkePrivateKey, PkePublicKey
from ..crypto.prp import prp_shuffle
from ..netfn import Equality, Layout, NetworkFunction, Packet, check_replace_only
from .codec import SchemeId, TransformedFunction, WireError, pack_items, split_transformed, unpack_items

VALUE_SIZE = 4
INDEX_SIZE = 2


class UnsupportedPolicy(ValueError):
    """The scheme cannot express this policy type."""


class CorruptedTransform(RuntimeError):
    """A policy matched but no slot carries its action index."""


class CorruptedPacket(ValueError):
    """Decrypted field indices are missing or duplicated."""


def field_keyword(value: int, index: int) -> bytes:
    """``value || index``: 4-byte big-endian value then 2-byte big-endian index."""
    return value.to_bytes(VALUE_SIZE, "big") + index.to_bytes(INDEX_SIZE, "big")


def index_keyword(index: int) -> bytes:
    return index.to_bytes(INDEX_SIZE, "big")


def parse_field_keyword(data: bytes) -> tuple:
    if len(data) != VALUE_SIZE + INDEX_SIZE:
        raise CorruptedPacket(f"field plaintext must be {VALUE_SIZE + INDEX_SIZE} bytes")
    return int.from_bytes(data[:VALUE_SIZE], "big"), int.from_bytes(data[VALUE_SIZE:], "big")


@dataclass(frozen=True)
class PeksBundle:
    match_trapdoor: Trapdoor
    index_trapdoor: Trapdoor
    replacement: bytes
    searchable_replacement: PeksCiphertext

    def to_bytes(self) -> bytes:
        return pack_items([self.match_trapdoor.to_bytes(), self.index_trapdoor.to_bytes(),
                           self.replacement, self.searchable_replacement.to_bytes()])

    @classmethod
    def from_bytes(cls, data: bytes) -> "PeksBundle":
        items = unpack_items(data)
        if len(items) != 4:
            raise WireError("PEKS bundle needs 4 items")
        return cls(Trapdoor.from_bytes(items[0]), Trapdoor.from_bytes(items[1]), items[2],
                   PeksCiphertext.from_bytes(items[3]))


@dataclass(frozen=True)
class EntryOutput:
    """The three shuffled vectors the entry middlebox sends to the cloud."""

    encrypted: tuple
    searchable: tuple
    searchable_index: tuple

    def __len__(self) -> int:
        return len(self.encrypted)


def peks_transform(peks_sk: PeksPrivateKey, pke_pk: PkePublicKey, nf: NetworkFunction,
                   layout: Layout) -> TransformedFunction:
    """Client side: trapdoors and encrypted replacements for each policy.

    Raises:
      UnsupportedPolicy: ``nf`` contains a range policy.
    """
    check_replace_only(nf)
    nf.validate(layout)
    peks_pk = peks_sk.public_key
    bundles = []
    for policy in nf:
        m, act = policy.match, policy.action
        if not isinstance(m, Equality):
            raise UnsupportedPolicy("searchable-encryption scheme supports equality policies only")
        kw = field_keyword(act.z, act.j)
        bundles.append(PeksBundle(peks_sk.trapdoor(field_keyword(m.y, m.i)),
                                  peks_sk.trapdoor(index_keyword(act.j)),
                                  pke_pk.encrypt(kw), peks_pk.encrypt(kw)))
    return TransformedFunction(SchemeId.PEKS, tuple(bundles), len(layout))


def peks_entry_process(x: Packet, peks_pk: PeksPublicKey, pke_pk: PkePublicKey,
                       prp_key: bytes, nonce: bytes | None = None) -> EntryOutput:
    """Entry side: encrypt, index and shuffle every field with one permutation.

    Only public keys are involved.  A fresh random nonce is drawn when none
    is given.
    """
    nonce = os.urandom(16) if nonce is None else nonce
    sigma = prp_shuffle(prp_key, nonce, len(x))
    enc, srch, idx = [], [], []
    for l, v in enumerate(x.values, 1):
        kw = field_keyword(v, l)
        enc.append(pke_pk.encrypt(kw))
        srch.append(peks_pk.encrypt(kw))
        idx.append(peks_pk.encrypt(index_keyword(l)))
    return EntryOutput(tuple(sigma.apply(enc)), tuple(sigma.apply(srch)), tuple(sigma.apply(idx)))


def peks_cloud_process(phi: TransformedFunction, peks_pk: PeksPublicKey,
                       entry: EntryOutput) -> tuple:
    """Apply the policies in order; return the ``n`` client ciphertexts.

    Raises:
      CorruptedTransform: a match trapdoor fired but no slot matches the
        action index trapdoor.
    """
    if phi.scheme != SchemeId.PEKS:
        raise ValueError("not a PEKS transformed function")
    if len(entry) != phi.n_fields:
        raise ValueError(f"packet has {len(entry)} fields, transformed function expects {phi.n_fields}")
    encrypted = list(entry.encrypted)
    searchable = list(entry.searchable)
    test = peks_pk.test
    for bundle in phi.bundles:
        if not any(test(ct, bundle.match_trapdoor) for ct in searchable):
            continue
        for slot, ct in enumerate(entry.searchable_index):
            if test(ct, bundle.index_trapdoor):
                break
        else:
            raise CorruptedTransform("policy matched but its action index is absent")
        encrypted[slot] = bundle.replacement
        searchable[slot] = bundle.searchable_replacement
    return tuple(encrypted)


def peks_decrypt(pke_sk: PkePrivateKey, ciphertexts, layout: Layout) -> Packet:
    """Decrypt the shuffled ``x_l||l`` pairs and put them back in index order.

    Raises:
      CorruptedPacket: an index is missing, duplicated or out of range.
    """
    values = {}
    for ct in ciphertexts:
        v, l = parse_field_keyword(pke_sk.decrypt(ct))
        if l in values or not 1 <= l <= len(layout):
            raise CorruptedPacket(f"unexpected or duplicated field index {l}")
        values[l] = v
    if len(values) != len(layout):
        raise CorruptedPacket(f"expected {len(layout)} fields, got {len(values)}")
    return Packet(tuple(values[l] for l in range(1, len(layout) + 1)), layout)


def encode_entry_output(entry: EntryOutput) -> bytes:
    """``n(2) | encrypted | searchable | searchable_index``, each as length-prefixed items."""
    parts = [pack_items(entry.encrypted), pack_items(c.to_bytes() for c in entry.searchable),
             pack_items(c.to_bytes() for c in entry.searchable_index)]
    return struct.pack(">H", len(entry)) + pack_items(parts)


def decode_entry_output(data: bytes) -> EntryOutput:
    if len(data) < 2:
        raise WireError("truncated entry output")
    (n,) = struct.unpack_from(">H", data, 0)
    parts = unpack_items(data[2:])
    if len(parts) != 3:
        raise WireError("entry output needs three vectors")
    enc = tuple(unpack_items(parts[0]))
    srch = tuple(PeksCiphertext.from_bytes(c) for c in unpack_items(parts[1]))
    idx = tuple(PeksCiphertext.from_bytes(c) for c in unpack_items(parts[2]))
    if not len(enc) == len(srch) == len(idx) == n:
        raise WireError("entry output vectors have inconsistent lengths")
    return EntryOutput(enc, srch, idx)


def peks_transformed_from_bytes(data: bytes) -> TransformedFunction:
    scheme, n_fields, raws = split_transformed(data)
    if scheme != SchemeId.PEKS:
        raise WireError("not a PEKS transformed function")
    return TransformedFunction(scheme, tuple(PeksBundle.from_bytes(r) for r in raws), n_fields)
