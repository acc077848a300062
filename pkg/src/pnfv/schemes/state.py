"""Private firewall state table kept by the cloud.

The client creates an entry for a connection from trapdoors of the
identifying fields ``T(x_l||l)`` (shuffled), an encrypted state and an
encrypted tag.  The cloud matches incoming packets by testing the
trapdoors against the searchable field encryptions: an entry hits only if
every one of its trapdoors matches some field.  On a hit the cloud returns
``E(id), E(s), E(t)`` and no static policy is evaluated.

Ciphertexts for ``s``, ``t`` and ``id`` are opaque bytes here, so the table
works with whichever client encryption the deployment uses.
"""
from __future__ import annotations

import itertools
import os
import struct
import threading
from dataclasses import dataclass

from ..crypto.peks import PeksPrivateKey, PeksPublicKey, Trapdoor
from ..crypto.prp import prp_shuffle
from ..netfn import Packet
from .peks import field_keyword

STATE_NEW = 1
STATE_EST = 2
TAG_ALLOW = 1
TAG_DROP = 2

MAX_ID = (1 << 20) - 1

OP_UPDATE = 1
OP_DELETE = 2


class UnknownEntry(KeyError):
    """No entry with this id."""


@dataclass(frozen=True)
class StateTableEntry:
    id: int
    trapdoors: tuple
    enc_state: bytes
    enc_tag: bytes


@dataclass(frozen=True)
class StateHit:
    """What the cloud appends to the packet on a hit."""

    entry_id: int
    enc_id: bytes
    enc_state: bytes
    enc_tag: bytes


def state_create(peks_sk: PeksPrivateKey, encrypt_state, encrypt_tag, x: Packet, fields,
                 state: int, tag: int, prp_key: bytes | None = None,
                 nonce: bytes | None = None) -> tuple:
    """Client side: build ``(trapdoors, E(s), E(t))`` for a new connection.

    Args:
      peks_sk: client PEKS key, used for the trapdoors.
      encrypt_state, encrypt_tag: callables turning the state and the tag
        into ciphertext bytes.
      x: the packet that opened the connection.
      fields: 1-based indices identifying the connection, e.g. the 5-tuple.
      state, tag: initial state and tag values.
      prp_key, nonce: shuffle key and nonce; random when omitted.
    """
    fields = list(fields)
    if not fields:
        raise ValueError("a state entry needs at least one identifying field")
    trapdoors = [peks_sk.trapdoor(field_keyword(x[l], l)) for l in fields]
    sigma = prp_shuffle(prp_key or os.urandom(32), nonce or os.urandom(16), len(trapdoors))
    return tuple(sigma.apply(trapdoors)), encrypt_state(state), encrypt_tag(tag)


class StateTable:
    """Cloud-held table; lookups run concurrently, writes are serialized.

    Args:
      peks_pk: public PEKS key for the trapdoor tests.
      encrypt_id: callable turning an entry id into client ciphertext bytes.
    """

    def __init__(self, peks_pk: PeksPublicKey, encrypt_id):
        self.peks_pk = peks_pk
        self._encrypt_id = encrypt_id
        self._entries = {}
        self._ids = itertools.count(1)
        self._write = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, entry_id: int) -> bool:
        return entry_id in self._entries

    def get(self, entry_id: int) -> StateTableEntry:
        try:
            return self._entries[entry_id]
        except KeyError:
            raise UnknownEntry(entry_id) from None

    def register(self, trapdoors, enc_state: bytes, enc_tag: bytes) -> int:
        trapdoors = tuple(trapdoors)
        if not trapdoors:
            raise ValueError("a state entry needs at least one trapdoor")
        with self._write:
            entry_id = next(self._ids)
            while entry_id in self._entries:
                entry_id = next(self._ids)
            if entry_id > MAX_ID:
                raise OverflowError("state table id space exhausted")
            entries = dict(self._entries)
            entries[entry_id] = StateTableEntry(entry_id, trapdoors, enc_state, enc_tag)
            self._entries = entries
        return entry_id

    def match(self, searchable) -> StateHit | None:
        """Return the first entry whose every trapdoor matches some field, else ``None``."""
        test = self.peks_pk.test
        searchable = list(searchable)
        for entry in list(self._entries.values()):
            if all(any(test(ct, td) for ct in searchable) for td in entry.trapdoors):
                return StateHit(entry.id, self._encrypt_id(entry.id), entry.enc_state,
                                entry.enc_tag)
        return None

    def update(self, entry_id: int, enc_state: bytes) -> None:
        with self._write:
            old = self.get(entry_id)
            entries = dict(self._entries)
            entries[entry_id] = StateTableEntry(entry_id, old.trapdoors, enc_state, old.enc_tag)
            self._entries = entries

    def delete(self, entry_id: int) -> None:
        with self._write:
            self.get(entry_id)
            entries = dict(self._entries)
            del entries[entry_id]
            self._entries = entries

    def apply_message(self, data: bytes) -> None:
        """Apply an encoded update or delete message from the client."""
        entry_id, op, body = decode_state_message(data)
        if op == OP_UPDATE:
            self.update(entry_id, body)
        else:
            self.delete(entry_id)


def encode_update(entry_id: int, enc_state: bytes) -> bytes:
    """``id(4) | op=1 | E(s')``."""
    return struct.pack(">IB", entry_id, OP_UPDATE) + enc_state


def encode_delete(entry_id: int) -> bytes:
    """``id(4) | op=2``."""
    return struct.pack(">IB", entry_id, OP_DELETE)


def decode_state_message(data: bytes) -> tuple:
    if len(data) < 5:
        raise ValueError("truncated state message")
    entry_id, op = struct.unpack_from(">IB", data, 0)
    body = data[5:]
    if op == OP_UPDATE and body:
        return entry_id, op, body
    if op == OP_DELETE and not body:
        return entry_id, op, b""
    raise ValueError(f"malformed state message (op={op}, {len(body)} body bytes)")


def decode_trapdoors(data: bytes) -> tuple:
    size = 32
    if len(data) % size:
        raise ValueError("trapdoor list length is not a multiple of 32")
    return tuple(Trapdoor.from_bytes(data[k:k + size]) for k in range(0, len(data), size))
