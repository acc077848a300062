"""Binary key files: ``b"PNFV"``, version byte, kind byte, then length-prefixed integers."""
from __future__ import annotations

import struct

from .bgn import BgnPrivateKey, BgnPublicKey
from .group import ExponentGroup
from .peks import PeksPrivateKey, PeksPublicKey
from .pke import PkePrivateKey, PkePublicKey

MAGIC = b"PNFV"
VERSION = 1

_KINDS = {
    1: "bgn-public", 2: "bgn-private",
    3: "peks-public", 4: "peks-private",
    5: "pke-public", 6: "pke-private",
}
_CODES = {v: k for k, v in _KINDS.items()}


class KeyFileError(ValueError):
    pass


def _pack_ints(values) -> bytes:
    out = bytearray()
    for v in values:
        raw = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
        out += struct.pack(">H", len(raw)) + raw
    return bytes(out)


def _unpack_ints(data: bytes) -> list:
    values, pos = [], 0
    while pos < len(data):
        if pos + 2 > len(data):
            raise KeyFileError("truncated key file")
        (size,) = struct.unpack_from(">H", data, pos)
        pos += 2
        if pos + size > len(data):
            raise KeyFileError("truncated key file")
        values.append(int.from_bytes(data[pos:pos + size], "big"))
        pos += size
    return values


def dump_key(key) -> bytes:
    if isinstance(key, BgnPrivateKey):
        pk = key.public_key
        kind, ints = "bgn-private", [pk.n, pk.g, pk.h, pk.message_bound, key.q1]
    elif isinstance(key, BgnPublicKey):
        kind, ints = "bgn-public", [key.n, key.g, key.h, key.message_bound]
    elif isinstance(key, (PeksPrivateKey, PkePrivateKey)):
        pk = key.public_key
        kind = "peks-private" if isinstance(key, PeksPrivateKey) else "pke-private"
        ints = [pk.group.order, pk.g, pk.y, key.secret]
    elif isinstance(key, (PeksPublicKey, PkePublicKey)):
        kind = "peks-public" if isinstance(key, PeksPublicKey) else "pke-public"
        ints = [key.group.order, key.g, key.y]
    else:
        raise TypeError(f"cannot serialize {type(key).__name__}")
    return MAGIC + bytes([VERSION, _CODES[kind]]) + _pack_ints(ints)


def load_key(data: bytes):
    if len(data) < 6 or data[:4] != MAGIC:
        raise KeyFileError("not a PNFV key file")
    if data[4] != VERSION:
        raise KeyFileError(f"unsupported key file version {data[4]}")
    kind = _KINDS.get(data[5])
    if kind is None:
        raise KeyFileError(f"unknown key kind {data[5]}")
    ints = _unpack_ints(data[6:])
    expected = {"bgn-public": 4, "bgn-private": 5}.get(kind, 3 if kind.endswith("public") else 4)
    if len(ints) != expected:
        raise KeyFileError(f"{kind} key needs {expected} fields, found {len(ints)}")
    grp = ExponentGroup(ints[0])
    if kind.startswith("bgn"):
        pk = BgnPublicKey(grp, ints[1], ints[2], ints[3])
        return BgnPrivateKey(pk, ints[4]) if kind == "bgn-private" else pk
    public_cls, private_cls = ((PeksPublicKey, PeksPrivateKey) if kind.startswith("peks")
                               else (PkePublicKey, PkePrivateKey))
    pk = public_cls(grp, ints[1], ints[2])
    return private_cls(pk, ints[3]) if kind.endswith("private") else pk
