"""Wire helpers shared by the schemes: scheme ids and length-prefixed framing."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum


class SchemeId(IntEnum):
    FHE = 1
    BGN = 2
    PEKS = 3
    STATE = 4


class WireError(ValueError):
    """Malformed serialized data."""


def pack_items(items) -> bytes:
    out = bytearray()
    for item in items:
        if len(item) > 0xFFFF:
            raise WireError("item longer than 65535 bytes")
        out += struct.pack(">H", len(item)) + item
    return bytes(out)


def unpack_items(data: bytes) -> list:
    items, pos = [], 0
    while pos < len(data):
        if pos + 2 > len(data):
            raise WireError("truncated item length")
        (size,) = struct.unpack_from(">H", data, pos)
        pos += 2
        if pos + size > len(data):
            raise WireError("truncated item")
        items.append(data[pos:pos + size])
        pos += size
    return items


def split_fixed(data: bytes, size: int) -> list:
    if len(data) % size:
        raise WireError(f"length {len(data)} is not a multiple of {size}")
    return [data[k:k + size] for k in range(0, len(data), size)]


@dataclass(frozen=True)
class TransformedFunction:
    """Encrypted policy bundles, one per policy, as handed to the cloud."""

    scheme: SchemeId
    bundles: tuple
    n_fields: int

    def __len__(self) -> int:
        return len(self.bundles)

    def to_bytes(self) -> bytes:
        """``scheme(1) | n_fields(2) | count(2) | (len(4) | bundle)*``."""
        out = bytearray(struct.pack(">BHH", self.scheme, self.n_fields, len(self.bundles)))
        for b in self.bundles:
            raw = b.to_bytes()
            out += struct.pack(">I", len(raw)) + raw
        return bytes(out)


def split_transformed(data: bytes) -> tuple:
    """Return ``(scheme, n_fields, [bundle bytes])`` from :meth:`TransformedFunction.to_bytes`."""
    if len(data) < 5:
        raise WireError("truncated transformed function")
    scheme, n_fields, count = struct.unpack_from(">BHH", data, 0)
    pos, raws = 5, []
    for _ in range(count):
        if pos + 4 > len(data):
            raise WireError("truncated bundle header")
        (size,) = struct.unpack_from(">I", data, pos)
        pos += 4
        if pos + size > len(data):
            raise WireError("truncated bundle")
        raws.append(data[pos:pos + size])
        pos += size
    if pos != len(data):
        raise WireError("trailing bytes after bundles")
    try:
        scheme = SchemeId(scheme)
    except ValueError:
        raise WireError(f"unknown scheme id {scheme}") from None
    return scheme, n_fields, raws
