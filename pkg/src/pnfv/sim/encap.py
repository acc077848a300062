"""Cloud-to-client encapsulation: outer IPv4 header, original frame, PNFV payload.

Wire layout of an encapsulated packet::

    outer IPv4 header (20) | inner frame (14 + inner IP total length) | payload

The payload starts with a 3-byte header: the scheme id in the high nibble
of the first byte, then a 20-bit policy or state-table id, big-endian.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

from ..schemes.codec import SchemeId
from .frames import (IP_SIZE, MAC_SIZE, FrameError, RawFrame, checksum_ok, ip_header, ip_to_int)

PROTO_PNFV = 253  # reserved for experimentation
HEADER_SIZE = 3
MAX_PAYLOAD_ID = (1 << 20) - 1


class EncapError(ValueError):
    """Malformed encapsulated packet or payload header."""


@dataclass(frozen=True)
class PnfvPayload:
    scheme_id: int
    entry_id: int
    body: bytes

    def __post_init__(self):
        if not 0 <= self.scheme_id <= 0xF:
            raise EncapError(f"scheme id {self.scheme_id} does not fit in 4 bits")
        if not 0 <= self.entry_id <= MAX_PAYLOAD_ID:
            raise EncapError(f"id {self.entry_id} does not fit in 20 bits")

    def __len__(self) -> int:
        return HEADER_SIZE + len(self.body)

    def to_bytes(self) -> bytes:
        return ((self.scheme_id << 20) | self.entry_id).to_bytes(HEADER_SIZE, "big") + self.body

    @classmethod
    def from_bytes(cls, data: bytes) -> "PnfvPayload":
        if len(data) < HEADER_SIZE:
            raise EncapError("payload shorter than its header")
        word = int.from_bytes(data[:HEADER_SIZE], "big")
        return cls(word >> 20, word & MAX_PAYLOAD_ID, data[HEADER_SIZE:])

    @property
    def scheme(self) -> SchemeId:
        try:
            return SchemeId(self.scheme_id)
        except ValueError:
            raise EncapError(f"unknown scheme id {self.scheme_id}") from None


@dataclass(frozen=True)
class EncapsulatedPacket:
    outer_ip_header: bytes
    inner: RawFrame
    payload: PnfvPayload

    def __len__(self) -> int:
        return IP_SIZE + len(self.inner) + len(self.payload)

    def to_bytes(self) -> bytes:
        return self.outer_ip_header + self.inner.to_bytes() + self.payload.to_bytes()


def encapsulate(x: RawFrame, p: PnfvPayload, cloud_ip: str, client_ip: str) -> EncapsulatedPacket:
    total = IP_SIZE + len(x) + len(p)
    if total > 0xFFFF:
        raise EncapError(f"encapsulated packet of {total} bytes exceeds the IPv4 limit")
    outer = ip_header(ip_to_int(cloud_ip), ip_to_int(client_ip), PROTO_PNFV, total)
    return EncapsulatedPacket(outer, x, p)


def decapsulate(data: bytes) -> tuple:
    """Split bytes from :func:`encapsulate` back into ``(RawFrame, PnfvPayload)``.

    Raises:
      EncapError: bad outer header, checksum, protocol or lengths.
    """
    if len(data) < IP_SIZE + MAC_SIZE + IP_SIZE + HEADER_SIZE:
        raise EncapError("encapsulated packet is too short")
    outer = data[:IP_SIZE]
    if outer[0] != 0x45 or outer[9] != PROTO_PNFV:
        raise EncapError("outer header is not a PNFV IPv4 header")
    if not checksum_ok(outer):
        raise EncapError("outer header checksum mismatch")
    (total,) = struct.unpack_from(">H", outer, 2)
    if total != len(data):
        raise EncapError(f"outer length field {total} does not match {len(data)} bytes")
    (inner_ip_len,) = struct.unpack_from(">H", data, IP_SIZE + MAC_SIZE + 2)
    inner_end = IP_SIZE + MAC_SIZE + inner_ip_len
    if inner_ip_len < IP_SIZE or inner_end + HEADER_SIZE > len(data):
        raise EncapError("inner frame length is inconsistent with the packet size")
    try:
        frame = RawFrame.from_bytes(data[IP_SIZE:inner_end])
    except FrameError as exc:
        raise EncapError(f"bad inner frame: {exc}") from exc
    return frame, PnfvPayload.from_bytes(data[inner_end:])
