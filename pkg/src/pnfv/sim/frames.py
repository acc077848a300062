"""Ethernet/IPv4 frames: parsing, building and the 5-tuple view."""
from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass

from ..netfn import Layout, Packet

MAC_SIZE = 14
IP_SIZE = 20
MIN_FRAME = MAC_SIZE + IP_SIZE
ETHERTYPE_IPV4 = 0x0800

PROTO_TCP = 6
PROTO_UDP = 17

FIN, SYN, RST, PSH, ACK = 0x01, 0x02, 0x04, 0x08, 0x10

FIVE_TUPLE = ("s_ip", "d_ip", "s_port", "d_port", "prot")


class FrameError(ValueError):
    """Frame bytes cannot be parsed."""


class TruncatedFrame(FrameError):
    pass


class NotIPv4(FrameError):
    pass


def ip_checksum(header: bytes) -> int:
    """RFC 791 ones' complement sum over a header whose checksum field is zero."""
    if len(header) % 2:
        header += b"\0"
    total = sum(struct.unpack(f">{len(header) // 2}H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ip_header(src: int, dst: int, proto: int, total_length: int, ttl: int = 64,
              ident: int = 0) -> bytes:
    """A 20-byte IPv4 header with a valid checksum."""
    head = struct.pack(">BBHHHBBHII", 0x45, 0, total_length, ident, 0, ttl, proto, 0, src, dst)
    return head[:10] + struct.pack(">H", ip_checksum(head)) + head[12:]


def checksum_ok(header: bytes) -> bool:
    return ip_checksum(header) == 0


def ip_to_int(addr) -> int:
    return int(ipaddress.IPv4Address(addr))


def int_to_ip(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


@dataclass(frozen=True)
class RawFrame:
    mac_header: bytes
    ip_header: bytes
    payload: bytes = b""

    def __post_init__(self):
        if len(self.mac_header) != MAC_SIZE:
            raise FrameError(f"MAC header must be {MAC_SIZE} bytes")
        if len(self.ip_header) != IP_SIZE:
            raise FrameError(f"IP header must be {IP_SIZE} bytes")

    def __len__(self) -> int:
        return MAC_SIZE + IP_SIZE + len(self.payload)

    def to_bytes(self) -> bytes:
        return self.mac_header + self.ip_header + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "RawFrame":
        """Parse a frame; the IP total-length field decides where it ends.

        Raises:
          TruncatedFrame: fewer bytes than the headers or the length field need.
          NotIPv4: the EtherType or IP version is not IPv4.
        """
        if len(data) < MIN_FRAME:
            raise TruncatedFrame(f"frame of {len(data)} bytes is shorter than {MIN_FRAME}")
        (ethertype,) = struct.unpack_from(">H", data, 12)
        ver_ihl = data[MAC_SIZE]
        if ethertype != ETHERTYPE_IPV4 or ver_ihl >> 4 != 4:
            raise NotIPv4("not an IPv4 frame")
        if ver_ihl & 0xF != 5:
            raise FrameError("IP options are not supported")
        (total,) = struct.unpack_from(">H", data, MAC_SIZE + 2)
        if total < IP_SIZE:
            raise FrameError(f"IP total length {total} is below the header size")
        if MAC_SIZE + total > len(data):
            raise TruncatedFrame("frame is shorter than its IP total length")
        if MAC_SIZE + total != len(data):
            raise FrameError("trailing bytes after the IP packet")
        return cls(data[:MAC_SIZE], data[MAC_SIZE:MIN_FRAME], data[MIN_FRAME:])

    @property
    def protocol(self) -> int:
        return self.ip_header[9]

    @property
    def src_ip(self) -> int:
        return struct.unpack_from(">I", self.ip_header, 12)[0]

    @property
    def dst_ip(self) -> int:
        return struct.unpack_from(">I", self.ip_header, 16)[0]

    @property
    def ports(self) -> tuple:
        if self.protocol in (PROTO_TCP, PROTO_UDP) and len(self.payload) >= 4:
            return struct.unpack_from(">HH", self.payload, 0)
        return 0, 0

    @property
    def tcp_flags(self) -> int:
        if self.protocol == PROTO_TCP and len(self.payload) >= 14:
            return self.payload[13]
        return 0

    def with_five_tuple(self, s_ip: int, d_ip: int, s_port: int, d_port: int,
                        prot: int) -> "RawFrame":
        """Copy with the 5-tuple replaced and the IP checksum recomputed."""
        head = bytearray(self.ip_header)
        head[9] = prot
        struct.pack_into(">II", head, 12, s_ip, d_ip)
        struct.pack_into(">H", head, 10, 0)
        struct.pack_into(">H", head, 10, ip_checksum(bytes(head)))
        payload = self.payload
        if len(payload) >= 4:
            payload = struct.pack(">HH", s_port, d_port) + payload[4:]
        return RawFrame(self.mac_header, bytes(head), payload)


def build_frame(src: str, dst: str, proto: int = PROTO_TCP, sport: int = 0, dport: int = 0,
                flags: int = 0, data: bytes = b"", src_mac: bytes = b"\x02" + b"\0" * 5,
                dst_mac: bytes = b"\x02" + b"\0" * 4 + b"\x01") -> RawFrame:
    """Ethernet + IPv4 + minimal TCP (20 bytes) or UDP (8 bytes) header."""
    if proto == PROTO_TCP:
        l4 = struct.pack(">HHIIBBHHH", sport, dport, 0, 0, 5 << 4, flags, 65535, 0, 0)
    elif proto == PROTO_UDP:
        l4 = struct.pack(">HHHH", sport, dport, 8 + len(data), 0)
    else:
        l4 = b""
    body = l4 + data
    mac = dst_mac + src_mac + struct.pack(">H", ETHERTYPE_IPV4)
    return RawFrame(mac, ip_header(ip_to_int(src), ip_to_int(dst), proto, IP_SIZE + len(body)),
                    body)


def minimal_frame(src: str = "10.0.0.1", dst: str = "10.0.0.2", proto: int = PROTO_TCP) -> RawFrame:
    """A 34-byte frame: MAC and IP headers only."""
    mac = b"\x02" + b"\0" * 4 + b"\x01" + b"\x02" + b"\0" * 5 + struct.pack(">H", ETHERTYPE_IPV4)
    return RawFrame(mac, ip_header(ip_to_int(src), ip_to_int(dst), proto, IP_SIZE))


def fields_from_frame(frame: RawFrame, layout: Layout) -> Packet:
    """Read the 5-tuple into the layout's ``s_ip .. prot`` fields; the rest are zero."""
    s_port, d_port = frame.ports
    named = dict(zip(FIVE_TUPLE, (frame.src_ip, frame.dst_ip, s_port, d_port, frame.protocol)))
    return Packet.from_fields(layout, **named)


def zero_five_tuple(frame: RawFrame) -> RawFrame:
    """What the entry middlebox forwards once the fields are encrypted."""
    return frame.with_five_tuple(0, 0, 0, 0, 0)


def restore_five_tuple(frame: RawFrame, x: Packet) -> RawFrame:
    return frame.with_five_tuple(*(x.get(name) for name in FIVE_TUPLE))


def five_tuple_is_zero(frame: RawFrame) -> bool:
    ports_raw = frame.payload[:4]
    return (frame.src_ip, frame.dst_ip, frame.protocol) == (0, 0, 0) and not any(ports_raw)
