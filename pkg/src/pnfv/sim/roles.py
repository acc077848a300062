"""Entry, cloud and client middleboxes talking over an in-memory fabric.

Each role is a small state machine that reacts to messages; nothing is
shared between roles except what travels through the fabric.  The entry
middlebox only ever holds public keys and the cloud never sees the
client's secret keys.
"""
from __future__ import annotations

import os
import struct
from collections import OrderedDict, deque
from dataclasses import dataclass, field

from ..counters import OpCounts, counting
from ..crypto.bgn import TARGET, BgnPrivateKey, generate_bgn_keypair
from ..crypto.mockfhe import FheCiphertext, generate_mockfhe_keypair
from ..crypto.peks import generate_peks_keypair
from ..crypto.pke import generate_pke_keypair
from ..netfn import Equality, Layout, NetworkFunction, Packet
from ..schemes.bgn import bgn_process, bgn_transform, untag_value
from ..schemes.codec import SchemeId, pack_items, split_fixed, unpack_items
from ..schemes.fhe import (FheEncryptedPacket, fhe_decrypt, fhe_encrypt_packet, fhe_process,
                           fhe_transform)
from ..schemes.peks import (EntryOutput, decode_entry_output, encode_entry_output, field_keyword,
                            parse_field_keyword, peks_cloud_process, peks_decrypt,
                            peks_entry_process, peks_transform)
from ..schemes.state import (STATE_EST, STATE_NEW, TAG_ALLOW, TAG_DROP, StateTable,
                             decode_trapdoors, encode_delete, encode_update, state_create)
from .encap import PnfvPayload, decapsulate, encapsulate
from .frames import (ACK, FIN, FIVE_TUPLE, SYN, RawFrame, fields_from_frame, five_tuple_is_zero,
                     int_to_ip, restore_five_tuple, zero_five_tuple)

ENTRY, CLOUD, CLIENT = "entry", "cloud", "client"
FORWARD, DROP = "forward", "drop"

STATE_NAMES = {STATE_NEW: "new", STATE_EST: "est"}
BGN_GROUP_SIZE = 3 * 32


class PrivacyViolation(AssertionError):
    """A role received data it must never see."""


class PayloadError(ValueError):
    """A PNFV payload is inconsistent with the client's configuration."""


@dataclass(frozen=True)
class Message:
    kind: str
    data: bytes


class Fabric:
    """Ordered, lossless queues, one per directed pair of roles."""

    def __init__(self):
        self._queues = OrderedDict()

    def send(self, src: str, dst: str, kind: str, data: bytes) -> None:
        self._queues.setdefault((src, dst), deque()).append(Message(kind, data))

    def pending(self) -> bool:
        return any(self._queues.values())

    def pop(self) -> tuple:
        """Next message in round-robin order over the directed pairs."""
        for (src, dst), q in self._queues.items():
            if q:
                self._queues.move_to_end((src, dst))
                return src, dst, q.popleft()
        raise IndexError("fabric is empty")


@dataclass(frozen=True)
class TraceEvent:
    time: int
    role: str
    event: str
    detail: str

    def __str__(self) -> str:
        return f"{self.time}\t{self.role}\t{self.event}\t{self.detail}"


@dataclass
class Trace:
    events: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)  # (expected, actual) per injection
    counters: dict = field(default_factory=dict)
    _clock: int = 0

    def record(self, role: str, event: str, detail: str = "") -> None:
        self._clock += 1
        self.events.append(TraceEvent(self._clock, role, event, detail))

    def __len__(self) -> int:
        return len(self.events)

    @property
    def ok(self) -> bool:
        return all(e == a for e, a in self.verdicts)

    def of(self, event: str) -> list:
        return [e for e in self.events if e.event == event]

    def to_text(self) -> str:
        return "".join(f"{e}\n" for e in self.events)


@dataclass
class ClientKeys:
    """All client key pairs; :meth:`public` is what the other roles get."""

    bgn: tuple
    peks: tuple
    pke: tuple
    fhe: tuple

    @classmethod
    def generate(cls) -> "ClientKeys":
        return cls(generate_bgn_keypair(), generate_peks_keypair(), generate_pke_keypair(),
                   generate_mockfhe_keypair())

    def public(self) -> "PublicKeys":
        return PublicKeys(self.bgn[0], self.peks[0], self.pke[0], self.fhe[0])


@dataclass(frozen=True)
class PublicKeys:
    bgn: object
    peks: object
    pke: object
    fhe: object


def _encrypt_virtual(pke_pk, layout: Layout, name: str):
    index = layout.index_of(name)
    return lambda v: pke_pk.encrypt(field_keyword(v, index))


def _counts_detail(c: OpCounts) -> str:
    return " ".join(f"{k}={v}" for k, v in c.as_dict().items())


def _tuple_detail(x: Packet) -> str:
    s_ip, d_ip, sp, dp, prot = (x.get(n) for n in FIVE_TUPLE)
    return f"{int_to_ip(s_ip)}:{sp} > {int_to_ip(d_ip)}:{dp} prot={prot}"


class EntryMB:
    """Encrypts inbound packets with public keys only and forwards them to the cloud."""

    def __init__(self, scheme: SchemeId, keys: PublicKeys, layout: Layout, fabric: Fabric,
                 trace: Trace, stateful: bool = False, prp_key: bytes | None = None):
        self.scheme = scheme
        self.keys = keys
        self.layout = layout
        self.fabric = fabric
        self.trace = trace
        self.stateful = stateful
        self.prp_key = prp_key or os.urandom(32)
        self.counts = OpCounts()

    def _searchable(self, x: Packet) -> EntryOutput:
        return peks_entry_process(x, self.keys.peks, self.keys.pke, self.prp_key)

    def inject(self, raw: bytes) -> None:
        frame = RawFrame.from_bytes(raw)
        x = fields_from_frame(frame, self.layout)
        self.trace.record(ENTRY, "inject", _tuple_detail(x))
        with counting(self.counts):
            if self.scheme == SchemeId.BGN:
                extra = encode_entry_output(self._searchable(x)) if self.stateful else b""
                msg = pack_items([frame.to_bytes(), extra])
            elif self.scheme == SchemeId.PEKS:
                msg = pack_items([zero_five_tuple(frame).to_bytes(),
                                  encode_entry_output(self._searchable(x))])
            else:
                enc = fhe_encrypt_packet(self.keys.fhe, x, self.layout.max_width)
                bits = pack_items(pack_items(c.to_bytes() for c in f) for f in enc.bits)
                extra = encode_entry_output(self._searchable(x)) if self.stateful else b""
                msg = pack_items([zero_five_tuple(frame).to_bytes(), bits, extra])
        self.fabric.send(ENTRY, CLOUD, "packet", msg)


class CloudMB:
    """Holds the transformed function and the state table; never sees secret keys."""

    def __init__(self, scheme: SchemeId, phi, keys: PublicKeys, layout: Layout, fabric: Fabric,
                 trace: Trace, stateful: bool = False, cloud_ip: str = "192.0.2.1",
                 client_ip: str = "198.51.100.1"):
        self.scheme = scheme
        self.phi = phi
        self.keys = keys
        self.layout = layout
        self.fabric = fabric
        self.trace = trace
        self.cloud_ip = cloud_ip
        self.client_ip = client_ip
        self.table = (StateTable(keys.peks, _encrypt_virtual(keys.pke, layout, "id"))
                      if stateful else None)
        self.counts = OpCounts()
        self.static_counts = []

    def handle(self, msg: Message) -> None:
        with counting(self.counts):
            if msg.kind == "packet":
                self._packet(msg.data)
            elif msg.kind == "register":
                trapdoors, enc_s, enc_t = unpack_items(msg.data)
                entry_id = self.table.register(decode_trapdoors(trapdoors), enc_s, enc_t)
                self.trace.record(CLOUD, "state-register", f"id={entry_id}")
                self.fabric.send(CLOUD, CLIENT, "registered", struct.pack(">I", entry_id))
            elif msg.kind == "state":
                entry_id, op = struct.unpack_from(">IB", msg.data)
                self.table.apply_message(msg.data)
                self.trace.record(CLOUD, "state-update" if op == 1 else "state-delete",
                                  f"id={entry_id}")
            else:
                raise ValueError(f"cloud cannot handle message {msg.kind!r}")

    def _packet(self, data: bytes) -> None:
        parts = unpack_items(data)
        frame = RawFrame.from_bytes(parts[0])
        if self.scheme != SchemeId.BGN and not five_tuple_is_zero(frame):
            raise PrivacyViolation("cloud received a frame with a plaintext 5-tuple")
        searchable = None
        if self.scheme == SchemeId.PEKS:
            searchable = decode_entry_output(parts[1])
        elif self.table is not None and parts[-1]:
            searchable = decode_entry_output(parts[-1])
        if self.table is not None:
            hit = self.table.match(searchable.searchable)
            if hit is not None:
                self.static_counts.append(OpCounts())
                self.trace.record(CLOUD, "state-hit", f"id={hit.entry_id} static_ops=0")
                fields = self._fields_for_client(parts, searchable)
                body = pack_items([hit.enc_id, hit.enc_state, hit.enc_tag, *fields])
                self._emit(frame, PnfvPayload(SchemeId.STATE, hit.entry_id, body))
                return
            self.trace.record(CLOUD, "state-miss")
        with counting() as static:
            payload = self._static(frame, parts, searchable)
        self.static_counts.append(static)
        self.trace.record(CLOUD, "static", _counts_detail(static))
        self._emit(frame, payload)

    def _fields_for_client(self, parts, searchable) -> list:
        if self.scheme == SchemeId.PEKS:
            return list(searchable.encrypted)
        if self.scheme == SchemeId.FHE:
            bits = [[FheCiphertext.from_bytes(c) for c in unpack_items(f)]
                    for f in unpack_items(parts[1])]
            return [c.to_bytes() for c in FheEncryptedPacket(bits).words()]
        return []

    def _static(self, frame: RawFrame, parts, searchable) -> PnfvPayload:
        if self.scheme == SchemeId.BGN:
            x = fields_from_frame(frame, self.layout)
            r = bgn_process(self.keys.bgn, self.phi, x, with_actions=False)
            body = b"".join(a.to_bytes() + d.to_bytes() + c.to_bytes()
                            for a, d, c in zip(r.allow, r.deny, r.matches))
            return PnfvPayload(SchemeId.BGN, 0, body)
        if self.scheme == SchemeId.PEKS:
            cts = peks_cloud_process(self.phi, self.keys.peks, searchable)
            return PnfvPayload(SchemeId.PEKS, 0, pack_items(cts))
        bits = [[FheCiphertext.from_bytes(c) for c in unpack_items(f)]
                for f in unpack_items(parts[1])]
        words = fhe_process(self.phi, FheEncryptedPacket(bits)).words()
        return PnfvPayload(SchemeId.FHE, 0, pack_items(c.to_bytes() for c in words))

    def _emit(self, frame: RawFrame, payload: PnfvPayload) -> None:
        pkt = encapsulate(frame, payload, self.cloud_ip, self.client_ip)
        self.trace.record(CLOUD, "encapsulate", f"bytes={len(pkt)} scheme={payload.scheme.name}")
        self.fabric.send(CLOUD, CLIENT, "encap", pkt.to_bytes())


def bgn_client_verdict(sk: BgnPrivateKey, nf: NetworkFunction, payload: PnfvPayload,
                       x: Packet) -> tuple:
    """Verdict from the compact ``(allow, deny, c)`` groups of a BGN payload.

    Policies are walked in order; each match opens the deny branch
    ``E(z||j)`` and writes ``z`` into field ``j``.  Without any match the
    allow branch of the first group is opened and checked against ``x``.

    Returns:
      ``(verdict, packet)`` with verdict ``"forward"`` or ``"drop"``.
    """
    if payload.scheme != SchemeId.BGN:
        raise PayloadError(f"expected a BGN payload, got scheme {payload.scheme_id}")
    pk = sk.public_key
    groups = split_fixed(payload.body, BGN_GROUP_SIZE)
    if len(groups) != len(nf):
        raise PayloadError(f"payload carries {len(groups)} groups for {len(nf)} policies")
    cur, matched = x, False
    for policy, raw in zip(nf, groups):
        allow, deny, c = (pk.from_bytes(raw[k:k + 32], TARGET) for k in (0, 32, 64))
        if isinstance(policy.match, Equality):
            hit = sk.is_value(c, 1)
        else:
            hit = sk.decrypt(c, signed=True) >= 0
        if hit:
            z, j = untag_value(sk.decrypt(deny))
            if j != policy.action.j:
                raise PayloadError("deny branch names a different field than the policy")
            cur, matched = cur.replace(j, z), True
    if not matched:
        allow = pk.from_bytes(groups[0][:32], TARGET)
        value, j = untag_value(sk.decrypt(allow))
        if (value, j) != (x[nf.policies[0].action.j], nf.policies[0].action.j):
            raise PayloadError("allow branch does not match the received packet")
    return (DROP if cur.get("tag") == TAG_DROP else FORWARD), cur


class ClientMB:
    """Owns the secret keys and the plaintext policy list; decides verdicts."""

    def __init__(self, scheme: SchemeId, keys: ClientKeys, nf: NetworkFunction, layout: Layout,
                 fabric: Fabric, trace: Trace, stateful: bool = False):
        self.scheme = scheme
        self.keys = keys
        self.nf = nf
        self.layout = layout
        self.fabric = fabric
        self.trace = trace
        self.stateful = stateful
        self.counts = OpCounts()
        self.delivered = []
        self.state_names = {}

    def transform(self):
        """Build the transformed function handed to the cloud."""
        with counting(self.counts):
            if self.scheme == SchemeId.BGN:
                return bgn_transform(self.keys.bgn[0], self.nf, self.layout, tagged=True)
            if self.scheme == SchemeId.PEKS:
                return peks_transform(self.keys.peks[1], self.keys.pke[0], self.nf, self.layout)
            return fhe_transform(self.keys.fhe[0], self.nf, self.layout)

    def handle(self, msg: Message) -> None:
        with counting(self.counts):
            if msg.kind == "encap":
                self._packet(msg.data)
            elif msg.kind == "registered":
                (entry_id,) = struct.unpack(">I", msg.data)
                self.state_names[entry_id] = "new"
                self.trace.record(CLIENT, "state", f"new id={entry_id}")
            else:
                raise ValueError(f"client cannot handle message {msg.kind!r}")

    def _pke_value(self, ct: bytes, name: str) -> int:
        value, index = parse_field_keyword(self.keys.pke[1].decrypt(ct))
        if index != self.layout.index_of(name):
            raise PayloadError(f"ciphertext for {name} carries index {index}")
        return value

    def _fields(self, frame: RawFrame, items) -> Packet:
        if self.scheme == SchemeId.PEKS:
            return peks_decrypt(self.keys.pke[1], items, self.layout)
        if self.scheme == SchemeId.FHE:
            cts = [FheCiphertext.from_bytes(c) for c in items]
            return fhe_decrypt(self.keys.fhe[1], cts, self.layout)
        return fields_from_frame(frame, self.layout)

    def _packet(self, data: bytes) -> None:
        frame, payload = decapsulate(data)
        scheme = payload.scheme
        if scheme == SchemeId.STATE:
            items = unpack_items(payload.body)
            entry_id = self._pke_value(items[0], "id")
            state = self._pke_value(items[1], "state")
            tag = self._pke_value(items[2], "tag")
            if entry_id != payload.entry_id:
                raise PayloadError("encrypted id differs from the payload header")
            x = self._fields(frame, items[3:])
            verdict = DROP if tag == TAG_DROP else FORWARD
        elif scheme != self.scheme:
            raise PayloadError(f"unexpected scheme {scheme.name}")
        elif scheme == SchemeId.BGN:
            verdict, x = bgn_client_verdict(self.keys.bgn[1], self.nf, payload,
                                            fields_from_frame(frame, self.layout))
        else:
            x = self._fields(frame, unpack_items(payload.body))
            verdict = DROP if x.get("tag") == TAG_DROP else FORWARD
        out = restore_five_tuple(frame, x)
        self.trace.record(CLIENT, "verdict", f"{verdict} {_tuple_detail(x)}")
        if verdict == FORWARD:
            self.delivered.append(out)
        if self.stateful:
            self._lifecycle(out, payload, state if scheme == SchemeId.STATE else None, x, verdict)
        self._last_verdict = verdict

    def _lifecycle(self, frame: RawFrame, payload: PnfvPayload, state, x: Packet,
                   verdict: str) -> None:
        flags = frame.tcp_flags
        pke_pk = self.keys.pke[0]
        if state is None:
            if verdict == FORWARD and flags & SYN and not flags & ACK:
                trapdoors, enc_s, enc_t = state_create(
                    self.keys.peks[1], _encrypt_virtual(pke_pk, self.layout, "state"),
                    _encrypt_virtual(pke_pk, self.layout, "tag"), x, range(1, 6),
                    STATE_NEW, TAG_ALLOW)
                body = pack_items([b"".join(t.to_bytes() for t in trapdoors), enc_s, enc_t])
                self.fabric.send(CLIENT, CLOUD, "register", body)
            return
        entry_id = payload.entry_id
        if flags & FIN and flags & ACK:
            self.fabric.send(CLIENT, CLOUD, "state", encode_delete(entry_id))
            self.state_names.pop(entry_id, None)
            self.trace.record(CLIENT, "state", f"deleted id={entry_id}")
        elif flags & ACK and not flags & SYN and state == STATE_NEW:
            enc_s = _encrypt_virtual(pke_pk, self.layout, "state")(STATE_EST)
            self.fabric.send(CLIENT, CLOUD, "state", encode_update(entry_id, enc_s))
            self.state_names[entry_id] = "est"
            self.trace.record(CLIENT, "state", f"est id={entry_id}")

    def take_verdict(self) -> str:
        return self.__dict__.pop("_last_verdict", None)


__all__ = [
    "CLIENT", "CLOUD", "ClientKeys", "ClientMB", "CloudMB", "DROP", "ENTRY", "EntryMB", "FORWARD",
    "Fabric", "Message", "PayloadError", "PrivacyViolation", "PublicKeys", "Trace", "TraceEvent",
    "bgn_client_verdict",
]
