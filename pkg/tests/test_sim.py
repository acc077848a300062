import random
import struct
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from pnfv.netfn import Layout, evaluate, parse_policy_file
from pnfv.schemes.codec import SchemeId, unpack_items
from pnfv.sim import (EncapError, NotIPv4, PnfvPayload, RawFrame, ScenarioError, Simulator,
                      TruncatedFrame, build_frame, decapsulate, encapsulate, fields_from_frame,
                      minimal_frame, parse_script, run_scenario, run_scenario_file)
from pnfv.sim.frames import (ACK, FIN, SYN, checksum_ok, five_tuple_is_zero, int_to_ip,
                             restore_five_tuple, zero_five_tuple)
from pnfv.sim.roles import CLOUD, ENTRY, PrivacyViolation

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
IPV4 = Layout.ipv4()


# -- frames --------------------------------------------------------------------

def test_fields_from_tcp_frame():
    f = build_frame("10.0.0.1", "10.0.0.2", 6, 120, 121)
    x = fields_from_frame(RawFrame.from_bytes(f.to_bytes()), IPV4)
    assert x.values[:5] == (0x0A000001, 0x0A000002, 120, 121, 6)
    assert x.values[5:] == (0, 0, 0)


def test_fields_from_udp_frame():
    f = build_frame("10.0.0.1", "10.0.0.2", 17, 53, 5353)
    assert fields_from_frame(f, IPV4).get("prot") == 17


def test_truncated_frame():
    raw = minimal_frame().to_bytes()
    assert len(raw) == 34
    with pytest.raises(TruncatedFrame):
        RawFrame.from_bytes(raw[:33])


def test_non_ipv4_frame():
    raw = bytearray(minimal_frame().to_bytes())
    raw[12:14] = b"\x86\xdd"
    with pytest.raises(NotIPv4):
        RawFrame.from_bytes(bytes(raw))


def test_zero_and_restore_five_tuple():
    f = build_frame("10.1.2.3", "10.9.8.7", 6, 1000, 80, flags=SYN)
    z = zero_five_tuple(f)
    assert five_tuple_is_zero(z) and checksum_ok(z.ip_header)
    assert restore_five_tuple(z, fields_from_frame(f, IPV4)) == f


# -- encapsulation -------------------------------------------------------------

def test_encapsulated_size_example():
    p = PnfvPayload(SchemeId.BGN, 0, bytes(96))
    pkt = encapsulate(minimal_frame(), p, "192.0.2.1", "198.51.100.1")
    assert len(pkt) == len(pkt.to_bytes()) == 20 + 34 + 99 == 153
    assert decapsulate(pkt.to_bytes()) == (minimal_frame(), p)


def test_payload_id_limits():
    assert PnfvPayload(SchemeId.STATE, 2**20 - 1, b"").to_bytes()[:3] == b"\x4f\xff\xff"
    with pytest.raises(EncapError):
        PnfvPayload(SchemeId.STATE, 2**20, b"")


def test_decapsulate_rejects_damage():
    raw = bytearray(encapsulate(minimal_frame(), PnfvPayload(1, 5, b"ab"), "1.2.3.4",
                                "5.6.7.8").to_bytes())
    for mutate in (lambda b: b.__setitem__(9, 6), lambda b: b.__setitem__(10, b[10] ^ 1),
                   lambda b: b.append(0)):
        bad = bytearray(raw)
        mutate(bad)
        with pytest.raises(EncapError):
            decapsulate(bytes(bad))
    with pytest.raises(EncapError):
        decapsulate(bytes(raw[:40]))


ips = st.integers(0, 2**32 - 1).map(int_to_ip)


@settings(max_examples=200, deadline=None)
@given(src=ips, dst=ips, proto=st.sampled_from([6, 17, 1]), sport=st.integers(0, 65535),
       dport=st.integers(0, 65535), data=st.binary(max_size=64),
       scheme=st.integers(0, 15), entry_id=st.integers(0, 2**20 - 1),
       body=st.binary(max_size=300))
def test_encapsulation_round_trip(src, dst, proto, sport, dport, data, scheme, entry_id, body):
    frame = build_frame(src, dst, proto, sport, dport, data=data)
    p = PnfvPayload(scheme, entry_id, body)
    raw = encapsulate(frame, p, "192.0.2.1", "198.51.100.1").to_bytes()
    assert len(raw) == 20 + len(frame) + 3 + len(body)
    assert decapsulate(raw) == (frame, p)


# -- scenarios -----------------------------------------------------------------

@pytest.mark.parametrize("name", ["firewall.scn", "nat.scn", "tcp_handshake.scn"])
def test_bundled_scenarios(name, client_keys):
    trace = run_scenario_file(SCENARIOS / name, client_keys)
    assert trace.verdicts and trace.ok, trace.to_text()


def test_tcp_scenario_lifecycle(client_keys):
    trace = run_scenario_file(SCENARIOS / "tcp_handshake.scn", client_keys)
    states = [e.detail.split()[0] for e in trace.of("state")]
    assert states == ["new", "est", "deleted"]
    assert all(e.detail.endswith("static_ops=0") for e in trace.of("state-hit"))
    assert len(trace.of("state-hit")) == 3


def test_scenario_trace_format(client_keys):
    trace = run_scenario_file(SCENARIOS / "firewall.scn", client_keys)
    times = [e.time for e in trace.events]
    assert times == sorted(times) and len(set(times)) == len(times)
    for line in trace.to_text().splitlines():
        assert len(line.split("\t")) == 4


def test_empty_script():
    trace = run_scenario("")
    assert len(trace) == 0 and trace.ok


def test_script_errors(tmp_path):
    with pytest.raises(ScenarioError, match="not found"):
        parse_script("policies missing.policy", tmp_path)
    with pytest.raises(ScenarioError):
        parse_script("scheme rsa", tmp_path)
    with pytest.raises(ScenarioError):
        parse_script("inject 0a0 expect forward", tmp_path)
    with pytest.raises(ScenarioError):
        run_scenario("inject 00 expect drop", tmp_path)


def test_bgn_scenario_rejects_chained_policies(client_keys):
    nf = parse_policy_file("eq 1 1 set 2 5\neq 2 5 set 6 2\n", IPV4)
    with pytest.raises(ScenarioError):
        Simulator(SchemeId.BGN, nf, keys=client_keys)


# -- role invariants -----------------------------------------------------------

@pytest.mark.parametrize("scheme", [SchemeId.PEKS, SchemeId.FHE])
def test_cloud_never_sees_plaintext_five_tuple(scheme, client_keys):
    nf = parse_policy_file("eq 1 127.0.0.1 set 6 2\n", IPV4)
    sim = Simulator(scheme, nf, keys=client_keys)
    seen = []
    send = sim.fabric.send

    def spy(src, dst, kind, data):
        if src == ENTRY and dst == CLOUD:
            seen.append(RawFrame.from_bytes(unpack_items(data)[0]))
        send(src, dst, kind, data)

    sim.fabric.send = spy
    for src in ["127.0.0.1", "10.0.0.1"]:
        sim.inject(build_frame(src, "10.0.0.2", 6, 4000, 80).to_bytes())
    assert len(seen) == 2 and all(five_tuple_is_zero(f) for f in seen)


def test_cloud_rejects_plaintext_five_tuple(client_keys):
    from pnfv.schemes.codec import pack_items
    from pnfv.schemes.peks import encode_entry_output, peks_entry_process
    nf = parse_policy_file("eq 1 127.0.0.1 set 6 2\n", IPV4)
    sim = Simulator(SchemeId.PEKS, nf, keys=client_keys)
    frame = build_frame("10.0.0.1", "10.0.0.2", 6, 1, 2)
    entry = peks_entry_process(fields_from_frame(frame, IPV4), client_keys.peks[0],
                               client_keys.pke[0], b"k" * 32)
    sim.fabric.send(ENTRY, CLOUD, "packet", pack_items([frame.to_bytes(),
                                                        encode_entry_output(entry)]))
    with pytest.raises(PrivacyViolation):
        sim.run_until_idle()


def _random_frame(rng):
    src = "127.0.0.1" if rng.random() < 0.5 else int_to_ip(rng.getrandbits(32))
    proto = rng.choice([6, 17])
    return build_frame(src, int_to_ip(rng.getrandbits(32)), proto, rng.getrandbits(16),
                       rng.getrandbits(16))


@pytest.mark.parametrize("scheme, count", [(SchemeId.BGN, 500), (SchemeId.PEKS, 500),
                                           (SchemeId.FHE, 100)])
def test_firewall_matches_plaintext_oracle(scheme, count, client_keys):
    nf = parse_policy_file((SCENARIOS / "firewall.policy").read_text(), IPV4)
    sim = Simulator(scheme, nf, keys=client_keys)
    rng = random.Random(int(scheme))
    for _ in range(count):
        frame = _random_frame(rng)
        x = fields_from_frame(frame, IPV4)
        expected = "drop" if evaluate(nf, x).get("tag") == 2 else "forward"
        assert sim.inject(frame.to_bytes()) == expected


def test_nat_rewrites_delivered_frame(client_keys):
    nf = parse_policy_file((SCENARIOS / "nat.policy").read_text(), IPV4)
    sim = Simulator(SchemeId.PEKS, nf, keys=client_keys)
    sim.inject(build_frame("198.51.100.7", "203.0.113.5", 6, 5555, 8080).to_bytes())
    out = sim.client.delivered[-1]
    assert out.ports == (5555, 80) and int_to_ip(out.dst_ip) == "10.0.0.80"
    assert checksum_ok(out.ip_header)


def test_stateful_hits_skip_static_policies(client_keys):
    nf = parse_policy_file("eq 4 23 set 6 2\n", IPV4)
    sim = Simulator(SchemeId.PEKS, nf, stateful=True, keys=client_keys)
    flows = [build_frame("10.0.0.1", "10.0.0.2", 6, 40000, 80, flags=f).to_bytes()
             for f in (SYN, ACK, ACK, FIN | ACK)]
    for raw in flows:
        assert sim.inject(raw) == "forward"
    assert len(sim.cloud.table) == 0
    hits = sim.trace.of("state-hit")
    assert len(hits) == 3
    assert all(c.total == 0 for c in sim.cloud.static_counts[1:])
    assert sim.cloud.static_counts[0].tests > 0


def test_payload_id_struct():
    assert struct.pack(">I", (SchemeId.STATE << 20) | 7)[1:] == PnfvPayload(4, 7, b"").to_bytes()
