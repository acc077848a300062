import random

import pytest

from pnfv.counters import counting
from pnfv.crypto.peks import Trapdoor
from pnfv.netfn import (Add, Equality, Layout, NetworkFunction, Packet, Policy, Range, Replace,
                        evaluate)
from pnfv.schemes import (CorruptedPacket, CorruptedTransform, SchemeId, StateTable,
                          UnknownEntry, UnsupportedPolicy, UnsupportedWidth, bgn_decrypt_result,
                          bgn_encrypt_packet, bgn_process, bgn_transform, fhe_encrypt_packet,
                          fhe_process, fhe_run, fhe_transform, peks_cloud_process, peks_decrypt,
                          peks_entry_process, peks_transform, state_create)
from pnfv.schemes.bgn import bgn_transformed_from_bytes
from pnfv.schemes.codec import WireError
from pnfv.schemes.fhe import fhe_transformed_from_bytes
from pnfv.schemes.peks import (EntryOutput, decode_entry_output, encode_entry_output,
                               field_keyword, peks_transformed_from_bytes)
from pnfv.schemes.state import (STATE_EST, STATE_NEW, TAG_ALLOW, decode_state_message,
                                encode_delete, encode_update)
from pnfv.workload import header_layout, random_equality_policies, random_packet, random_range_policies


def nf_of(*policies):
    return NetworkFunction(tuple(policies))


EQ_1_10 = nf_of(Policy(Equality(1, 10), Replace(2, 99)))
L2 = Layout.uniform(2, 16)
L5 = Layout.uniform(5, 16)


# -- FHE ---------------------------------------------------------------------

def test_fhe_equality_example(fhe_keys):
    pk, sk = fhe_keys
    phi = fhe_transform(pk, EQ_1_10, L2)
    assert fhe_run(pk, sk, phi, Packet((10, 20), L2)).values == (10, 99)


def test_fhe_no_match_returns_input(fhe_keys):
    pk, sk = fhe_keys
    phi = fhe_transform(pk, EQ_1_10, L2)
    assert fhe_run(pk, sk, phi, Packet((11, 20), L2)).values == (11, 20)


def test_fhe_range_example(fhe_keys):
    pk, sk = fhe_keys
    nf = nf_of(Policy(Range(1, 3, 7), Replace(2, 1)))
    phi = fhe_transform(pk, nf, L2)
    for v in range(12):
        x = Packet((v, 0), L2)
        assert fhe_run(pk, sk, phi, x) == evaluate(nf, x)


def test_fhe_width_mismatch(fhe_keys):
    pk, _ = fhe_keys
    phi = fhe_transform(pk, EQ_1_10, L2, width=16)
    enc = fhe_encrypt_packet(pk, Packet((10, 20), L2), width=8)
    with pytest.raises(ValueError, match="width mismatch"):
        fhe_process(phi, enc)


def test_fhe_rejects_add_actions(fhe_keys):
    with pytest.raises(ValueError):
        fhe_transform(fhe_keys[0], nf_of(Policy(Equality(1, 1), Add(1, 1))), L2)


def test_fhe_composition_of_ten_policies(fhe_keys):
    pk, sk = fhe_keys
    rng = random.Random(10)
    layout = header_layout(5)
    for _ in range(200):
        x = random_packet(rng, layout)
        nf = random_equality_policies(rng, layout, 10, x, match_rate=0.6)
        assert fhe_run(pk, sk, fhe_transform(pk, nf, layout), x) == evaluate(nf, x)


def test_fhe_transform_serialization(fhe_keys):
    pk, sk = fhe_keys
    nf = nf_of(Policy(Equality(1, 10), Replace(2, 99)), Policy(Range(2, 90, 100), Replace(1, 5)))
    phi = fhe_transform(pk, nf, L2)
    back = fhe_transformed_from_bytes(phi.to_bytes())
    x = Packet((10, 20), L2)
    assert fhe_run(pk, sk, back, x) == evaluate(nf, x) == Packet((5, 99), L2)


# -- BGN ---------------------------------------------------------------------

def test_bgn_equality_bundle_has_17_ciphertexts_at_n5(bgn_keys):
    pk, _ = bgn_keys
    phi = bgn_transform(pk, nf_of(Policy(Equality(1, 10), Replace(2, 99))), L5)
    assert len(phi) == 1 and len(phi.bundles[0].ciphertexts()) == 1 + 5 + 1 + 5 + 5


def test_bgn_transform_is_linear_in_policies(bgn_keys):
    pk, _ = bgn_keys
    nf = nf_of(*[Policy(Equality(1, k), Replace(2, k)) for k in range(10)])
    with counting() as c:
        phi = bgn_transform(pk, nf, L5)
    assert sum(len(b.ciphertexts()) for b in phi.bundles) == c.encryptions == 170


def test_bgn_range_bundle_counts(bgn_keys):
    pk, _ = bgn_keys
    b = bgn_transform(pk, nf_of(Policy(Range(3, 3, 7), Replace(2, 1))), L5).bundles[0]
    assert len(b.match) + len(b.weighted) + len(b.e_i) == 1 + 5 + 5
    assert len(b.ciphertexts()) == 11 + 10


def test_bgn_range_on_wide_field_rejected(bgn_keys):
    with pytest.raises(UnsupportedWidth):
        bgn_transform(bgn_keys[0], nf_of(Policy(Range(1, 0, 9), Replace(2, 1))),
                      Layout.uniform(2, 32))


@pytest.mark.parametrize("x1, expected_c", [(10, 1), (14, -3)])
def test_bgn_equality_match_value(bgn_keys, x1, expected_c):
    pk, sk = bgn_keys
    phi = bgn_transform(pk, EQ_1_10, L2)
    r = bgn_process(pk, phi, Packet((x1, 20), L2))
    assert sk.decrypt(r.matches[0], signed=True) == expected_c


def test_bgn_range_match_value(bgn_keys):
    pk, sk = bgn_keys
    nf = nf_of(Policy(Range(1, 3, 7), Replace(2, 1)))
    r = bgn_process(pk, bgn_transform(pk, nf, L2), Packet((5, 0), L2))
    assert sk.decrypt(r.matches[0], signed=True) == (7 - 5) * (5 - 3) == 4


def test_bgn_range_boundaries_and_outside(bgn_keys):
    pk, sk = bgn_keys
    nf = nf_of(Policy(Range(1, 3, 7), Replace(2, 1)))
    phi = bgn_transform(pk, nf, L2)
    for v in [0, 2, 3, 7, 8, 65535]:
        r = bgn_process(pk, phi, Packet((v, 0), L2))
        c = sk.decrypt(r.matches[0], signed=True)
        assert c == (7 - v) * (v - 3)
        assert (c >= 0) == (3 <= v <= 7)


def test_bgn_result_shape(bgn_keys):
    pk, _ = bgn_keys
    nf = nf_of(*[Policy(Equality(1, k), Replace(2, k)) for k in range(4)])
    r = bgn_process(pk, bgn_transform(pk, nf, L5), Packet((0,) * 5, L5))
    triples = r.triples()
    assert len(triples) == 4
    assert all(len(t) == 3 and len(t[0]) == len(t[1]) == 5 for t in triples)


@pytest.mark.parametrize("x1, expected", [(10, (10, 99)), (14, (14, 20))])
def test_bgn_decrypt_branches(bgn_keys, x1, expected):
    pk, sk = bgn_keys
    r = bgn_process(pk, bgn_transform(pk, EQ_1_10, L2), Packet((x1, 20), L2))
    assert bgn_decrypt_result(sk, r, EQ_1_10, L2).values == expected


def test_bgn_equality_decision_uses_no_dlog(bgn_keys):
    pk, sk = bgn_keys
    r = bgn_process(pk, bgn_transform(pk, EQ_1_10, L2), Packet((14, 20), L2))
    with counting() as c:
        bgn_decrypt_result(sk, r, EQ_1_10, L2)
    assert c.dlogs == 2  # one per field of E(x), none for c


def test_bgn_policy_matching_a_rewritten_field(bgn_keys):
    pk, sk = bgn_keys
    layout = Layout.uniform(3, 16)
    # p1 rewrites field 1 to 7, which p2 then matches; p3 matches the old value and must not fire
    nf = nf_of(Policy(Equality(1, 5), Replace(1, 7)),
               Policy(Equality(1, 7), Replace(2, 42)),
               Policy(Equality(1, 5), Replace(3, 9)),
               Policy(Range(1, 6, 8), Replace(3, 11)))
    x = Packet((5, 0, 0), layout)
    r = bgn_process(pk, bgn_transform(pk, nf, layout), x)
    assert bgn_decrypt_result(sk, r, nf, layout) == evaluate(nf, x) == Packet((7, 42, 11), layout)


def test_bgn_composition_of_ten_policies(bgn_keys):
    pk, sk = bgn_keys
    rng = random.Random(11)
    layout = header_layout(5)
    for k in range(200):
        x = random_packet(rng, layout)
        if k % 2:
            nf = random_equality_policies(rng, layout, 10, x, match_rate=0.6)
        else:
            nf = random_range_policies(rng, layout, 10, x, match_rate=0.6)
        r = bgn_process(pk, bgn_transform(pk, nf, layout), x)
        assert bgn_decrypt_result(sk, r, nf, layout) == evaluate(nf, x)


def test_bgn_wide_fields_round_trip(bgn_keys):
    pk, sk = bgn_keys
    rng = random.Random(12)
    layout = Layout.uniform(5, 32)
    for _ in range(20):
        x = random_packet(rng, layout)
        nf = random_equality_policies(rng, layout, 5, x)
        r = bgn_process(pk, bgn_transform(pk, nf, layout), x)
        assert bgn_decrypt_result(sk, r, nf, layout) == evaluate(nf, x)


def test_bgn_cloud_encryptions_affine(bgn_keys):
    pk, _ = bgn_keys

    def cloud_encs(n, N):
        layout = Layout.uniform(n, 16)
        nf = nf_of(*[Policy(Equality(1, 1000 + k), Replace(min(2, n), k)) for k in range(N)])
        phi = bgn_transform(pk, nf, layout)
        x = Packet((0,) * n, layout)
        enc = bgn_encrypt_packet(pk, x)
        with counting() as c:
            bgn_process(pk, phi, x, enc)
        return c.encryptions, c.pairings

    # equality processing only pairs and lifts: 2 + n for c, 2n for a(x), n lifts of E(x)
    for n, N in [(1, 1), (5, 1), (5, 10), (10, 3)]:
        assert cloud_encs(n, N) == (0, n + N * (3 * n + 2))


def test_bgn_transform_serialization(bgn_keys):
    pk, sk = bgn_keys
    nf = nf_of(Policy(Equality(1, 10), Replace(2, 99)), Policy(Range(2, 90, 100), Replace(1, 5)))
    phi = bgn_transform(pk, nf, L2, tagged=True)
    back = bgn_transformed_from_bytes(pk, phi.to_bytes())
    assert back.to_bytes() == phi.to_bytes()
    x = Packet((10, 20), L2)
    assert bgn_decrypt_result(sk, bgn_process(pk, back, x), nf, L2) == Packet((5, 99), L2)
    with pytest.raises(WireError):
        bgn_transformed_from_bytes(pk, phi.to_bytes()[:-1])


# -- PEKS --------------------------------------------------------------------

@pytest.fixture()
def peks_env(peks_keys, pke_keys):
    return peks_keys[0], peks_keys[1], pke_keys[0], pke_keys[1]


def test_peks_transform_counts(peks_env):
    ppk, psk, kpk, _ = peks_env
    phi = peks_transform(psk, kpk, EQ_1_10, L2)
    b = phi.bundles[0]
    assert isinstance(b.match_trapdoor, Trapdoor) and isinstance(b.index_trapdoor, Trapdoor)
    assert isinstance(b.replacement, bytes)
    nf10 = nf_of(*[Policy(Equality(1, k), Replace(2, k)) for k in range(10)])
    phi10 = peks_transform(psk, kpk, nf10, L2)
    assert len(phi10) == 10
    assert sum(2 for _ in phi10.bundles) == 20


def test_peks_rejects_range(peks_env):
    _, psk, kpk, _ = peks_env
    with pytest.raises(UnsupportedPolicy):
        peks_transform(psk, kpk, nf_of(Policy(Range(1, 1, 2), Replace(2, 1))), L2)


def test_peks_entry_shapes_and_shuffle(peks_env):
    ppk, _, kpk, ksk = peks_env
    x = Packet((1, 2, 3, 4, 5), L5)
    a = peks_entry_process(x, ppk, kpk, b"k" * 32, b"nonce-a")
    b = peks_entry_process(x, ppk, kpk, b"k" * 32, b"nonce-b")
    assert len(a.encrypted) == len(a.searchable) == len(a.searchable_index) == 5

    def order(out):
        return [int.from_bytes(ksk.decrypt(c)[4:], "big") for c in out.encrypted]

    assert order(a) != order(b)
    assert peks_decrypt(ksk, a.encrypted, L5) == peks_decrypt(ksk, b.encrypted, L5) == x


def test_peks_same_permutation_on_all_vectors(peks_env):
    ppk, psk, kpk, ksk = peks_env
    x = Packet((11, 22, 33, 44, 55), L5)
    out = peks_entry_process(x, ppk, kpk, b"k" * 32, b"n")
    for slot, ct in enumerate(out.encrypted):
        v, l = int.from_bytes(ksk.decrypt(ct)[:4], "big"), int.from_bytes(ksk.decrypt(ct)[4:], "big")
        assert ppk.test(out.searchable[slot], psk.trapdoor(field_keyword(v, l)))
        assert ppk.test(out.searchable_index[slot], psk.trapdoor(l.to_bytes(2, "big")))


def test_peks_single_field_identity(peks_env):
    ppk, _, kpk, ksk = peks_env
    layout = Layout.uniform(1, 16)
    out = peks_entry_process(Packet((9,), layout), ppk, kpk, b"k" * 32, b"n")
    assert peks_decrypt(ksk, out.encrypted, layout).values == (9,)


def test_peks_matching_packet_one_substitution(peks_env):
    ppk, psk, kpk, ksk = peks_env
    phi = peks_transform(psk, kpk, EQ_1_10, L2)
    entry = peks_entry_process(Packet((10, 20), L2), ppk, kpk, b"k" * 32, b"n")
    out = peks_cloud_process(phi, ppk, entry)
    changed = [k for k in range(2) if out[k] != entry.encrypted[k]]
    assert len(changed) == 1
    assert peks_decrypt(ksk, out, L2).values == (10, 99)


def test_peks_non_matching_packet_unchanged(peks_env):
    ppk, psk, kpk, ksk = peks_env
    phi = peks_transform(psk, kpk, EQ_1_10, L2)
    entry = peks_entry_process(Packet((11, 20), L2), ppk, kpk, b"k" * 32, b"n")
    assert peks_cloud_process(phi, ppk, entry) == entry.encrypted


def test_peks_test_count_on_misses(peks_env):
    ppk, psk, kpk, _ = peks_env
    nf = nf_of(*[Policy(Equality(1, 1000 + k), Replace(2, k)) for k in range(10)])
    phi = peks_transform(psk, kpk, nf, L5)
    entry = peks_entry_process(Packet((1, 2, 3, 4, 5), L5), ppk, kpk, b"k" * 32)
    with counting() as c:
        peks_cloud_process(phi, ppk, entry)
    assert c.tests == 50


def test_peks_later_substitution_wins(peks_env):
    ppk, psk, kpk, ksk = peks_env
    nf = nf_of(Policy(Equality(1, 10), Replace(2, 1)), Policy(Equality(1, 10), Replace(2, 2)))
    phi = peks_transform(psk, kpk, nf, L2)
    entry = peks_entry_process(Packet((10, 20), L2), ppk, kpk, b"k" * 32)
    assert peks_decrypt(ksk, peks_cloud_process(phi, ppk, entry), L2).values == (10, 2)


def test_peks_chain_through_rewritten_field(peks_env):
    ppk, psk, kpk, ksk = peks_env
    nf = nf_of(Policy(Equality(1, 5), Replace(1, 7)), Policy(Equality(1, 7), Replace(2, 42)),
               Policy(Equality(1, 5), Replace(2, 9)))
    x = Packet((5, 0), L2)
    entry = peks_entry_process(x, ppk, kpk, b"k" * 32)
    out = peks_cloud_process(peks_transform(psk, kpk, nf, L2), ppk, entry)
    assert peks_decrypt(ksk, out, L2) == evaluate(nf, x) == Packet((7, 42), L2)


def test_peks_output_shape_independent_of_match(peks_env):
    ppk, psk, kpk, _ = peks_env
    phi = peks_transform(psk, kpk, EQ_1_10, L2)
    sizes = []
    for x in [(10, 20), (11, 20)]:
        entry = peks_entry_process(Packet(x, L2), ppk, kpk, b"k" * 32)
        sizes.append([len(c) for c in peks_cloud_process(phi, ppk, entry)])
    assert sizes[0] == sizes[1]


def test_peks_corrupted_transform(peks_env):
    ppk, psk, kpk, _ = peks_env
    phi = peks_transform(psk, kpk, EQ_1_10, L2)
    bad = phi.bundles[0].__class__(phi.bundles[0].match_trapdoor, psk.trapdoor(b"\x00\x09"),
                                   phi.bundles[0].replacement,
                                   phi.bundles[0].searchable_replacement)
    phi_bad = phi.__class__(phi.scheme, (bad,), phi.n_fields)
    entry = peks_entry_process(Packet((10, 20), L2), ppk, kpk, b"k" * 32)
    with pytest.raises(CorruptedTransform):
        peks_cloud_process(phi_bad, ppk, entry)


def test_peks_decrypt_detects_duplicates(peks_env):
    ppk, _, kpk, ksk = peks_env
    entry = peks_entry_process(Packet((1, 2), L2), ppk, kpk, b"k" * 32)
    with pytest.raises(CorruptedPacket):
        peks_decrypt(ksk, [entry.encrypted[0], entry.encrypted[0]], L2)
    with pytest.raises(CorruptedPacket):
        peks_decrypt(ksk, entry.encrypted[:1], L2)


def test_peks_wire_round_trips(peks_env):
    ppk, psk, kpk, ksk = peks_env
    phi = peks_transform(psk, kpk, EQ_1_10, L2)
    back = peks_transformed_from_bytes(phi.to_bytes())
    entry = peks_entry_process(Packet((10, 20), L2), ppk, kpk, b"k" * 32)
    entry2 = decode_entry_output(encode_entry_output(entry))
    assert entry2 == entry
    assert peks_decrypt(ksk, peks_cloud_process(back, ppk, entry2), L2).values == (10, 99)


def test_peks_keyword_encoding():
    assert field_keyword(0x7F000001, 1) == bytes.fromhex("7f000001" "0001")


# -- state table -------------------------------------------------------------

@pytest.fixture()
def table_env(peks_keys, pke_keys):
    ppk, psk = peks_keys
    kpk, ksk = pke_keys
    table = StateTable(ppk, lambda v: kpk.encrypt(v.to_bytes(4, "big")))
    enc = lambda v: kpk.encrypt(v.to_bytes(2, "big"))  # noqa: E731
    return ppk, psk, kpk, ksk, table, enc


def _searchable(ppk, kpk, x):
    return peks_entry_process(x, ppk, kpk, b"k" * 32).searchable


def test_state_lifecycle(table_env):
    ppk, psk, kpk, ksk, table, enc = table_env
    x = Packet((0xC0A80101, 0xC0A80102, 120, 121, 6), Layout.ipv4().__class__(
        list(Layout.ipv4())[:5]))
    tds, es, et = state_create(psk, enc, enc, x, range(1, 6), STATE_NEW, TAG_ALLOW)
    assert len(tds) == 5
    entry_id = table.register(tds, es, et)
    hit = table.match(_searchable(ppk, kpk, x))
    assert hit.entry_id == entry_id
    assert int.from_bytes(ksk.decrypt(hit.enc_state), "big") == STATE_NEW
    assert int.from_bytes(ksk.decrypt(hit.enc_id), "big") == entry_id
    table.apply_message(encode_update(entry_id, enc(STATE_EST)))
    hit = table.match(_searchable(ppk, kpk, x))
    assert int.from_bytes(ksk.decrypt(hit.enc_state), "big") == STATE_EST
    table.apply_message(encode_delete(entry_id))
    assert table.match(_searchable(ppk, kpk, x)) is None
    with pytest.raises(UnknownEntry):
        table.delete(entry_id)
    with pytest.raises(UnknownEntry):
        table.update(entry_id, b"x")


def test_state_match_requires_every_trapdoor(table_env):
    ppk, psk, kpk, _, table, enc = table_env
    layout = Layout.uniform(5, 16)
    x = Packet((1, 2, 3, 4, 6), layout)
    table.register(state_create(psk, enc, enc, x, range(1, 6), STATE_NEW, TAG_ALLOW)[0], b"s", b"t")
    assert table.match(_searchable(ppk, kpk, x)) is not None
    assert table.match(_searchable(ppk, kpk, x.replace(4, 5))) is None


def test_state_ids_unique(table_env):
    ppk, psk, _, _, table, enc = table_env
    x = Packet((1,), Layout.uniform(1, 16))
    tds = state_create(psk, enc, enc, x, [1], STATE_NEW, TAG_ALLOW)[0]
    ids = {table.register(tds, b"s", b"t") for _ in range(20)}
    assert len(ids) == 20 == len(table)


def test_state_messages():
    assert encode_update(7, b"ct") == b"\x00\x00\x00\x07\x01ct"
    assert encode_delete(7) == b"\x00\x00\x00\x07\x02"
    assert decode_state_message(encode_delete(7)) == (7, 2, b"")
    for bad in [b"\x00", b"\x00\x00\x00\x07\x01", b"\x00\x00\x00\x07\x02x", b"\x00\x00\x00\x07\x09"]:
        with pytest.raises(ValueError):
            decode_state_message(bad)


def test_transformed_function_header(bgn_keys):
    phi = bgn_transform(bgn_keys[0], EQ_1_10, L2)
    raw = phi.to_bytes()
    assert raw[0] == SchemeId.BGN and int.from_bytes(raw[3:5], "big") == 1


def test_entry_output_length_mismatch():
    with pytest.raises(WireError):
        decode_entry_output(b"\x00\x02" + b"\x00\x00" * 3)
    assert len(EntryOutput((), (), ())) == 0
