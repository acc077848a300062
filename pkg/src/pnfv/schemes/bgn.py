"""Network functions over BGN encryption.

BGN allows one multiplication, so the cloud cannot chain policies the way
the FHE construction does.  Instead, for each policy it returns the
encrypted match value ``E(c)`` and the encrypted action result ``E(a(x))``
next to a single ``E(x)``; the client decides which branch to open.

Equality ``x_i == y``:
    ``c = 1 - <x, e_i> + y``, equal to 1 exactly on a match.
Range ``a <= x_i <= b`` (fields up to 16 bits):
    ``c = -<x^2, e_i> + <x, (a+b) e_i> - ab = (b - x_i)(x_i - a)``,
    non-negative exactly on a match.
Action ``x_j <- z``:
    ``a(x) = x - x o e_j + z e_j``.

The client applies the policies in order.  When a policy's match field was
rewritten by an earlier policy, the cloud's ``c`` refers to the stale value;
the client corrects it with plaintext arithmetic on its own copy of the
policy list (see :func:`bgn_decrypt_result`).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..crypto.bgn import SOURCE, TARGET, BgnCiphertext, BgnPrivateKey, BgnPublicKey
from ..netfn import (Equality, Layout, NetworkFunction, Packet, Range, check_replace_only)
from .codec import (SchemeId, TransformedFunction, WireError, split_fixed, split_transformed)

RANGE_MAX_WIDTH = 16
TAG_SHIFT = 16

EQ, RANGE = 0, 1


class UnsupportedWidth(ValueError):
    """A range policy targets a field wider than the decryptable range."""


def tag_value(value: int, index: int) -> int:
    """Pack ``value || index`` into one plaintext (index in the low 16 bits)."""
    return (value << TAG_SHIFT) | index


def untag_value(packed: int) -> tuple:
    return packed >> TAG_SHIFT, packed & ((1 << TAG_SHIFT) - 1)


@dataclass(frozen=True)
class BgnBundle:
    """Encrypted form of one policy.

    ``match`` is ``(E(1), E(y))`` for equality or ``(E(ab),)`` for range;
    ``weighted`` holds ``E((a+b) e_i)`` for range and is empty otherwise.
    ``tagged`` optionally carries ``(E(j), E(z||j))`` for the compact
    allow/deny payload.
    """

    kind: int
    match: tuple
    e_i: tuple
    weighted: tuple
    e_j: tuple
    z_e_j: tuple
    tagged: tuple = ()

    def ciphertexts(self) -> list:
        return [*self.match, *self.weighted, *self.e_i, *self.e_j, *self.z_e_j, *self.tagged]

    def to_bytes(self) -> bytes:
        n = len(self.e_i)
        head = struct.pack(">BHB", self.kind, n, len(self.tagged))
        return head + b"".join(c.to_bytes() for c in self.ciphertexts())

    @classmethod
    def from_bytes(cls, pk: BgnPublicKey, data: bytes) -> "BgnBundle":
        if len(data) < 4:
            raise WireError("truncated BGN bundle")
        kind, n, n_tagged = struct.unpack_from(">BHB", data, 0)
        if kind not in (EQ, RANGE) or n_tagged not in (0, 2):
            raise WireError("bad BGN bundle header")
        cts = [pk.from_bytes(raw) for raw in split_fixed(data[4:], pk.group.element_size)]
        n_match = 2 if kind == EQ else 1
        n_weighted = 0 if kind == EQ else n
        if len(cts) != n_match + n_weighted + 3 * n + n_tagged:
            raise WireError("BGN bundle length does not match its header")
        it = iter(cts)
        take = lambda k: tuple(next(it) for _ in range(k))  # noqa: E731
        return cls(kind, take(n_match), weighted=take(n_weighted), e_i=take(n), e_j=take(n),
                   z_e_j=take(n), tagged=take(n_tagged))


@dataclass
class BgnResult:
    """What the cloud sends back: ``E(x)`` once, then ``(E(a(x)), E(c))`` per policy."""

    enc_x: tuple
    actions: list = field(default_factory=list)
    matches: list = field(default_factory=list)
    allow: list = field(default_factory=list)
    deny: list = field(default_factory=list)

    def triples(self) -> list:
        return [(self.enc_x, a, c) for a, c in zip(self.actions, self.matches)]


def _selector(pk: BgnPublicKey, n: int, index: int, scale: int = 1) -> tuple:
    return tuple(pk.encrypt(scale if l == index else 0) for l in range(1, n + 1))


def bgn_transform(pk: BgnPublicKey, nf: NetworkFunction, layout: Layout,
                  tagged: bool = False) -> TransformedFunction:
    """Encrypt each policy of ``nf`` into a :class:`BgnBundle`.

    Args:
      pk: BGN public key of the client.
      nf: replace-only policy list.
      layout: packet layout, used for range width checks.
      tagged: also encrypt ``j`` and ``z||j`` for the allow/deny payload.
        Requires every action field to be at most 16 bits wide.

    Raises:
      UnsupportedWidth: a range policy matches a field wider than 16 bits.
    """
    check_replace_only(nf)
    nf.validate(layout)
    n = len(layout)
    bundles = []
    for policy in nf:
        m, act = policy.match, policy.action
        if isinstance(m, Range):
            if layout.width(m.i) > RANGE_MAX_WIDTH:
                raise UnsupportedWidth(
                    f"range policy on field {m.i} ({layout.width(m.i)} bits); "
                    f"BGN range matching supports at most {RANGE_MAX_WIDTH} bits")
            kind = RANGE
            match = (pk.encrypt(m.a * m.b),)
            weighted = _selector(pk, n, m.i, m.a + m.b)
        else:
            kind, match, weighted = EQ, (pk.encrypt(1), pk.encrypt(m.y)), ()
        extra = ()
        if tagged:
            if layout.width(act.j) > TAG_SHIFT:
                raise UnsupportedWidth(f"tagged payload needs a field of at most {TAG_SHIFT} bits")
            extra = (pk.encrypt(act.j), pk.encrypt(tag_value(act.z, act.j)))
        bundles.append(BgnBundle(kind, match, _selector(pk, n, m.i), weighted,
                                 _selector(pk, n, act.j), _selector(pk, n, act.j, act.z), extra))
    return TransformedFunction(SchemeId.BGN, tuple(bundles), n)


def bgn_encrypt_packet(pk: BgnPublicKey, x: Packet) -> tuple:
    return tuple(pk.encrypt(v) for v in x.values)


def _inner(left, right) -> BgnCiphertext:
    acc = left[0] * right[0]
    for a, b in zip(left[1:], right[1:]):
        acc = acc + a * b
    return acc


def bgn_process(pk: BgnPublicKey, phi: TransformedFunction, x: Packet,
                enc_x: tuple | None = None, with_actions: bool = True) -> BgnResult:
    """Cloud-side evaluation of every policy against ``x``.

    The cloud sees ``x`` in the clear and encrypts it itself unless
    ``enc_x`` is supplied.  Squares for range policies are encrypted only
    when the list contains one.  ``with_actions=False`` skips ``E(a(x))``
    for callers that only need the compact allow/deny form of tagged bundles.
    """
    if phi.scheme != SchemeId.BGN:
        raise ValueError("not a BGN transformed function")
    if len(x) != phi.n_fields:
        raise ValueError(f"packet has {len(x)} fields, transformed function expects {phi.n_fields}")
    enc_x = bgn_encrypt_packet(pk, x) if enc_x is None else tuple(enc_x)
    lifted_x = [pk.lift(c) for c in enc_x] if with_actions else None
    squares = None
    if any(b.kind == RANGE for b in phi.bundles):
        # only the range field's square survives the product with E(e_i); that field
        # is at most 16 bits wide so its square fits, other entries are zeroed anyway
        bound = pk.message_bound
        squares = tuple(pk.encrypt(v * v % bound) for v in x.values)
    out = BgnResult(enc_x)
    for b in phi.bundles:
        if b.kind == EQ:
            one, y = b.match
            c = pk.lift(one) - _inner(enc_x, b.e_i) + pk.lift(y)
        else:
            c = _inner(enc_x, b.weighted) - _inner(squares, b.e_i) - pk.lift(b.match[0])
        out.matches.append(c)
        if with_actions:
            out.actions.append(tuple(lx - cx * ej + pk.lift(zej)
                                     for lx, cx, ej, zej in zip(lifted_x, enc_x, b.e_j, b.z_e_j)))
        if b.tagged:
            enc_j, enc_zj = b.tagged
            current = _inner(enc_x, b.e_j) * (1 << TAG_SHIFT) + pk.lift(enc_j)
            out.allow.append(current)
            # re-randomize so the cloud's output is unlinkable to the stored bundle
            out.deny.append(pk.lift(enc_zj) + pk.encrypt_target(0))
    return out


def _range_value(policy, v: int) -> int:
    return (policy.match.b - v) * (v - policy.match.a)


def bgn_decrypt_result(sk: BgnPrivateKey, result: BgnResult, nf: NetworkFunction,
                       layout: Layout) -> Packet:
    """Client-side reconstruction of ``psi^N(x)``.

    ``E(x)`` is decrypted once.  Policies are then walked in order: an
    equality match is recognised by ``D(E(c)) == 1`` without a discrete
    log, a range match by a non-negative signed decryption of ``c``.  On a
    match only the rewritten component of ``E(a(x))`` is decrypted.

    The cloud computes every ``c`` on the original ``x``.  If an earlier
    policy already rewrote field ``i``, the expected value is shifted by
    the known difference: ``c' = c + x_i - x'_i`` for equality and
    ``c' = c + q(x'_i) - q(x_i)`` with ``q(v) = (b - v)(v - a)`` for range.

    Raises:
      DlogNotFound: a ciphertext falls outside its decryption bound.
    """
    if len(result.matches) != len(nf):
        raise ValueError("result does not match the policy list")
    orig = [sk.decrypt(c, bound=1 << layout.width(l)) for l, c in enumerate(result.enc_x, 1)]
    cur = list(orig)
    for policy, enc_ax, enc_c in zip(nf, result.actions, result.matches):
        i = policy.match.i
        if isinstance(policy.match, Equality):
            matched = sk.is_value(enc_c, 1 - orig[i - 1] + cur[i - 1])
        else:
            c = sk.decrypt(enc_c, bound=sk.public_key.message_bound, signed=True)
            c += _range_value(policy, cur[i - 1]) - _range_value(policy, orig[i - 1])
            matched = c >= 0
        if matched:
            j = policy.action.j
            cur[j - 1] = sk.decrypt(enc_ax[j - 1], bound=1 << layout.width(j))
    return Packet(tuple(cur), layout)


def bgn_transformed_from_bytes(pk: BgnPublicKey, data: bytes) -> TransformedFunction:
    scheme, n_fields, raws = split_transformed(data)
    if scheme != SchemeId.BGN:
        raise WireError("not a BGN transformed function")
    return TransformedFunction(scheme, tuple(BgnBundle.from_bytes(pk, r) for r in raws), n_fields)


__all__ = [
    "BgnBundle", "BgnResult", "RANGE_MAX_WIDTH", "SOURCE", "TARGET", "UnsupportedWidth",
    "bgn_decrypt_result", "bgn_encrypt_packet", "bgn_process", "bgn_transform",
    "bgn_transformed_from_bytes", "tag_value", "untag_value",
]
