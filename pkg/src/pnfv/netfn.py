"""Plaintext model of packets, match-action policies and network functions.

A packet is a vector of bounded integers, one entry per header field plus a
few *virtual* fields (tag, state, id) that only exist inside the PNFV
payload.  A network function is an ordered list of policies; each policy is
a matching predicate and an action, and applying it to ``x`` yields
``m(x) * a(x) + (1 - m(x)) * x``.  Policies compose left to right.

Everything in this module is pure and serves as the ground truth that the
encrypted schemes are checked against.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

MAX_FIELD_WIDTH = 32


class PacketError(ValueError):
    """A packet, field index or value does not fit its layout."""


class PolicySyntaxError(ValueError):
    """A policy file line could not be parsed."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class FieldSpec:
    index: int
    bit_width: int
    name: str

    def __post_init__(self):
        if self.index < 1:
            raise PacketError(f"field index must be >= 1, got {self.index}")
        if not 1 <= self.bit_width <= MAX_FIELD_WIDTH:
            raise PacketError(
                f"field {self.name!r}: bit width {self.bit_width} outside 1..{MAX_FIELD_WIDTH}")

    @property
    def modulus(self) -> int:
        return 1 << self.bit_width


VIRTUAL_FIELD_NAMES = frozenset({"tag", "state", "id"})


class Layout:
    """Ordered field layout of a packet vector.  Indices are 1-based and contiguous."""

    def __init__(self, fields: Iterable[FieldSpec]):
        fields = tuple(fields)
        if not fields:
            raise PacketError("layout needs at least one field")
        for pos, fs in enumerate(fields, start=1):
            if fs.index != pos:
                raise PacketError(f"field {fs.name!r} has index {fs.index}, expected {pos}")
        names = [f.name for f in fields]
        if len(set(names)) != len(names):
            raise PacketError("duplicate field names in layout")
        real = [f.index for f in fields if f.name not in VIRTUAL_FIELD_NAMES]
        virtual = [f.index for f in fields if f.name in VIRTUAL_FIELD_NAMES]
        if real and virtual and min(virtual) < max(real):
            raise PacketError("virtual fields must follow all real header fields")
        self.fields = fields
        self._by_name = {f.name: f for f in fields}

    @classmethod
    def ipv4(cls) -> "Layout":
        """The 5-tuple layout followed by the tag/state/id virtual fields."""
        return cls([
            FieldSpec(1, 32, "s_ip"),
            FieldSpec(2, 32, "d_ip"),
            FieldSpec(3, 16, "s_port"),
            FieldSpec(4, 16, "d_port"),
            FieldSpec(5, 8, "prot"),
            FieldSpec(6, 16, "tag"),
            FieldSpec(7, 16, "state"),
            FieldSpec(8, 16, "id"),
        ])

    @classmethod
    def uniform(cls, n: int, bit_width: int = 32) -> "Layout":
        return cls(FieldSpec(i, bit_width, f"f{i}") for i in range(1, n + 1))

    def __len__(self) -> int:
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __eq__(self, other) -> bool:
        return isinstance(other, Layout) and self.fields == other.fields

    def __hash__(self) -> int:
        return hash(self.fields)

    def __repr__(self) -> str:
        return f"Layout({', '.join(f'{f.name}:{f.bit_width}' for f in self.fields)})"

    def field(self, index: int) -> FieldSpec:
        if not 1 <= index <= len(self.fields):
            raise PacketError(f"field index {index} out of range 1..{len(self.fields)}")
        return self.fields[index - 1]

    def width(self, index: int) -> int:
        return self.field(index).bit_width

    def index_of(self, name: str) -> int:
        try:
            return self._by_name[name].index
        except KeyError:
            raise PacketError(f"no field named {name!r}") from None

    @property
    def max_width(self) -> int:
        return max(f.bit_width for f in self.fields)

    def check_value(self, index: int, value: int) -> None:
        fs = self.field(index)
        if not 0 <= value < fs.modulus:
            raise PacketError(
                f"value {value} does not fit field {fs.name!r} ({fs.bit_width} bits)")


@dataclass(frozen=True)
class Packet:
    values: tuple
    layout: Layout

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) != len(self.layout):
            raise PacketError(f"packet has {len(values)} values, layout has {len(self.layout)}")
        for i, v in enumerate(values, start=1):
            self.layout.check_value(i, v)

    @classmethod
    def from_fields(cls, layout: Layout, **named: int) -> "Packet":
        values = [0] * len(layout)
        for name, v in named.items():
            values[layout.index_of(name) - 1] = v
        return cls(tuple(values), layout)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> int:
        """1-based field access."""
        self.layout.field(index)
        return self.values[index - 1]

    def get(self, name: str) -> int:
        return self.values[self.layout.index_of(name) - 1]

    def replace(self, index: int, value: int) -> "Packet":
        self.layout.check_value(index, value)
        values = list(self.values)
        values[index - 1] = value
        return Packet(tuple(values), self.layout)


@dataclass(frozen=True)
class Equality:
    i: int
    y: int


@dataclass(frozen=True)
class Range:
    i: int
    a: int
    b: int

    def __post_init__(self):
        if self.a > self.b:
            raise PacketError(f"range low {self.a} exceeds high {self.b}")


@dataclass(frozen=True)
class Replace:
    j: int
    z: int


@dataclass(frozen=True)
class Add:
    """Modular increment of field ``j``; plaintext-only (schemes support Replace)."""
    j: int
    delta: int


Match = Union[Equality, Range]
Action = Union[Replace, Add]


@dataclass(frozen=True)
class Policy:
    match: Match
    action: Action

    def validate(self, layout: Layout) -> None:
        m, a = self.match, self.action
        if isinstance(m, Equality):
            layout.check_value(m.i, m.y)
        else:
            layout.check_value(m.i, m.a)
            layout.check_value(m.i, m.b)
        if isinstance(a, Replace):
            layout.check_value(a.j, a.z)
        else:
            layout.field(a.j)


@dataclass(frozen=True)
class NetworkFunction:
    policies: tuple

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        if not self.policies:
            raise PacketError("a network function needs at least one policy")

    def __len__(self) -> int:
        return len(self.policies)

    def __iter__(self):
        return iter(self.policies)

    def validate(self, layout: Layout) -> None:
        for p in self.policies:
            p.validate(layout)


def match_equality(policy: Policy, x: Packet) -> int:
    m = policy.match
    if not isinstance(m, Equality):
        raise TypeError("match_equality needs an equality policy")
    return int(x[m.i] == m.y)


def match_range(policy: Policy, x: Packet) -> int:
    m = policy.match
    if not isinstance(m, Range):
        raise TypeError("match_range needs a range policy")
    return int(m.a <= x[m.i] <= m.b)


def matches(policy: Policy, x: Packet) -> int:
    if isinstance(policy.match, Equality):
        return match_equality(policy, x)
    return match_range(policy, x)


def action_vector(action: Action, x: Packet) -> tuple:
    j = action.j
    width = x.layout.width(j)
    values = list(x.values)
    if isinstance(action, Replace):
        values[j - 1] = action.z
    else:
        values[j - 1] = (values[j - 1] + action.delta) % (1 << width)
    return tuple(values)


def apply_policy(policy: Policy, x: Packet) -> Packet:
    policy.validate(x.layout)
    m = matches(policy, x)
    ax = action_vector(policy.action, x)
    out = tuple(m * av + (1 - m) * xv for av, xv in zip(ax, x.values))
    return Packet(out, x.layout)


def evaluate(nf: NetworkFunction, x: Packet) -> Packet:
    """Apply every policy of ``nf`` in order, each seeing the previous output."""
    for policy in nf.policies:
        x = apply_policy(policy, x)
    return x


# -- bitwise predicates ------------------------------------------------------

def to_bits(value: int, width: int) -> list:
    """Little-endian bit list: element ``k`` is bit ``k`` (0 = least significant)."""
    if not 0 <= value < (1 << width):
        raise PacketError(f"{value} does not fit in {width} bits")
    return [(value >> k) & 1 for k in range(width)]


def _agree(a_bit: int, b_bit: int) -> int:
    return a_bit * b_bit + (1 - a_bit) * (1 - b_bit)


def bitwise_and_eq(a: int, b: int, width: int = MAX_FIELD_WIDTH) -> int:
    """Product of per-bit agreements; 1 iff ``a == b``."""
    out = 1
    for ab, bb in zip(to_bits(a, width), to_bits(b, width)):
        out *= _agree(ab, bb)
    return out


def bitwise_geq(a: int, b: int, width: int = MAX_FIELD_WIDTH) -> int:
    """Sum over positions, most significant first, of "all higher bits agree and
    here a has 1, b has 0", plus the all-bits-agree term."""
    abits, bbits = to_bits(a, width), to_bits(b, width)
    total = 0
    prefix = 1
    for k in reversed(range(width)):
        total += prefix * abits[k] * (1 - bbits[k])
        prefix *= _agree(abits[k], bbits[k])
    return total + prefix


def bitwise_leq(a: int, b: int, width: int = MAX_FIELD_WIDTH) -> int:
    return bitwise_geq(b, a, width)


# -- policy files ------------------------------------------------------------

_INT = r"(0x[0-9a-fA-F]+|\d+|\d{1,3}(?:\.\d{1,3}){3})"
_EQ_RE = re.compile(rf"^eq\s+(\d+)\s+{_INT}\s+set\s+(\d+)\s+{_INT}$")
_RANGE_RE = re.compile(rf"^range\s+(\d+)\s+{_INT}\s+{_INT}\s+set\s+(\d+)\s+{_INT}$")


def parse_value(token: str) -> int:
    """Integer literal: decimal, ``0x`` hex, or dotted IPv4 quad."""
    if token.count(".") == 3:
        parts = [int(p) for p in token.split(".")]
        if any(p > 255 for p in parts):
            raise ValueError(f"bad dotted quad {token!r}")
        return (parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3]
    return int(token, 0)


def parse_policy_file(text: str, layout: Layout | None = None) -> NetworkFunction:
    """Parse ``eq i y set j z`` / ``range i a b set j z`` lines into a network function.

    Blank lines and ``#`` comments are ignored.  With a ``layout``, every index
    and value is checked against its field width.
    """
    policies = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if (m := _EQ_RE.match(line)):
            i, y, j, z = m.groups()
            policy = Policy(Equality(int(i), parse_value(y)), Replace(int(j), parse_value(z)))
        elif (m := _RANGE_RE.match(line)):
            i, a, b, j, z = m.groups()
            try:
                match = Range(int(i), parse_value(a), parse_value(b))
            except PacketError as exc:
                raise PolicySyntaxError(lineno, str(exc)) from None
            policy = Policy(match, Replace(int(j), parse_value(z)))
        else:
            raise PolicySyntaxError(lineno, f"cannot parse {line!r}")
        if layout is not None:
            try:
                policy.validate(layout)
            except PacketError as exc:
                raise PolicySyntaxError(lineno, str(exc)) from None
        policies.append(policy)
    if not policies:
        raise PolicySyntaxError(0, "policy file contains no policies")
    return NetworkFunction(tuple(policies))


def format_policy(policy: Policy) -> str:
    m, a = policy.match, policy.action
    if not isinstance(a, Replace):
        raise ValueError("only replace actions have a file form")
    if isinstance(m, Equality):
        return f"eq {m.i} {m.y} set {a.j} {a.z}"
    return f"range {m.i} {m.a} {m.b} set {a.j} {a.z}"


def check_replace_only(nf: NetworkFunction) -> None:
    for p in nf.policies:
        if not isinstance(p.action, Replace):
            raise ValueError("encrypted schemes support replace actions only")

