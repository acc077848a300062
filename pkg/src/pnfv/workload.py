"""Seeded random packets and policy lists for tests and benchmarks."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .netfn import (Equality, FieldSpec, Layout, NetworkFunction, Packet, Policy, Range, Replace,
                    apply_policy, matches)

HEADER_WIDTHS = (32, 32, 16, 16, 8)


def header_layout(n: int) -> Layout:
    """``n`` fields whose widths repeat the IPv4 5-tuple pattern 32, 32, 16, 16, 8."""
    return Layout(FieldSpec(k, HEADER_WIDTHS[(k - 1) % 5], f"f{k}") for k in range(1, n + 1))


def random_packet(rng: random.Random, layout: Layout) -> Packet:
    return Packet(tuple(rng.randrange(f.modulus) for f in layout), layout)


def _random_action(rng: random.Random, layout: Layout) -> Replace:
    j = rng.randrange(1, len(layout) + 1)
    return Replace(j, rng.randrange(layout.field(j).modulus))


def random_equality_policies(rng: random.Random, layout: Layout, n_policies: int,
                             x: Packet | None = None, match_rate: float = 0.5) -> NetworkFunction:
    """Equality policies, a share of which fire on ``x``.

    With probability ``match_rate`` a policy is built to match the packet as
    it stands after the policies before it, so chains of rewrites (including
    policies matching a freshly rewritten field) show up regularly.
    """
    policies, cur = [], x
    for _ in range(n_policies):
        i = rng.randrange(1, len(layout) + 1)
        if cur is not None and rng.random() < match_rate:
            y = cur[i]
        else:
            y = rng.randrange(layout.field(i).modulus)
        p = Policy(Equality(i, y), _random_action(rng, layout))
        policies.append(p)
        if cur is not None:
            cur = apply_policy(p, cur)
    return NetworkFunction(tuple(policies))


def random_range_policies(rng: random.Random, layout: Layout, n_policies: int,
                          x: Packet | None = None, match_rate: float = 0.5,
                          max_width: int = 16) -> NetworkFunction:
    """Range policies restricted to fields at most ``max_width`` bits wide."""
    narrow = [f.index for f in layout if f.bit_width <= max_width]
    if not narrow:
        raise ValueError(f"layout has no field of at most {max_width} bits")
    policies, cur = [], x
    for _ in range(n_policies):
        i = rng.choice(narrow)
        top = layout.field(i).modulus - 1
        if cur is not None and rng.random() < match_rate:
            v = cur[i]
            a, b = rng.randint(0, v), rng.randint(v, top)
        else:
            a, b = sorted((rng.randint(0, top), rng.randint(0, top)))
        p = Policy(Range(i, a, b), _random_action(rng, layout))
        policies.append(p)
        if cur is not None:
            cur = apply_policy(p, cur)
    return NetworkFunction(tuple(policies))


def non_matching_packet(rng: random.Random, layout: Layout, nf: NetworkFunction) -> Packet:
    """A random packet that no policy of ``nf`` matches."""
    for _ in range(10_000):
        x = random_packet(rng, layout)
        if not any(matches(p, x) for p in nf):
            return x
    raise RuntimeError("could not draw a non-matching packet")


@dataclass(frozen=True)
class Workload:
    layout: Layout
    nf: NetworkFunction
    packets: tuple


def make_workload(seed: int, n_fields: int, n_policies: int, n_packets: int = 1,
                  match_rate: float = 0.0, bit_width: int = 32) -> Workload:
    """Uniform-width benchmark workload.

    Packets miss every policy unless ``match_rate`` is positive, in which
    case that share of packets matches the first policy.
    """
    rng = random.Random(seed)
    layout = Layout.uniform(n_fields, bit_width)
    nf = random_equality_policies(rng, layout, n_policies)
    packets = []
    for _ in range(n_packets):
        if rng.random() < match_rate:
            first = nf.policies[0].match
            x = random_packet(rng, layout).replace(first.i, first.y)
        else:
            x = non_matching_packet(rng, layout, nf)
        packets.append(x)
    return Workload(layout, nf, tuple(packets))
