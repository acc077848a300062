"""Scripted runs of the three-middlebox simulator.

A script is UTF-8 text, one directive per line::

    scheme bgn                 # bgn | peks | fhe (default bgn)
    policies firewall.policy   # path relative to the script's directory
    stateful                   # enable the private connection table
    inject <hex frame> expect forward

Blank lines and ``#`` comments are ignored.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from ..netfn import Layout, NetworkFunction, parse_policy_file
from ..schemes.codec import SchemeId
from .roles import (CLIENT, CLOUD, ENTRY, ClientKeys, ClientMB, CloudMB, EntryMB, Fabric, Trace)

SCHEMES = {"bgn": SchemeId.BGN, "peks": SchemeId.PEKS, "fhe": SchemeId.FHE}
VERDICTS = ("forward", "drop")

_INJECT = re.compile(r"^inject\s+([0-9a-fA-F]+)\s+expect\s+(forward|drop)$")


class ScenarioError(ValueError):
    """The script is malformed or references something that does not exist."""


@dataclass(frozen=True)
class Injection:
    frame: bytes
    expect: str
    lineno: int


@dataclass
class Script:
    scheme: SchemeId = SchemeId.BGN
    nf: NetworkFunction | None = None
    stateful: bool = False
    injections: list = field(default_factory=list)


def parse_script(text: str, base_dir: Path | str = ".", layout: Layout | None = None) -> Script:
    layout = layout or Layout.ipv4()
    base_dir = Path(base_dir)
    script = Script()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if word == "scheme":
            if rest not in SCHEMES:
                raise ScenarioError(f"line {lineno}: unknown scheme {rest!r}")
            script.scheme = SCHEMES[rest]
        elif word == "policies":
            path = base_dir / rest
            if not rest or not path.is_file():
                raise ScenarioError(f"line {lineno}: policy file {rest!r} not found")
            script.nf = parse_policy_file(path.read_text(encoding="utf-8"), layout)
        elif word == "stateful" and not rest:
            script.stateful = True
        elif word == "inject":
            m = _INJECT.match(line)
            if not m or len(m.group(1)) % 2:
                raise ScenarioError(f"line {lineno}: expected 'inject <hex> expect <verdict>'")
            script.injections.append(Injection(bytes.fromhex(m.group(1)), m.group(2), lineno))
        else:
            raise ScenarioError(f"line {lineno}: unknown directive {word!r}")
    return script


def _check_bgn_policies(nf: NetworkFunction) -> None:
    # the compact BGN payload carries c computed on the unmodified packet, so a
    # policy may not match on a field that another policy rewrites
    written = {p.action.j for p in nf}
    clash = [p.match.i for p in nf if p.match.i in written]
    if clash:
        raise ScenarioError(f"BGN scenarios cannot match on rewritten fields {sorted(set(clash))}")


class Simulator:
    """Wires the three roles together over one fabric."""

    def __init__(self, scheme: SchemeId, nf: NetworkFunction, stateful: bool = False,
                 keys: ClientKeys | None = None, layout: Layout | None = None):
        self.layout = layout or Layout.ipv4()
        if scheme == SchemeId.BGN:
            _check_bgn_policies(nf)
        self.trace = Trace()
        self.fabric = Fabric()
        keys = keys or ClientKeys.generate()
        public = keys.public()
        self.client = ClientMB(scheme, keys, nf, self.layout, self.fabric, self.trace, stateful)
        phi = self.client.transform()
        self.cloud = CloudMB(scheme, phi, public, self.layout, self.fabric, self.trace, stateful)
        self.entry = EntryMB(scheme, public, self.layout, self.fabric, self.trace, stateful)
        self._roles = {CLOUD: self.cloud, CLIENT: self.client}

    def run_until_idle(self) -> None:
        while self.fabric.pending():
            _, dst, msg = self.fabric.pop()
            self._roles[dst].handle(msg)

    def inject(self, frame: bytes) -> str:
        """Push one frame through all roles and return the client's verdict."""
        self.entry.inject(frame)
        self.run_until_idle()
        return self.client.take_verdict()

    def finish(self) -> Trace:
        for name, role in ((ENTRY, self.entry), (CLOUD, self.cloud), (CLIENT, self.client)):
            self.trace.counters[name] = role.counts
            detail = " ".join(f"{k}={v}" for k, v in role.counts.as_dict().items())
            self.trace.record(name, "counters", detail)
        return self.trace


def run_scenario(script, base_dir: Path | str = ".", keys: ClientKeys | None = None) -> Trace:
    """Run a script (text or parsed :class:`Script`) and return its trace.

    Raises:
      ScenarioError: malformed script, missing policy file, or injections
        without a policy list.
    """
    if isinstance(script, str):
        script = parse_script(script, base_dir)
    if not script.injections:
        return Trace()
    if script.nf is None:
        raise ScenarioError("script injects frames but names no policy file")
    sim = Simulator(script.scheme, script.nf, script.stateful, keys)
    for inj in script.injections:
        verdict = sim.inject(inj.frame)
        sim.trace.verdicts.append((inj.expect, verdict))
        status = "ok" if verdict == inj.expect else "MISMATCH"
        sim.trace.record(CLIENT, "expect", f"{inj.expect} {status} line={inj.lineno}")
    return sim.finish()


def run_scenario_file(path: Path | str, keys: ClientKeys | None = None) -> Trace:
    path = Path(path)
    return run_scenario(path.read_text(encoding="utf-8"), path.parent, keys)
