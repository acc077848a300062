"""Operation counters for complexity audits.

Cryptographic primitives call :func:`bump` whenever they perform a counted
operation.  Counts go to every :class:`OpCounts` opened with
:func:`counting` in the current context, so nested scopes (a whole run and
one phase of it) can observe the same operations.  The active stack lives
in a :class:`contextvars.ContextVar`, which keeps threads independent.
"""
from __future__ import annotations

import contextvars
from contextlib import contextmanager
from dataclasses import asdict, dataclass

COUNTED = ("encryptions", "decryptions", "tests", "pairings", "dlogs")


@dataclass
class OpCounts:
    encryptions: int = 0
    decryptions: int = 0
    tests: int = 0
    pairings: int = 0
    dlogs: int = 0

    def as_dict(self) -> dict:
        return asdict(self)

    def __add__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(*(getattr(self, k) + getattr(other, k) for k in COUNTED))

    @property
    def total(self) -> int:
        return sum(getattr(self, k) for k in COUNTED)


_active: contextvars.ContextVar[tuple] = contextvars.ContextVar("pnfv_op_counts", default=())


def bump(name: str, k: int = 1) -> None:
    for counts in _active.get():
        setattr(counts, name, getattr(counts, name) + k)


@contextmanager
def counting(counts: OpCounts | None = None):
    """Collect operation counts for the duration of the ``with`` block."""
    counts = OpCounts() if counts is None else counts
    token = _active.set(_active.get() + (counts,))
    try:
        yield counts
    finally:
        _active.reset(token)
