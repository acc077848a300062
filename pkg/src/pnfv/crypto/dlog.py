"""Baby-step/giant-step discrete logarithms over a bounded range."""
from __future__ import annotations

import threading

from ..counters import bump

DEFAULT_BABY_STEPS = 1 << 16


class DlogNotFound(ArithmeticError):
    """No exponent inside the search bound maps to the target element."""


class BabyStepGiantStep:
    """Solve ``base^x == target`` for ``0 <= x < bound``.

    The baby-step table (``base^j`` for ``j < baby_steps``) is built once, on
    first use, and is read-only afterwards so a solver can be shared between
    threads.

    Args:
      op: group law, ``op(a, b)``.
      inv: group inverse.
      identity: neutral element.
      base: the fixed base element.
      baby_steps: table size; the number of giant steps is ``ceil(bound / baby_steps)``.
    """

    def __init__(self, op, inv, identity, base, baby_steps: int = DEFAULT_BABY_STEPS):
        self._op = op
        self._inv = inv
        self._identity = identity
        self._base = base
        self.baby_steps = baby_steps
        self._table = None
        self._giant = None
        self._lock = threading.Lock()

    def _build(self):
        with self._lock:
            if self._table is not None:
                return
            table = {}
            cur = self._identity
            for j in range(self.baby_steps):
                table.setdefault(cur, j)
                cur = self._op(cur, self._base)
            # cur == base^m here
            self._giant = self._inv(cur)
            self._table = table

    def solve(self, target, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        if self._table is None:
            self._build()
        bump("dlogs")
        table, step, op, m = self._table, self._giant, self._op, self.baby_steps
        cur = target
        for i in range(-(-bound // m)):
            j = table.get(cur)
            if j is not None:
                x = i * m + j
                if x < bound:
                    return x
                break
            cur = op(cur, step)
        raise DlogNotFound(f"no discrete log below {bound}")

    def solve_signed(self, target, bound: int) -> int:
        """Solve for ``x`` in ``[-bound, bound)``.

        Both signs are searched in the same giant-step walk, so the cost grows
        with ``|x|`` rather than with the bound.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        if self._table is None:
            self._build()
        bump("dlogs")
        table, step, op, m = self._table, self._giant, self._op, self.baby_steps
        pos, neg = target, self._inv(target)
        pos_live = True
        for i in range(-(-(bound + 1) // m)):
            if pos_live:
                j = table.get(pos)
                if j is not None:
                    if i * m + j < bound:
                        return i * m + j
                    pos_live = False
                pos = op(pos, step)
            j = table.get(neg)
            if j is not None:
                x = i * m + j
                if 0 < x <= bound:
                    return -x
                if x > bound:
                    break
            neg = op(neg, step)
        raise DlogNotFound(f"no discrete log in [-{bound}, {bound})")
