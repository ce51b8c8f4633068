"""Metered access to hidden leaf values.

All algorithm-side reads of leaf values go through an :class:`OracleHandle`,
which answers comparison queries ``[x_j < x_k]`` (and, in the input-value
model, direct reads) while counting them in a :class:`QueryLedger`.
Indices are 1-based; :data:`BOTTOM` and :data:`TOP` are virtual indices that
compare below and above every real leaf and are never charged.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractViolation, ModeViolation

COMPARISON = "comparison"
INPUT_VALUE = "input-value"
MODES = (COMPARISON, INPUT_VALUE)


class _Sentinel:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (_sentinel, (self.name,))


BOTTOM = _Sentinel("BOTTOM")
TOP = _Sentinel("TOP")


def _sentinel(name):
    return BOTTOM if name == "BOTTOM" else TOP


def is_real(index):
    return not isinstance(index, _Sentinel)


def index_to_json(index):
    """Extended index as a JSON scalar: an int, ``"bottom"`` or ``"top"``."""
    if index is BOTTOM:
        return "bottom"
    if index is TOP:
        return "top"
    return int(index)


def index_from_json(obj):
    if obj == "bottom":
        return BOTTOM
    if obj == "top":
        return TOP
    return int(obj)


@dataclass
class QueryLedger:
    comparison_queries: int = 0
    value_queries: int = 0
    modeled_search_units: int = 0
    modeled_andor_units: int = 0
    grover_oracle_calls: int = 0

    def total(self):
        return (
            self.comparison_queries
            + self.value_queries
            + self.modeled_search_units
            + self.modeled_andor_units
            + self.grover_oracle_calls
        )

    def modeled_units(self):
        return self.modeled_search_units + self.modeled_andor_units

    def snapshot(self):
        return QueryLedger(**asdict(self))

    def to_dict(self):
        return asdict(self)


class OracleHandle:
    """Hidden leaf values plus the ledger that charges every access to them.

    In comparison mode the public surface exposes only booleans and counters.
    The underscore-prefixed helpers are unmetered and exist for the simulated
    quantum subroutines, whose cost is charged separately as modeled units.
    """

    def __init__(self, values, mode=COMPARISON):
        if mode not in MODES:
            raise ContractViolation(f"unknown query model {mode!r}")
        self._values = [int(v) for v in values]
        self._array = np.asarray(self._values, dtype=np.int64)
        self.mode = mode
        self.ledger = QueryLedger()

    @property
    def n(self):
        return len(self._values)

    def _check(self, index):
        if isinstance(index, _Sentinel):
            return
        if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
            raise ContractViolation(f"bad index {index!r}")
        if not 1 <= index <= len(self._values):
            raise ContractViolation(f"index {index} out of range 1..{len(self._values)}")

    def compare(self, j, k):
        """``[x_j < x_k]`` with ``x_BOTTOM < x_i < x_TOP``; charged only when both are real."""
        self._check(j)
        self._check(k)
        if j is BOTTOM:
            return k is not BOTTOM
        if j is TOP:
            return False
        if k is TOP:
            return True
        if k is BOTTOM:
            return False
        self.ledger.comparison_queries += 1
        return self._values[j - 1] < self._values[k - 1]

    def read_value(self, j):
        if self.mode != INPUT_VALUE:
            raise ModeViolation("direct value reads are not allowed in the comparison model")
        if not is_real(j):
            raise ContractViolation("cannot read the value of a sentinel")
        self._check(j)
        self.ledger.value_queries += 1
        return self._values[j - 1]

    def ledger_report(self):
        return self.ledger.snapshot()

    def charge(self, *, search=0, andor=0, grover=0, comparisons=0):
        """Record modeled quantum units (and real comparisons done on the oracle's behalf)."""
        self.ledger.modeled_search_units += search
        self.ledger.modeled_andor_units += andor
        self.ledger.grover_oracle_calls += grover
        self.ledger.comparison_queries += comparisons

    def _interior_mask(self, lo, hi):
        """Unmetered boolean mask over leaves of ``x_lo < x_j < x_hi``."""
        mask = np.ones(len(self._values), dtype=bool)
        if is_real(lo):
            mask &= self._array > self._values[lo - 1]
        elif lo is TOP:
            mask[:] = False
        if is_real(hi):
            mask &= self._array < self._values[hi - 1]
        elif hi is BOTTOM:
            mask[:] = False
        return mask


def ledger_report(h: OracleHandle):
    return h.ledger_report()
