"""Neighbor-set history, mobility-rate estimation and broadcast-period control.

Cluster heads keep a short ring buffer of the neighbor ids heard in each of
their recent broadcast periods. The mobility rate is the mean symmetric
difference between consecutive snapshots; the broadcast period is then
stretched toward bp_max when the neighborhood is static and shrunk toward
bp_min when it churns, staying on the bp_min code grid of the 8-bit BP field.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable


class TopologyHistory:
    """Ring buffer of the neighbor-id sets seen in recent broadcast periods."""

    def __init__(self, depth: int):
        if depth < 2:
            raise ValueError("history depth must be at least 2")
        self.depth = depth
        self._rows: deque[frozenset[int]] = deque(maxlen=depth)

    def record(self, neighbor_ids: Iterable[int]) -> None:
        self._rows.append(frozenset(neighbor_ids))

    @property
    def rows(self) -> list[frozenset[int]]:
        return list(self._rows)

    def clear(self) -> None:
        self._rows.clear()

    def __len__(self) -> int:
        return len(self._rows)


def set_distance(a: Iterable[int], b: Iterable[int]) -> int:
    """Distance between two neighbor sets: size of the symmetric difference."""
    return len(frozenset(a) ^ frozenset(b))


def _as_rows(tht) -> list[frozenset[int]]:
    return tht.rows if isinstance(tht, TopologyHistory) else [frozenset(r) for r in tht]


def mobility_rate(tht) -> float | None:
    """Mean set distance over consecutive snapshot pairs; None below 2 rows.

    With k rows there are k-1 pairs; the caller keeps its current broadcast
    period while the rate is undefined.
    """
    rows = _as_rows(tht)
    if len(rows) < 2:
        return None
    total = sum(set_distance(rows[i], rows[i + 1]) for i in range(len(rows) - 1))
    return total / (len(rows) - 1)


def cluster_mean_mr(tht, is_head: bool) -> float | None:
    """Cluster mobility rate as measured by its head's own history.

    Only heads are entitled to measure and act on it; members have no BP
    authority.
    """
    if not is_head:
        raise ValueError("only cluster heads measure cluster mobility")
    return mobility_rate(tht)


def bp_code_for(bp: float, bp_min: float) -> int:
    """Wire code for a broadcast period: multiples of bp_min, clamped to 1..255."""
    return min(max(round(bp / bp_min), 1), 255)


def bp_from_code(code: int, bp_min: float, bp_max: float) -> float:
    """Broadcast period for a wire code, clamped into [bp_min, bp_max]."""
    return min(max(code * bp_min, bp_min), bp_max)


def adapt_bp(mr: float, bp_min: float, bp_max: float, mr_ref: float) -> float:
    """Map a mobility rate to a broadcast period.

    Linear interpolation from bp_max at rate 0 down to bp_min at mr_ref and
    beyond, then snapped to the bp_min grid so the result is exactly
    representable in the BP field. Monotone non-increasing in the rate.
    """
    if mr < 0:
        raise ValueError("mobility rate must be non-negative")
    raw = bp_max - (bp_max - bp_min) * (mr / mr_ref)
    clamped = min(max(raw, bp_min), bp_max)
    code = min(bp_code_for(clamped, bp_min), int(bp_max / bp_min + 1e-9))
    return bp_from_code(code, bp_min, bp_max)


@dataclass
class BpController:
    """Per-head broadcast period state, bounded to [bp_min, bp_max].

    Starts at bp_min, the global startup period.
    """

    bp_min: float
    bp_max: float
    mr_ref: float
    bp_current: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.bp_min <= self.bp_max:
            raise ValueError("need 0 < bp_min <= bp_max")
        if self.mr_ref <= 0:
            raise ValueError("mr_ref must be positive")
        if self.bp_current == 0.0:
            self.bp_current = self.bp_min

    def adapt(self, mr: float | None) -> float:
        """Update the period from a mobility rate; None leaves it unchanged."""
        if mr is not None:
            self.bp_current = adapt_bp(mr, self.bp_min, self.bp_max, self.mr_ref)
        return self.bp_current
