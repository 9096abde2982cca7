"""Two-objective Pareto dominance and a bounded non-dominated archive."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Generic, Iterable, Optional, Sequence, TypeVar

from .schedule_eval import ObjectiveVector

T = TypeVar("T")

DEFAULT_CAPACITY = 256


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True when ``a`` is no worse than ``b`` in both objectives and better in one (minimisation)."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def extract_front(points: Iterable[Sequence[float]]) -> list[ObjectiveVector]:
    """Non-dominated subset of ``points``, duplicates collapsed, sorted by f1."""
    uniq = sorted({(float(p[0]), float(p[1])) for p in points})
    front: list[ObjectiveVector] = []
    best_f2 = math.inf
    # after sorting by (f1, f2) a point survives iff its f2 beats every earlier f2
    for f1, f2 in uniq:
        if f2 < best_f2:
            front.append(ObjectiveVector(f1, f2))
            best_f2 = f2
    return front


@dataclass
class ArchiveEntry(Generic[T]):
    objectives: ObjectiveVector
    solution: T


@dataclass
class ParetoArchive(Generic[T]):
    """Mutually non-dominated entries; no two share an objective vector.

    The archive is single-owner: callers serialise inserts themselves.
    """

    capacity: Optional[int] = DEFAULT_CAPACITY
    entries: list[ArchiveEntry[T]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def points(self) -> list[ObjectiveVector]:
        return [e.objectives for e in self.entries]

    def insert(self, objectives: Sequence[float], solution: T) -> bool:
        """Offer a candidate; returns True when it was kept."""
        cand = ObjectiveVector(float(objectives[0]), float(objectives[1]))
        keep = []
        for e in self.entries:
            o = e.objectives
            if o == cand or dominates(o, cand):
                return False
            if not dominates(cand, o):
                keep.append(e)
        keep.append(ArchiveEntry(cand, solution))
        self.entries = keep
        if self.capacity is not None and len(self.entries) > self.capacity:
            self._evict()
        return any(e.objectives == cand for e in self.entries)

    def _evict(self) -> None:
        while len(self.entries) > self.capacity:
            crowd = crowding_distances([e.objectives for e in self.entries])
            victim = min(range(len(self.entries)), key=lambda i: (crowd[i], i))
            del self.entries[victim]

    def best(self, key) -> ArchiveEntry[T]:
        return min(self.entries, key=key)

    def sorted_entries(self) -> list[ArchiveEntry[T]]:
        return sorted(self.entries, key=lambda e: e.objectives)


def archive_insert(arch: ParetoArchive[T], cand: tuple[Sequence[float], T]) -> tuple[ParetoArchive[T], bool]:
    accepted = arch.insert(cand[0], cand[1])
    return arch, accepted


def crowding_distances(points: Sequence[Sequence[float]]) -> list[float]:
    """Two-objective crowding distance; the extreme points of each axis get infinity."""
    n = len(points)
    dist = [0.0] * n
    if n <= 2:
        return [math.inf] * n
    for m in range(2):
        order = sorted(range(n), key=lambda i: (points[i][m], i))
        lo, hi = points[order[0]][m], points[order[-1]][m]
        dist[order[0]] = dist[order[-1]] = math.inf
        span = hi - lo
        if span <= 0:
            continue
        for a, b, c in zip(order, order[1:], order[2:]):
            dist[b] += (points[c][m] - points[a][m]) / span
    return dist
