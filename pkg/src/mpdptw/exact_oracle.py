"""Exhaustive enumeration of hard-feasible solutions for tiny instances.

Used as the ground truth for the genetic search. It shares nothing with the
search path except the reference objective functions in ``schedule_eval``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .instance_model import DEPOT, Instance
from .pareto import extract_front
from .schedule_eval import ObjectiveVector, Solution, objectives

MAX_COUPLES = 5
MAX_VEHICLES = 3


class SizeGuardError(ValueError):
    pass


@dataclass
class OracleResult:
    front: list[tuple[ObjectiveVector, Solution]]
    enumerated: int

    def points(self) -> list[ObjectiveVector]:
        return [p for p, _ in self.front]


def _check_guard(inst: Instance, max_couples: int, max_vehicles: int) -> None:
    if len(inst.couples) > max_couples or inst.fleet.count > max_vehicles:
        raise SizeGuardError(
            f"{inst.name}: {len(inst.couples)} couples / {inst.fleet.count} vehicles exceeds "
            f"the enumeration guard ({max_couples} / {max_vehicles})")


def _orderings(inst: Instance, couples: list, cap: float) -> Iterator[tuple[int, ...]]:
    """Every visit order of ``couples`` with pickups before deliveries and load within [0, cap]."""
    total = 2 * len(couples)
    nodes = inst.nodes

    def rec(seq, picked, done, load):
        if len(seq) == total:
            yield tuple(seq)
            return
        for ci, c in enumerate(couples):
            if ci not in picked:
                q = nodes[c.pickup_id].q
                if load + q <= cap:
                    seq.append(c.pickup_id)
                    picked.add(ci)
                    yield from rec(seq, picked, done, load + q)
                    picked.discard(ci)
                    seq.pop()
            elif ci not in done:
                seq.append(c.delivery_id)
                done.add(ci)
                yield from rec(seq, picked, done, load + nodes[c.delivery_id].q)
                done.discard(ci)
                seq.pop()

    yield from rec([], set(), set(), 0)


def enumerate_solutions(inst: Instance, max_couples: int = MAX_COUPLES,
                        max_vehicles: int = MAX_VEHICLES) -> Iterator[Solution]:
    """Yield every assignment of couples to vehicles and every feasible order within each route.

    Time windows never prune (they are soft). Refuses instances past the guard.
    """
    _check_guard(inst, max_couples, max_vehicles)
    K = inst.fleet.count
    couples = list(inst.couples)
    for assign in itertools.product(range(K), repeat=len(couples)):
        per_vehicle = []
        for k in range(K):
            mine = [c for c, a in zip(couples, assign) if a == k]
            per_vehicle.append(list(_orderings(inst, mine, inst.fleet.capacity[k])))
        for bodies in itertools.product(*per_vehicle):
            yield Solution(tuple((DEPOT,) + b + (DEPOT,) for b in bodies))


def exact_front(inst: Instance, max_couples: int = MAX_COUPLES,
                max_vehicles: int = MAX_VEHICLES) -> OracleResult:
    first_seen: dict[ObjectiveVector, Solution] = {}
    count = 0
    for sol in enumerate_solutions(inst, max_couples, max_vehicles):
        count += 1
        first_seen.setdefault(objectives(inst, sol), sol)
    front = extract_front(first_seen)
    return OracleResult([(p, first_seen[p]) for p in front], count)
