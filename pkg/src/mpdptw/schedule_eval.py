"""Route schedules, objectives and feasibility checks.

Time windows are soft: lateness of a departure is summed into the tardiness
objective. Precedence, capacity, single visits, depot bracketing and keeping
each couple on one vehicle are hard rules reported by :func:`feasibility_report`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .instance_model import DEPOT, Instance, Violation


@dataclass(frozen=True)
class Solution:
    """One depot-bracketed route per vehicle."""

    routes: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(tuple(r) for r in self.routes))

    @classmethod
    def trusted(cls, routes: tuple[tuple[int, ...], ...]) -> "Solution":
        """Wrap routes that are already tuples of tuples, skipping the copy."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "routes", routes)
        return obj

    @classmethod
    def empty(cls, n_vehicles: int) -> "Solution":
        return cls(tuple((DEPOT, DEPOT) for _ in range(n_vehicles)))

    @property
    def used_vehicles(self) -> int:
        return sum(1 for r in self.routes if len(r) > 2)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def to_dict(self) -> dict[str, list[int]]:
        return {str(k): list(r) for k, r in enumerate(self.routes)}

    @classmethod
    def from_dict(cls, data: dict) -> "Solution":
        keys = sorted(data, key=int)
        if [int(k) for k in keys] != list(range(len(keys))):
            raise ValueError(f"vehicle keys must be 0..{len(keys) - 1}, got {keys}")
        return cls(tuple(tuple(int(v) for v in data[k]) for k in keys))

    @classmethod
    def from_json(cls, text: str) -> "Solution":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class RouteSchedule:
    nodes: tuple[int, ...]
    arrival: tuple[float, ...]
    wait: tuple[float, ...]
    departure: tuple[float, ...]
    load: tuple[float, ...]


class ObjectiveVector(NamedTuple):
    f1: float  # travel cost
    f2: float  # tardiness


@dataclass(frozen=True)
class Weights:
    lambda1: float = 0.5
    lambda2: float = 0.5
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or abs(self.lambda1 + self.lambda2 - 1.0) > 1e-12:
            raise ValueError(f"weights must be nonnegative and sum to 1, got {self.lambda1}, {self.lambda2}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError(f"scaling coefficients must be positive, got {self.c1}, {self.c2}")

    @property
    def w1(self) -> float:
        return self.lambda1 * self.c1

    @property
    def w2(self) -> float:
        return self.lambda2 * self.c2


def _check_bracketed(route: Sequence[int]) -> None:
    if len(route) < 2 or route[0] != DEPOT or route[-1] != DEPOT:
        raise ValueError(f"route must start and end at the depot: {list(route)}")


def propagate_schedule(inst: Instance, k: int, route: Sequence[int]) -> RouteSchedule:
    """Arrival, wait, departure and load at every stop of ``route`` driven by vehicle ``k``."""
    _check_bracketed(route)
    speed = inst.fleet.speed[k]
    dist, nodes = inst.dist, inst.nodes
    arr, wait, dep, load = [0.0], [0.0], [0.0], [0.0]
    t, y = 0.0, 0
    for i, j in zip(route, route[1:]):
        a = t + dist[i][j] / speed
        nj = nodes[j]
        start = a if a > nj.e else nj.e
        t = start + nj.s
        y = y + nj.q
        arr.append(a)
        wait.append(start - a)
        dep.append(t)
        load.append(y)
    return RouteSchedule(tuple(route), tuple(arr), tuple(wait), tuple(dep), tuple(load))


def route_cost(inst: Instance, k: int, route: Sequence[int]) -> float:
    dist = inst.dist
    total = 0.0
    for i, j in zip(route, route[1:]):
        total += dist[i][j]
    return inst.fleet.unit_cost[k] * total


def route_tardiness(inst: Instance, k: int, route: Sequence[int]) -> float:
    sched = propagate_schedule(inst, k, route)
    total = 0.0
    for node, d in zip(sched.nodes, sched.departure):
        if node != DEPOT:
            late = d - inst.nodes[node].l
            if late > 0.0:
                total += late
    return total


def total_travel_cost(inst: Instance, sol: Solution) -> float:
    return math.fsum(route_cost(inst, k, r) for k, r in enumerate(sol.routes))


def total_tardiness(inst: Instance, sol: Solution) -> float:
    return math.fsum(route_tardiness(inst, k, r) for k, r in enumerate(sol.routes))


def objectives(inst: Instance, sol: Solution) -> ObjectiveVector:
    return ObjectiveVector(total_travel_cost(inst, sol), total_tardiness(inst, sol))


def aggregate_fitness(obj: ObjectiveVector, w: Weights) -> float:
    return w.lambda1 * w.c1 * obj[0] + w.lambda2 * w.c2 * obj[1]


def feasibility_report(inst: Instance, sol: Solution) -> list[Violation]:
    """All rule breaches of ``sol``; window lateness appears with ``hard=False``."""
    out: list[Violation] = []
    n_nodes = len(inst.nodes)
    if len(sol.routes) != inst.fleet.count:
        out.append(Violation("route-count", "solution", f"{len(sol.routes)} routes for {inst.fleet.count} vehicles"))

    where: dict[int, tuple[int, int]] = {}
    for k, route in enumerate(sol.routes):
        if len(route) < 2 or route[0] != DEPOT or route[-1] != DEPOT:
            out.append(Violation("depot-bracket", f"vehicle {k}", "route must start and end at depot 0"))
            continue
        for pos, node in enumerate(route[1:-1], start=1):
            if node == DEPOT:
                out.append(Violation("depot-bracket", f"vehicle {k}", f"depot inside route at position {pos}"))
            elif not 0 < node < n_nodes:
                out.append(Violation("unknown-node", f"vehicle {k}", f"node {node}"))
            elif node in where:
                out.append(Violation("duplicate-visit", f"node {node}", f"vehicles {where[node][0]} and {k}"))
            else:
                where[node] = (k, pos)
    for node in range(1, n_nodes):
        if node not in where:
            out.append(Violation("missing-visit", f"node {node}"))

    departures: dict[int, float] = {}
    for k, route in enumerate(sol.routes):
        if k >= inst.fleet.count or len(route) < 2 or route[0] != DEPOT or route[-1] != DEPOT:
            continue
        if any(not 0 <= n < n_nodes for n in route):
            continue
        sched = propagate_schedule(inst, k, route)
        cap = inst.fleet.capacity[k]
        for node, d, y in zip(sched.nodes, sched.departure, sched.load):
            if y > cap or y < 0:
                out.append(Violation("capacity", f"vehicle {k} node {node}", f"load {y} outside [0, {cap}]"))
            if node != DEPOT:
                departures.setdefault(node, d)
                if d > inst.nodes[node].l:
                    out.append(Violation("late-departure", f"vehicle {k} node {node}",
                                         f"D={d} > l={inst.nodes[node].l}", hard=False))

    for c in inst.couples:
        p, dlv = c.pickup_id, c.delivery_id
        if p not in where or dlv not in where:
            continue
        (kp, pos_p), (kd, pos_d) = where[p], where[dlv]
        if kp != kd:
            out.append(Violation("couple-split", f"couple ({p},{dlv})", f"vehicles {kp} and {kd}"))
        elif pos_d < pos_p or departures[dlv] <= departures[p]:
            out.append(Violation("precedence", f"couple ({p},{dlv})",
                                 f"customer {dlv} served before supplier {p} on vehicle {kp}"))
    return out


def hard_violations(inst: Instance, sol: Solution) -> list[Violation]:
    return [v for v in feasibility_report(inst, sol) if v.hard]
