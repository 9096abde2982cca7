"""Relaxation lower bounds on both objectives and the scaling coefficients built from them."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .instance_model import DEPOT, Instance, travel_time

#: floor for the tardiness bound so that its reciprocal exists
TARDINESS_EPS = 1.0


class UndefinedBoundError(ValueError):
    pass


@dataclass(frozen=True)
class BoundsReport:
    f1_bound: float
    f2_bound: float
    f2_raw: float
    c1: float
    c2: float

    def to_dict(self) -> dict:
        return asdict(self)


def _require_couples(inst: Instance) -> None:
    if not inst.couples:
        raise UndefinedBoundError(f"{inst.name}: bounds need at least one couple")


def travel_cost_lower_bound(inst: Instance) -> float:
    """``C_min * d_min * (N' + 1)``.

    Any solution covering N' customers crosses at least N' + 1 arcs, each
    costing at least the cheapest rate times the shortest nonzero distance.
    """
    _require_couples(inst)
    n = len(inst.nodes)
    d_min = min(
        (inst.dist[i][j] for i in range(n) for j in range(i + 1, n) if inst.dist[i][j] > 0.0),
        default=0.0,
    )
    if d_min == 0.0:
        raise UndefinedBoundError(f"{inst.name}: all nodes coincide, no positive arc length")
    return min(inst.fleet.unit_cost) * d_min * (inst.n_customers + 1)


def earliest_departures(inst: Instance) -> list[float]:
    """Per node, a departure time no schedule can beat: each couple served alone by the fastest vehicle."""
    fleet = range(inst.fleet.count)
    nodes = inst.nodes
    low = [0.0] * len(nodes)
    for c in inst.couples:
        p, d = c.pickup_id, c.delivery_id
        reach = min(travel_time(inst, k, DEPOT, p) for k in fleet)
        low[p] = max(nodes[p].e, reach) + nodes[p].s
        leg = min(travel_time(inst, k, p, d) for k in fleet)
        low[d] = max(nodes[d].e, low[p] + leg) + nodes[d].s
    return low


def raw_tardiness_lower_bound(inst: Instance) -> float:
    _require_couples(inst)
    low = earliest_departures(inst)
    total = 0.0
    for i in range(1, len(inst.nodes)):
        total += max(0.0, low[i] - inst.nodes[i].l)
    return total


def tardiness_lower_bound(inst: Instance) -> float:
    return max(raw_tardiness_lower_bound(inst), TARDINESS_EPS)


def scaling_coefficients(f1_bound: float, f2_bound: float) -> tuple[float, float]:
    if f1_bound <= 0 or f2_bound <= 0:
        raise ValueError(f"bounds must be positive, got {f1_bound}, {f2_bound}")
    return 1.0 / f1_bound, 1.0 / f2_bound


def compute_bounds(inst: Instance) -> BoundsReport:
    f1b = travel_cost_lower_bound(inst)
    raw = raw_tardiness_lower_bound(inst)
    f2b = max(raw, TARDINESS_EPS)
    c1, c2 = scaling_coefficients(f1b, f2b)
    return BoundsReport(f1b, f2b, raw, c1, c2)
