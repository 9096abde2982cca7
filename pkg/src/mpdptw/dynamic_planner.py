"""Dynamic requests: freezing served visits and inserting couples that appear mid-route.

Method 1 places the new couple at the cheapest pair of positions of the current
incumbent. Method 2 re-runs the genetic search on everything not yet served,
with each vehicle's committed prefix fixed in front of its genes.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .bounds import BoundsReport, compute_bounds
from .evolution import (GaConfig, RunStats, Search, default_weights, encode, run_search, run_static)
from .instance_model import Instance, Node, validate_instance, with_couple
from .kernels import make_kernel
from .pareto import ParetoArchive
from .schedule_eval import ObjectiveVector, Solution, Weights, aggregate_fitness, propagate_schedule

log = logging.getLogger(__name__)

EVENT_FIELDS = ("t_d", "px", "py", "pq", "pe", "pl", "ps", "dx", "dy", "dq", "de", "dl", "ds")


class InsertionError(RuntimeError):
    """No capacity-feasible placement exists for a dynamic couple."""


@dataclass(frozen=True)
class DynamicEvent:
    t_d: float
    pickup: Node
    delivery: Node

    def __post_init__(self):
        if self.t_d < 0:
            raise ValueError(f"appearance time must be >= 0, got {self.t_d}")
        if self.pickup.q <= 0 or self.pickup.q != -self.delivery.q:
            raise ValueError(f"unbalanced couple quantities {self.pickup.q} / {self.delivery.q}")

    def row(self) -> list:
        p, d = self.pickup, self.delivery
        return [self.t_d, p.x, p.y, p.q, p.e, p.l, p.s, d.x, d.y, d.q, d.e, d.l, d.s]


def read_events(source) -> list[DynamicEvent]:
    """Parse the event CSV (path or text). A leading ``t_d,...`` header and ``#`` lines are skipped."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and "," not in source):
        text = Path(source).read_text()
    else:
        text = source
    events = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not cells or not any(cells) or cells[0].startswith("#"):
            continue
        if cells[0] == "t_d":
            continue
        if len(cells) != len(EVENT_FIELDS):
            raise ValueError(f"events line {lineno}: expected {len(EVENT_FIELDS)} fields, got {len(cells)}")
        try:
            v = [float(c) for c in cells]
        except ValueError as exc:
            raise ValueError(f"events line {lineno}: {exc}") from None
        if v[3] != int(v[3]) or v[9] != int(v[9]):
            raise ValueError(f"events line {lineno}: quantities must be integers")
        if v[9] != -v[3]:
            raise ValueError(f"events line {lineno}: dq must equal -pq")
        pickup = Node(-1, v[1], v[2], int(v[3]), v[4], v[5], v[6])
        delivery = Node(-1, v[7], v[8], int(v[9]), v[10], v[11], v[12])
        events.append(DynamicEvent(v[0], pickup, delivery))
    return events


def write_events(events: Iterable[DynamicEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for ev in events:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in ev.row()])
    return buf.getvalue()


@dataclass(frozen=True)
class FrozenPlan:
    base: Solution
    t_d: float
    frozen_len: tuple[int, ...]
    release_node: tuple[int, ...]
    release_time: tuple[float, ...]

    def prefix(self, k: int) -> tuple[int, ...]:
        return self.base.routes[k][:self.frozen_len[k]]

    def prefixes(self) -> list[tuple[int, ...]]:
        return [self.prefix(k) for k in range(len(self.base.routes))]

    def closed(self, k: int) -> bool:
        return self.frozen_len[k] == len(self.base.routes[k]) and len(self.base.routes[k]) > 2

    def extended_by(self, sol: Solution) -> bool:
        """Whether ``sol`` keeps every committed visit of this plan in place."""
        if len(sol.routes) != len(self.base.routes):
            return False
        for k, route in enumerate(sol.routes):
            head = self.prefix(k)
            if tuple(route[:len(head)]) != head:
                return False
            if self.closed(k) and tuple(route) != head:
                return False
        return True


def freeze_prefix(inst: Instance, sol: Solution, t_d: float) -> FrozenPlan:
    """Per route, the longest prefix whose departures are all at or before ``t_d``.

    The start depot is always frozen. An unused vehicle never freezes its
    closing depot, so it stays available for new work.
    """
    lens, nodes, times = [], [], []
    for k, route in enumerate(sol.routes):
        sched = propagate_schedule(inst, k, route)
        n = 1
        while n < len(route) and sched.departure[n] <= t_d:
            n += 1
        if len(route) == 2:
            n = 1
        lens.append(n)
        nodes.append(route[n - 1])
        times.append(sched.departure[n - 1])
    return FrozenPlan(sol, float(t_d), tuple(lens), tuple(nodes), tuple(times))


def insert_method1(inst: Instance, frozen: FrozenPlan, ev: DynamicEvent, weights: Weights) -> Solution:
    """Cheapest placement of the event couple into the unfrozen part of a single vehicle.

    ``inst`` is the instance before the event; the couple takes ids ``N`` and
    ``N+1`` and the result lives on ``with_couple(inst, ev.pickup, ev.delivery)``.
    ``weights`` should be those of that extended instance. Every vehicle and
    every pair of positions with the pickup first is tried; placements breaking
    capacity are skipped. Ties keep the first placement in (vehicle, pickup,
    delivery) order.
    """
    ext = with_couple(inst, ev.pickup, ev.delivery)
    return _insert_couple(ext, frozen, len(inst.nodes), len(inst.nodes) + 1, weights)


def _insert_couple(inst: Instance, frozen: FrozenPlan, pickup_id: int, delivery_id: int,
                   weights: Weights) -> Solution:
    kern = make_kernel(inst, weights, backend="python")
    routes = [list(r) for r in frozen.base.routes]
    evals = [kern.route_eval(r, k) for k, r in enumerate(routes)]
    costs = [e[0] for e in evals]
    tards = [e[1] for e in evals]
    cap = inst.fleet.capacity
    best = None
    best_f = math.inf
    for k, route in enumerate(routes):
        if frozen.closed(k):
            continue
        start = frozen.frozen_len[k]
        for p in range(start, len(route)):
            with_p = route[:p] + [pickup_id] + route[p:]
            for d in range(p + 1, len(with_p)):
                cand = with_p[:d] + [delivery_id] + with_p[d:]
                c, t, peak, low = kern.route_eval(cand, k)
                if peak > cap[k] or low < 0:
                    continue
                cs, ts = costs[:], tards[:]
                cs[k], ts[k] = c, t
                f = aggregate_fitness(ObjectiveVector(math.fsum(cs), math.fsum(ts)), weights)
                if f < best_f:
                    best_f = f
                    best = (k, cand)
    if best is None:
        raise InsertionError(f"couple ({pickup_id},{delivery_id}) fits no vehicle")
    k, cand = best
    routes[k] = cand
    return Solution(tuple(tuple(r) for r in routes))


def run_method2(inst: Instance, frozen: FrozenPlan, events: Sequence[DynamicEvent], cfg: GaConfig,
                seeds: Iterable[Solution] = ()) -> tuple[ParetoArchive, Instance, RunStats]:
    """Re-optimise everything after the committed prefixes, new couples included.

    Returns the archive, the instance extended with the event couples, and run statistics.
    ``seeds`` are complete solutions on the extended instance that start the population.
    """
    ext = inst
    for ev in events:
        ext = with_couple(ext, ev.pickup, ev.delivery)
    prefixes = frozen.prefixes()
    search = Search(ext, cfg, prefixes=prefixes)
    chroms = []
    for sol in seeds:
        try:
            chroms.append(encode(sol, prefixes))
        except ValueError:
            continue
    archive, stats, _ = run_search(search, chroms)
    return archive, ext, stats


@dataclass
class EventOutcome:
    index: int
    t_d: float
    served: bool
    pickup_id: Optional[int] = None
    delivery_id: Optional[int] = None
    vehicle: Optional[int] = None
    frozen_len: tuple[int, ...] = ()
    f1: Optional[float] = None
    f2: Optional[float] = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "index": self.index, "t_d": self.t_d, "served": self.served,
            "pickup_id": self.pickup_id, "delivery_id": self.delivery_id, "vehicle": self.vehicle,
            "frozen_len": list(self.frozen_len), "f1": self.f1, "f2": self.f2, "reason": self.reason,
        }


@dataclass
class DynamicRun:
    instance: Instance
    archive: ParetoArchive
    incumbent: Solution
    weights: Weights
    bounds: BoundsReport
    outcomes: list[EventOutcome] = field(default_factory=list)
    commitments: list[FrozenPlan] = field(default_factory=list)
    emitted: list[list[Solution]] = field(default_factory=list)
    stats: list[RunStats] = field(default_factory=list)


def _incumbent(archive: ParetoArchive, weights: Weights) -> Solution:
    entry = archive.best(lambda e: (aggregate_fitness(e.objectives, weights), e.objectives))
    return entry.solution


def _vehicle_of(sol: Solution, node: int) -> Optional[int]:
    for k, r in enumerate(sol.routes):
        if node in r:
            return k
    return None


def run_dynamic(inst: Instance, events: Sequence[DynamicEvent], cfg: GaConfig, method: int,
                initial: Optional[tuple[ParetoArchive, RunStats]] = None) -> DynamicRun:
    """Static plan first, then each event in time order handled by Method 1 or Method 2.

    ``initial`` is a finished ``run_static(inst, cfg)`` result to start from
    instead of recomputing it.
    """
    if method not in (1, 2):
        raise ValueError(f"method must be 1 or 2, got {method}")
    if any(b.t_d < a.t_d for a, b in zip(events, events[1:])):
        raise ValueError("events must be sorted by appearance time")
    archive, stats = initial if initial is not None else run_static(inst, cfg)
    archive = ParetoArchive(archive.capacity, list(archive.entries))
    weights = default_weights(inst, cfg.lambda1, cfg.lambda2)
    run = DynamicRun(inst, archive, _incumbent(archive, weights), weights, compute_bounds(inst),
                     stats=[stats])
    for idx, ev in enumerate(events):
        frozen = freeze_prefix(run.instance, run.incumbent, ev.t_d)
        ext = with_couple(run.instance, ev.pickup, ev.delivery)
        problems = validate_instance(ext)
        pid, did = len(run.instance.nodes), len(run.instance.nodes) + 1
        if problems:
            run.outcomes.append(EventOutcome(idx, ev.t_d, False, frozen_len=frozen.frozen_len,
                                             reason=f"invalid couple: {problems[0]}"))
            continue
        w_ext = default_weights(ext, cfg.lambda1, cfg.lambda2)
        # archive entries still compatible with what the fleet has already done
        alive = [e.solution for e in run.archive.sorted_entries()
                 if e.solution != run.incumbent and frozen.extended_by(e.solution)]
        try:
            first = _insert_couple(ext, frozen, pid, did, w_ext)
        except InsertionError as exc:
            first = None
            reason = str(exc)
        inserted = [first] if first is not None else []
        for sol in alive:
            try:
                inserted.append(_insert_couple(ext, FrozenPlan(sol, frozen.t_d, frozen.frozen_len,
                                                               frozen.release_node, frozen.release_time),
                                               pid, did, w_ext))
            except InsertionError:
                pass

        if method == 1:
            if first is None:
                run.outcomes.append(EventOutcome(idx, ev.t_d, False, frozen_len=frozen.frozen_len, reason=reason))
                continue
            new_archive: ParetoArchive = ParetoArchive(capacity=cfg.archive_capacity)
            ext_kernel = make_kernel(ext, w_ext, backend="python")
            for sol in inserted:
                new_archive.insert(ext_kernel.evaluate(sol.routes), sol)
        else:
            cfg_event = replace(cfg, seed=cfg.seed + idx + 1)
            try:
                new_archive, _, st = run_method2(run.instance, frozen, [ev], cfg_event, seeds=inserted)
            except RuntimeError as exc:
                run.outcomes.append(EventOutcome(idx, ev.t_d, False, frozen_len=frozen.frozen_len, reason=str(exc)))
                continue
            run.stats.append(st)
        incumbent = _incumbent(new_archive, w_ext)

        run.commitments.append(frozen)
        run.emitted.append([e.solution for e in new_archive.sorted_entries()])
        run.instance = ext
        run.archive = new_archive
        run.weights = w_ext
        run.bounds = compute_bounds(ext)
        run.incumbent = incumbent
        f1, f2 = make_kernel(ext, w_ext, backend="python").evaluate(incumbent.routes)
        run.outcomes.append(EventOutcome(idx, ev.t_d, True, pid, did, _vehicle_of(incumbent, pid),
                                         frozen.frozen_len, f1, f2))
        log.info("event %d at t=%.1f served by vehicle %s (f1=%.2f f2=%.2f)",
                 idx, ev.t_d, _vehicle_of(incumbent, pid), f1, f2)
    return run
