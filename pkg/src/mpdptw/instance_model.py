"""Problem data for the multi-vehicle pickup and delivery problem with time windows.

An :class:`Instance` is immutable once built. Node 0 is the depot, every other
node belongs to exactly one pickup/delivery :class:`Couple`, and ids are dense.
Distances are Euclidean and precomputed on construction.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

DEPOT = 0


class ParseError(ValueError):
    """Raised when a Li & Lim file cannot be read; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    q: int
    e: float
    l: float
    s: float = 0.0


@dataclass(frozen=True)
class Couple:
    pickup_id: int
    delivery_id: int


@dataclass(frozen=True)
class Fleet:
    """Per-vehicle capacity, cost rate and speed; index k in ``0..count-1``."""

    capacity: tuple[float, ...]
    unit_cost: tuple[float, ...]
    speed: tuple[float, ...]

    @classmethod
    def homogeneous(cls, count: int, capacity: float, speed: float = 1.0, unit_cost: float = 1.0) -> "Fleet":
        return cls((capacity,) * count, (unit_cost,) * count, (speed,) * count)

    @property
    def count(self) -> int:
        return len(self.capacity)

    def scaled_cost(self, factor: float) -> "Fleet":
        return Fleet(self.capacity, tuple(c * factor for c in self.unit_cost), self.speed)


@dataclass(frozen=True)
class Violation:
    """One broken rule. ``hard=False`` marks informational entries (late service)."""

    rule: str
    subject: str
    detail: str = ""
    hard: bool = True

    def __str__(self) -> str:
        return f"{self.rule}: {self.subject} {self.detail}".rstrip()


@dataclass(frozen=True, eq=False)
class Instance:
    nodes: tuple[Node, ...]
    couples: tuple[Couple, ...]
    fleet: Fleet
    name: str = "instance"
    # derived lookups, filled in __post_init__
    dist: tuple[tuple[float, ...], ...] = field(init=False, repr=False)
    partner: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "couples", tuple(self.couples))
        rows = []
        for a in nodes:
            rows.append(tuple(math.sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)) for b in nodes))
        object.__setattr__(self, "dist", tuple(rows))
        partner = [-1] * len(nodes)
        for c in self.couples:
            if 0 <= c.pickup_id < len(nodes) and 0 <= c.delivery_id < len(nodes):
                partner[c.pickup_id] = c.delivery_id
                partner[c.delivery_id] = c.pickup_id
        object.__setattr__(self, "partner", tuple(partner))

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.nodes, self.couples, self.fleet, self.name) == (
            other.nodes, other.couples, other.fleet, other.name)

    def __hash__(self):
        return hash((self.nodes, self.couples, self.fleet))

    @property
    def horizon(self) -> float:
        return self.nodes[DEPOT].l

    @property
    def n_customers(self) -> int:
        """Number of non-depot nodes (N' in the usual notation)."""
        return len(self.nodes) - 1

    def is_pickup(self, i: int) -> bool:
        return i != DEPOT and self.nodes[i].q > 0

    def is_delivery(self, i: int) -> bool:
        return i != DEPOT and self.nodes[i].q < 0


def distance(inst: Instance, i: int, j: int) -> float:
    return inst.dist[i][j]


def travel_time(inst: Instance, k: int, i: int, j: int) -> float:
    return inst.dist[i][j] / inst.fleet.speed[k]


def validate_instance(inst: Instance) -> list[Violation]:
    """Return every broken invariant; an empty list means the instance is usable."""
    out: list[Violation] = []
    nodes = inst.nodes
    if not nodes:
        return [Violation("no-depot", "instance", "has no nodes")]
    for pos, n in enumerate(nodes):
        if n.id != pos:
            out.append(Violation("id-not-contiguous", f"node {n.id}", f"at position {pos}"))
        if n.e > n.l:
            out.append(Violation("window-inverted", f"node {n.id}", f"e={n.e} > l={n.l}"))
        if n.s < 0:
            out.append(Violation("negative-service", f"node {n.id}", f"s={n.s}"))
    if nodes[DEPOT].q != 0:
        out.append(Violation("depot-demand", "node 0", f"q={nodes[DEPOT].q}"))

    fl = inst.fleet
    if fl.count < 1:
        out.append(Violation("empty-fleet", "fleet"))
    if not (len(fl.capacity) == len(fl.unit_cost) == len(fl.speed)):
        out.append(Violation("fleet-shape", "fleet", "per-vehicle tuples differ in length"))
    for k, (cap, cost, sp) in enumerate(zip(fl.capacity, fl.unit_cost, fl.speed)):
        if cap <= 0:
            out.append(Violation("capacity-nonpositive", f"vehicle {k}", f"Q={cap}"))
        if cost <= 0:
            out.append(Violation("cost-nonpositive", f"vehicle {k}", f"C={cost}"))
        if sp <= 0:
            out.append(Violation("speed-nonpositive", f"vehicle {k}", f"speed={sp}"))

    seen: dict[int, int] = {}
    n_nodes = len(nodes)
    for ci, c in enumerate(inst.couples):
        label = f"couple {ci} ({c.pickup_id},{c.delivery_id})"
        ids_ok = True
        for i in (c.pickup_id, c.delivery_id):
            if i == DEPOT or not 0 <= i < n_nodes:
                out.append(Violation("bad-couple-id", label, f"id {i}"))
                ids_ok = False
            elif i in seen:
                out.append(Violation("node-in-several-couples", f"node {i}", f"couples {seen[i]} and {ci}"))
            else:
                seen[i] = ci
        if c.pickup_id == c.delivery_id:
            out.append(Violation("couple-self-paired", label))
        if not ids_ok:
            continue
        qp, qd = nodes[c.pickup_id].q, nodes[c.delivery_id].q
        if qp <= 0:
            out.append(Violation("pickup-not-positive", label, f"q={qp}"))
        if qp != -qd:
            out.append(Violation("quantity-mismatch", label, f"q(pickup)={qp}, q(delivery)={qd}"))
    for i in range(1, n_nodes):
        if i not in seen:
            out.append(Violation("node-without-couple", f"node {i}"))
    return out


def _num(tok: str, lineno: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(lineno, f"{what} is not a number: {tok!r}") from None


def _int(tok: str, lineno: int, what: str) -> int:
    v = _num(tok, lineno, what)
    if v != int(v):
        raise ParseError(lineno, f"{what} must be an integer: {tok!r}")
    return int(v)


def parse_lilim(text: str | Iterable[str], name: str = "instance") -> Instance:
    """Parse the Li & Lim PDPTW text layout.

    Line 1 is ``K Q speed``; every following non-blank line is
    ``id x y q e l s pickup_sibling delivery_sibling``.
    """
    lines = text.splitlines() if isinstance(text, str) else [ln.rstrip("\n") for ln in text]
    numbered = [(no, ln.split()) for no, ln in enumerate(lines, start=1) if ln.strip()]
    if not numbered:
        raise ParseError(1, "empty input, expected header 'K Q speed'")

    hno, head = numbered[0]
    if len(head) != 3:
        raise ParseError(hno, f"header needs 3 fields 'K Q speed', got {len(head)}")
    count = _int(head[0], hno, "vehicle count")
    cap = _num(head[1], hno, "capacity")
    speed = _num(head[2], hno, "speed")
    if count < 1 or cap <= 0 or speed <= 0:
        raise ParseError(hno, "vehicle count, capacity and speed must be positive")

    rows: dict[int, tuple[int, Node, int, int]] = {}
    for no, tok in numbered[1:]:
        if len(tok) != 9:
            raise ParseError(no, f"node row needs 9 fields, got {len(tok)}")
        nid = _int(tok[0], no, "id")
        if nid in rows:
            raise ParseError(no, f"duplicate id {nid} (first on line {rows[nid][0]})")
        node = Node(
            id=nid, x=_num(tok[1], no, "x"), y=_num(tok[2], no, "y"), q=_int(tok[3], no, "demand"),
            e=_num(tok[4], no, "e"), l=_num(tok[5], no, "l"), s=_num(tok[6], no, "service"))
        rows[nid] = (no, node, _int(tok[7], no, "pickup sibling"), _int(tok[8], no, "delivery sibling"))

    if DEPOT not in rows:
        raise ParseError(hno + 1, "missing depot row with id 0")
    expected = set(range(len(rows)))
    if set(rows) != expected:
        bad = min(set(rows) - expected)
        raise ParseError(rows[bad][0], f"ids must be contiguous 0..{len(rows) - 1}, found {bad}")

    couples = []
    for nid in sorted(rows):
        no, node, psib, dsib = rows[nid]
        if nid == DEPOT:
            if node.q != 0:
                raise ParseError(no, "depot demand must be 0")
            continue
        if psib == 0 and dsib == 0:
            raise ParseError(no, f"node {nid} has no sibling")
        if psib != 0 and dsib != 0:
            raise ParseError(no, f"node {nid} names both a pickup and a delivery sibling")
        sib = dsib if psib == 0 else psib
        if sib not in rows or sib == DEPOT:
            raise ParseError(no, f"dangling sibling reference {sib}")
        sno, snode, spsib, sdsib = rows[sib]
        if psib == 0:
            # pickup row
            if spsib != nid or sdsib != 0:
                raise ParseError(no, f"sibling {sib} does not point back to pickup {nid}")
            if node.q <= 0 or node.q != -snode.q:
                raise ParseError(no, f"pickup {nid} q={node.q} does not match delivery {sib} q={snode.q}")
            couples.append(Couple(nid, sib))
        elif spsib != 0 or sdsib != nid:
            raise ParseError(no, f"sibling {sib} does not point back to delivery {nid}")

    inst = Instance(
        nodes=tuple(rows[i][1] for i in sorted(rows)),
        couples=tuple(couples),
        fleet=Fleet.homogeneous(count, cap, speed),
        name=name,
    )
    problems = validate_instance(inst)
    if problems:
        raise ParseError(hno, f"invalid instance: {problems[0]}")
    return inst


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def serialize_lilim(inst: Instance) -> str:
    """Render an instance back to the Li & Lim layout (homogeneous fleet only)."""
    fl = inst.fleet
    if len(set(fl.capacity)) != 1 or len(set(fl.speed)) != 1:
        raise ValueError("Li & Lim files describe a homogeneous fleet only")
    lines = [f"{fl.count}\t{_fmt(fl.capacity[0])}\t{_fmt(fl.speed[0])}"]
    for n in inst.nodes:
        p = inst.partner[n.id]
        psib, dsib = (0, 0) if n.id == DEPOT else ((0, p) if n.q > 0 else (p, 0))
        lines.append("\t".join([str(n.id), _fmt(n.x), _fmt(n.y), str(n.q), _fmt(n.e), _fmt(n.l), _fmt(n.s),
                                str(psib), str(dsib)]))
    return "\n".join(lines) + "\n"


def load_lilim(path) -> Instance:
    from pathlib import Path

    p = Path(path)
    return parse_lilim(p.read_text(), name=p.stem.upper())


def select_couples(inst: Instance, keep: Sequence[int], name: str | None = None) -> Instance:
    """Sub-instance holding only the couples at positions ``keep``, ids renumbered densely.

    Couples keep their relative order; pickup gets the lower new id of each pair.
    """
    nodes = [inst.nodes[DEPOT]]
    couples = []
    for ci in keep:
        c = inst.couples[ci]
        pid, did = len(nodes), len(nodes) + 1
        p, d = inst.nodes[c.pickup_id], inst.nodes[c.delivery_id]
        nodes.append(Node(pid, p.x, p.y, p.q, p.e, p.l, p.s))
        nodes.append(Node(did, d.x, d.y, d.q, d.e, d.l, d.s))
        couples.append(Couple(pid, did))
    return Instance(tuple(nodes), tuple(couples), inst.fleet, name or inst.name)


def with_couple(inst: Instance, pickup: Node, delivery: Node) -> Instance:
    """New instance with one extra couple appended at ids ``N+1`` and ``N+2``."""
    pid = len(inst.nodes)
    p = Node(pid, pickup.x, pickup.y, pickup.q, pickup.e, pickup.l, pickup.s)
    d = Node(pid + 1, delivery.x, delivery.y, delivery.q, delivery.e, delivery.l, delivery.s)
    return Instance(inst.nodes + (p, d), inst.couples + (Couple(pid, pid + 1),), inst.fleet, inst.name)


def _euclid(a, b) -> float:
    return math.sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]))


def generate_synthetic(
    n_couples: int,
    window_tightness: float,
    seed: int,
    n_vehicles: int = 2,
    capacity: int = 20,
    extent: float = 100.0,
) -> Instance:
    """Random instance where each couple alone is servable on time by an empty vehicle.

    ``window_tightness`` in [0, 1]: 0 gives wide windows, 1 gives windows exactly
    as long as the service time.
    """
    if n_couples < 1:
        raise ValueError("n_couples must be >= 1")
    if not 0.0 <= window_tightness <= 1.0:
        raise ValueError("window_tightness must lie in [0, 1]")
    rng = random.Random(seed)
    depot_xy = (extent / 2, extent / 2)
    span = 2.0 * extent
    width = (1.0 - window_tightness) * span

    def pt():
        return round(rng.uniform(0, extent), 1), round(rng.uniform(0, extent), 1)

    raw = []
    horizon = 0.0
    for _ in range(n_couples):
        (px, py), (dx, dy) = pt(), pt()
        q = rng.randint(1, max(1, capacity // 2))
        sp, sd = float(rng.randint(0, 10)), float(rng.randint(0, 10))
        reach_p = _euclid(depot_xy, (px, py))
        ep = math.ceil(reach_p + rng.uniform(0, span))
        lp = ep + sp + math.ceil(rng.uniform(0, width))
        leg = _euclid((px, py), (dx, dy))
        ed = math.ceil(ep + sp + leg + rng.uniform(0, span / 2))
        ld = ed + sd + math.ceil(rng.uniform(0, width))
        horizon = max(horizon, ld + _euclid((dx, dy), depot_xy))
        raw.append(((px, py, q, ep, lp, sp), (dx, dy, -q, ed, ld, sd)))

    nodes = [Node(DEPOT, depot_xy[0], depot_xy[1], 0, 0.0, float(math.ceil(horizon)), 0.0)]
    couples = []
    for (pp, dd) in raw:
        pid = len(nodes)
        nodes.append(Node(pid, pp[0], pp[1], pp[2], float(pp[3]), float(pp[4]), pp[5]))
        nodes.append(Node(pid + 1, dd[0], dd[1], dd[2], float(dd[3]), float(dd[4]), dd[5]))
        couples.append(Couple(pid, pid + 1))
    return Instance(tuple(nodes), tuple(couples), Fleet.homogeneous(n_vehicles, capacity),
                    name=f"SYN{n_couples}-{seed}")


def generate_lrc_like(seed: int, n_couples: int = 53, n_vehicles: int = 25, capacity: int = 200,
                      horizon: int = 240, service: float = 10.0) -> Instance:
    """Stand-in with the shape of an LRC1 file: mixed clustered/random points, short horizon.

    Half the pickups fall into a few clusters, the rest are uniform. Windows are
    30 wide, except one couple in four whose delivery window spans the horizon.
    Every couple alone is servable on time from the depot.
    """
    rng = random.Random(seed)
    depot = (40.0, 50.0)
    centres = [(rng.uniform(10, 90), rng.uniform(10, 90)) for _ in range(8)]

    def pt():
        if rng.random() < 0.5:
            cx, cy = centres[rng.randrange(len(centres))]
            return (round(min(100.0, max(0.0, rng.gauss(cx, 5))), 0),
                    round(min(100.0, max(0.0, rng.gauss(cy, 5))), 0))
        return float(rng.randint(0, 100)), float(rng.randint(0, 100))

    nodes = [Node(DEPOT, depot[0], depot[1], 0, 0.0, float(horizon), 0.0)]
    couples = []
    while len(couples) < n_couples:
        p, d = pt(), pt()
        to_p, leg, back = _euclid(depot, p), _euclid(p, d), _euclid(d, depot)
        slack = horizon - (to_p + service + leg + service + back)
        if slack < 40:
            continue
        q = rng.randint(1, 4) * 10
        ep = math.ceil(to_p + rng.uniform(0, slack - 30))
        lp = ep + 30
        ed = math.ceil(ep + service + leg)
        if rng.random() < 0.25:
            ed, ld = 0, horizon - math.ceil(back) - service
        else:
            ed = min(ed + rng.randint(0, 20), horizon - math.ceil(back) - service - 30)
            ld = ed + 30
        pid = len(nodes)
        nodes.append(Node(pid, p[0], p[1], q, float(ep), float(lp), service))
        nodes.append(Node(pid + 1, d[0], d[1], -q, float(ed), float(ld), service))
        couples.append(Couple(pid, pid + 1))
    return Instance(tuple(nodes), tuple(couples), Fleet.homogeneous(n_vehicles, capacity),
                    name=f"LRCLIKE-{seed}")
