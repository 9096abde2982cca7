"""Genetic search over (permutation, split) chromosomes with a Pareto archive.

A chromosome is the permutation of nodes to visit plus the number of those
nodes given to each vehicle, in vehicle order. Every chromosome goes through
the repair pipeline (precedence, couple pairing, capacity) before it is
scored, so the population and archive only ever hold hard-feasible routes.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .bounds import compute_bounds
from .instance_model import DEPOT, Instance
from .kernels import BACKEND, make_kernel
from .pareto import ParetoArchive
from .schedule_eval import ObjectiveVector, Solution, Weights

log = logging.getLogger(__name__)

#: returned by :func:`capacity_correction` when no vehicle can take an overflowing couple
INFEASIBLE = None


@dataclass(frozen=True)
class Chromosome:
    perm: tuple[int, ...]
    splits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "perm", tuple(self.perm))
        object.__setattr__(self, "splits", tuple(self.splits))
        if len(set(self.perm)) != len(self.perm):
            raise ValueError("perm repeats a node")
        if any(n < 0 for n in self.splits) or sum(self.splits) != len(self.perm):
            raise ValueError(f"splits {self.splits} do not partition {len(self.perm)} genes")

    @classmethod
    def trusted(cls, perm: tuple[int, ...], splits: tuple[int, ...]) -> "Chromosome":
        """Build without validation; for operator outputs that preserve the invariants."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "perm", perm)
        object.__setattr__(obj, "splits", splits)
        return obj


@dataclass
class GaConfig:
    pop_size: int = 50
    generations: int = 200
    p_crossover: float = 0.7
    p_mutation: float = 0.2
    p_copy: float = 0.1
    lambda1: float = 0.5
    lambda2: float = 0.5
    mv: int = 4
    seed: int = 0
    archive_capacity: Optional[int] = 256

    def __post_init__(self):
        probs = (self.p_crossover, self.p_mutation, self.p_copy)
        if any(not 0.0 <= p <= 1.0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"operator probabilities must lie in [0, 1] and sum to 1, got {probs}")
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.mv < 1:
            raise ValueError("mv must be >= 1")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        Weights(self.lambda1, self.lambda2)  # validates the lambdas

    @classmethod
    def from_mapping(cls, data: dict) -> "GaConfig":
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in data.items():
            if key not in types:
                raise ValueError(f"unknown GaConfig key {key!r}")
            if isinstance(raw, str):
                txt = raw.strip()
                if key == "archive_capacity" and txt.lower() in ("none", ""):
                    kwargs[key] = None
                    continue
                kwargs[key] = int(txt) if types[key] in ("int", "Optional[int]") else float(txt)
            else:
                kwargs[key] = raw
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "GaConfig":
        """Read flat ``key = value`` lines; ``#`` starts a comment."""
        data = {}
        for no, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{no}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            data[key] = val
        return cls.from_mapping(data)


@dataclass
class Individual:
    chrom: Chromosome
    routes: tuple[tuple[int, ...], ...]
    f1: float
    f2: float
    fitness: float

    @property
    def objectives(self) -> ObjectiveVector:
        return ObjectiveVector(self.f1, self.f2)


@dataclass
class RunStats:
    generations: int = 0
    evaluations: int = 0
    infeasible: int = 0
    best_fitness: list[float] = field(default_factory=list)
    n_sol: int = 0
    n_k: list[int] = field(default_factory=list)
    backend: str = BACKEND
    seconds: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "generations": self.generations,
            "evaluations": self.evaluations,
            "infeasible": self.infeasible,
            "N_sol": self.n_sol,
            "N_k": list(self.n_k),
            "best_F": list(self.best_fitness),
        }
        if timing:
            out["seconds"] = self.seconds
            out["backend"] = self.backend
        return out


# -- encoding ----------------------------------------------------------------

def _prefix_list(n_vehicles: int, prefixes) -> list[list[int]]:
    return [[DEPOT] for _ in range(n_vehicles)] if prefixes is None else [list(p) for p in prefixes]


def decode(chrom: Chromosome, prefixes: Sequence[Sequence[int]] | None = None) -> Solution:
    """Vehicle k gets the k-th block of ``perm``, after its frozen prefix, closed by the depot."""
    pref = _prefix_list(len(chrom.splits), prefixes)
    routes = []
    pos = 0
    for k, n in enumerate(chrom.splits):
        closed = len(pref[k]) >= 2 and pref[k][-1] == DEPOT
        if closed:
            if n:
                raise ValueError(f"vehicle {k} is closed")
            routes.append(tuple(pref[k]))
        else:
            routes.append(tuple(pref[k]) + chrom.perm[pos:pos + n] + (DEPOT,))
        pos += n
    return Solution(tuple(routes))


def encode(sol: Solution, prefixes: Sequence[Sequence[int]] | None = None) -> Chromosome:
    pref = _prefix_list(len(sol.routes), prefixes)
    perm: list[int] = []
    splits = []
    for k, r in enumerate(sol.routes):
        if len(pref[k]) >= 2 and pref[k][-1] == DEPOT:
            if tuple(r) != tuple(pref[k]):
                raise ValueError(f"closed vehicle {k} route differs from its prefix")
            splits.append(0)
            continue
        if tuple(r[:len(pref[k])]) != tuple(pref[k]) or r[-1] != DEPOT:
            raise ValueError(f"route {k} does not extend its frozen prefix")
        body = r[len(pref[k]):-1]
        perm.extend(body)
        splits.append(len(body))
    return Chromosome(tuple(perm), tuple(splits))


# -- operators ---------------------------------------------------------------

def order_crossover(p1: Sequence[int], p2: Sequence[int], start: int, stop: int) -> list[int]:
    """Keep ``p1[start:stop]`` in place and fill the other slots with p2's remaining genes in order."""
    kept = set(p1[start:stop])
    filler = iter(g for g in p2 if g not in kept)
    return [p1[i] if start <= i < stop else next(filler) for i in range(len(p1))]


def crossover(p1: Chromosome, p2: Chromosome, rng: random.Random,
              segment: tuple[int, int] | None = None) -> Chromosome:
    """Order crossover on the permutation; splits come from ``p1``. Uncorrected."""
    n = len(p1.perm)
    if segment is None:
        if n < 2:
            return Chromosome(p1.perm, p1.splits)
        a, b = sorted(rng.sample(range(n + 1), 2))
    else:
        a, b = segment
    return Chromosome.trusted(tuple(order_crossover(p1.perm, p2.perm, a, b)), p1.splits)


def swap_genes(chrom: Chromosome, i: int, j: int) -> Chromosome:
    perm = list(chrom.perm)
    perm[i], perm[j] = perm[j], perm[i]
    return Chromosome.trusted(tuple(perm), chrom.splits)


def shift_split(chrom: Chromosome, src: int, dst: int) -> Chromosome:
    """Move one unit of split mass from vehicle ``src`` to ``dst``."""
    if chrom.splits[src] == 0:
        raise ValueError(f"vehicle {src} has nothing to give")
    splits = list(chrom.splits)
    splits[src] -= 1
    splits[dst] += 1
    return Chromosome.trusted(chrom.perm, tuple(splits))


def mutate(chrom: Chromosome, rng: random.Random, open_vehicles: Sequence[int] | None = None) -> Chromosome:
    """Swap two genes or shift one split unit between vehicles, with equal odds. Uncorrected."""
    if open_vehicles is None:
        open_vehicles = range(len(chrom.splits))
    open_vehicles = list(open_vehicles)
    n = len(chrom.perm)
    donors = [k for k in open_vehicles if chrom.splits[k] > 0]
    can_shift = len(open_vehicles) >= 2 and donors
    if n >= 2 and (not can_shift or rng.random() < 0.5):
        i, j = rng.sample(range(n), 2)
        return swap_genes(chrom, i, j)
    if can_shift:
        src = rng.choice(donors)
        dst = rng.choice([k for k in open_vehicles if k != src])
        return shift_split(chrom, src, dst)
    return chrom


def _pick(rng: random.Random, pool: list, count: int) -> list:
    """``count`` distinct items of ``pool`` (partial Fisher-Yates, mutates ``pool``)."""
    rand = rng.random
    n = len(pool)
    for i in range(count):
        j = i + int(rand() * (n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:count]


def random_splits(n_genes: int, n_vehicles: int, rng: random.Random,
                  open_vehicles: Sequence[int] | None = None) -> tuple[int, ...]:
    """Spread ``n_genes`` over a random number of randomly chosen open vehicles, no empty blocks."""
    open_vehicles = list(range(n_vehicles)) if open_vehicles is None else list(open_vehicles)
    splits = [0] * n_vehicles
    if n_genes == 0:
        return tuple(splits)
    if not open_vehicles:
        raise ValueError("no open vehicle to receive genes")
    used = 1 + int(rng.random() * min(len(open_vehicles), n_genes))
    chosen = sorted(_pick(rng, open_vehicles, used))
    cuts = sorted(_pick(rng, list(range(1, n_genes)), used - 1)) if used > 1 else []
    edges = [0] + cuts + [n_genes]
    for k, a, b in zip(chosen, edges, edges[1:]):
        splits[k] = b - a
    return tuple(splits)


# -- correction stages (reference path, pure Python) ---------------------------

def default_weights(inst: Instance, lambda1: float = 0.5, lambda2: float = 0.5) -> Weights:
    b = compute_bounds(inst)
    return Weights(lambda1, lambda2, b.c1, b.c2)


def _stage_kernel(inst: Instance, weights: Weights | None, prefixes):
    w = weights if weights is not None else default_weights(inst)
    return make_kernel(inst, w, prefixes, backend="python")


def _routes(chrom: Chromosome, prefixes) -> list[list[int]]:
    return [list(r) for r in decode(chrom, prefixes).routes]


def precedence_correction(inst: Instance, chrom: Chromosome, prefixes=None) -> Chromosome:
    """Move every customer that precedes its supplier on the same route to just after it."""
    kern = _stage_kernel(inst, Weights(), prefixes)
    return encode(Solution(kern.fix_precedence(_routes(chrom, prefixes))), prefixes)


def pairing_correction(inst: Instance, chrom: Chromosome, weights: Weights | None = None,
                       prefixes=None) -> Chromosome:
    """Bring customers onto their supplier's vehicle at the cheapest slot after the supplier."""
    kern = _stage_kernel(inst, weights, prefixes)
    return encode(Solution(kern.fix_pairing(_routes(chrom, prefixes))), prefixes)


def capacity_correction(inst: Instance, chrom: Chromosome, prefixes=None) -> Optional[Chromosome]:
    """Relocate overflowing couples; :data:`INFEASIBLE` when no vehicle can take one."""
    kern = _stage_kernel(inst, Weights(), prefixes)
    routes = kern.fix_capacity(_routes(chrom, prefixes))
    if routes is None:
        return INFEASIBLE
    return encode(Solution(routes), prefixes)


def correct(inst: Instance, chrom: Chromosome, weights: Weights | None = None,
            prefixes=None) -> Optional[Chromosome]:
    """The full pipeline: precedence, then pairing, then capacity."""
    kern = _stage_kernel(inst, weights, prefixes)
    routes = kern.repair(_routes(chrom, prefixes))
    if routes is None:
        return INFEASIBLE
    return encode(Solution(routes), prefixes)


# -- search ----------------------------------------------------------------------

class Search:
    """Search state bound to one instance, weight set and frozen-prefix layout."""

    MEMO_LIMIT = 200_000

    def __init__(self, inst: Instance, cfg: GaConfig, prefixes=None, weights: Weights | None = None,
                 backend: str | None = None):
        self.inst = inst
        self.cfg = cfg
        K = inst.fleet.count
        self.prefixes = _prefix_list(K, prefixes)
        self.weights = weights if weights is not None else default_weights(inst, cfg.lambda1, cfg.lambda2)
        self.kernel = make_kernel(inst, self.weights, self.prefixes, backend=backend)
        self.closed = [len(p) >= 2 and p[-1] == DEPOT for p in self.prefixes]
        self.open_vehicles = [k for k in range(K) if not self.closed[k]]
        frozen = {n for p in self.prefixes for n in p if n != DEPOT}
        self.genes = [i for i in range(1, len(inst.nodes)) if i not in frozen]
        self.rng = random.Random(cfg.seed)
        self.memo: dict = {}
        self.fresh = False
        self.stats = RunStats()
        if self.genes and not self.open_vehicles:
            raise ValueError("nodes remain to be served but every vehicle is closed")

    # scoring
    def fitness(self, f1: float, f2: float) -> float:
        return self.weights.w1 * f1 + self.weights.w2 * f2

    def evaluate(self, chrom: Chromosome) -> Optional[Individual]:
        """Repaired and scored individual, or ``None``; sets ``self.fresh`` on a memo miss."""
        key = (chrom.perm, chrom.splits)
        hit = self.memo.get(key, False)
        self.fresh = hit is False
        if hit is False:
            self.stats.evaluations += 1
            out = self.kernel.process(chrom.perm, chrom.splits)
            if out is None:
                hit = None
            else:
                routes, f1, f2, perm, splits = out
                hit = Individual(Chromosome.trusted(perm, splits), routes, f1, f2, self.fitness(f1, f2))
            if len(self.memo) >= self.MEMO_LIMIT:
                self.memo.clear()
            self.memo[key] = hit
        if hit is None:
            self.stats.infeasible += 1
        return hit

    def random_chromosome(self) -> Chromosome:
        perm = list(self.genes)
        self.rng.shuffle(perm)
        splits = random_splits(len(perm), self.inst.fleet.count, self.rng, self.open_vehicles)
        return Chromosome.trusted(tuple(perm), splits)

    def random_individual(self, attempts: int = 200) -> Individual:
        for _ in range(attempts):
            ind = self.evaluate(self.random_chromosome())
            if ind is not None:
                return ind
        raise RuntimeError(f"{self.inst.name}: no feasible individual after {attempts} random draws")

    def tournament(self, population: Sequence[Individual]) -> Individual:
        a = population[self.rng.randrange(len(population))]
        b = population[self.rng.randrange(len(population))]
        return b if b.fitness < a.fitness else a

    def variants(self, chrom: Chromosome) -> list[Chromosome]:
        out = [chrom]
        for _ in range(self.cfg.mv - 1):
            out.append(Chromosome.trusted(chrom.perm, random_splits(
                len(chrom.perm), self.inst.fleet.count, self.rng, self.open_vehicles)))
        return out


def init_population(inst: Instance, cfg: GaConfig, search: Search | None = None,
                    seeds: Iterable[Chromosome] = ()) -> list[Individual]:
    """``cfg.pop_size`` corrected, feasible individuals; given ``seeds`` come first."""
    search = search or Search(inst, cfg)
    pop: list[Individual] = []
    for chrom in seeds:
        if len(pop) == cfg.pop_size:
            break
        ind = search.evaluate(chrom)
        if ind is not None:
            pop.append(ind)
    while len(pop) < cfg.pop_size:
        pop.append(search.random_individual())
    return pop


def _select(candidates: Sequence[Individual], n: int) -> list[Individual]:
    seen = set()
    ranked = []
    for order, ind in sorted(enumerate(candidates), key=lambda t: (t[1].fitness, t[0])):
        key = (ind.chrom.perm, ind.chrom.splits)
        if key in seen:
            continue
        seen.add(key)
        ranked.append(ind)
        if len(ranked) == n:
            break
    return ranked


def _submit(archive: ParetoArchive, ind: Individual) -> None:
    archive.insert(ind.objectives, Solution.trusted(ind.routes))


def evolve_generation(search: Search, population: list[Individual],
                      archive: ParetoArchive) -> tuple[list[Individual], ParetoArchive]:
    cfg = search.cfg
    rng = search.rng
    n = cfg.pop_size
    pool: list[Individual] = []
    for _ in range(2 * n):
        r = rng.random()
        if r < cfg.p_crossover:
            a, b = search.tournament(population), search.tournament(population)
            child = crossover(a.chrom, b.chrom, rng)
        elif r < cfg.p_crossover + cfg.p_mutation:
            child = mutate(search.tournament(population).chrom, rng, search.open_vehicles)
        else:
            pool.append(search.tournament(population))
            continue
        for variant in search.variants(child):
            ind = search.evaluate(variant)
            if ind is not None:
                pool.append(ind)
                # a memo hit was already offered to the archive and cannot be accepted again
                if search.fresh:
                    _submit(archive, ind)
    nxt = _select(list(population) + pool, n)
    while len(nxt) < n:
        nxt.append(search.random_individual())
    return nxt, archive


def run_search(search: Search, seeds: Iterable[Chromosome] = ()) -> tuple[ParetoArchive, RunStats, list[Individual]]:
    cfg = search.cfg
    t0 = time.perf_counter()
    archive: ParetoArchive = ParetoArchive(capacity=cfg.archive_capacity)
    population = init_population(search.inst, cfg, search, seeds)
    for ind in population:
        _submit(archive, ind)
    stats = search.stats
    stats.best_fitness.append(min(i.fitness for i in population))
    for gen in range(cfg.generations):
        population, archive = evolve_generation(search, population, archive)
        stats.generations = gen + 1
        stats.best_fitness.append(population[0].fitness)
    stats.n_sol = len(archive)
    stats.n_k = [e.solution.used_vehicles for e in archive.sorted_entries()]
    stats.seconds = time.perf_counter() - t0
    log.debug("%s: %d generations, %d evaluations, N_sol=%d in %.2fs",
              search.inst.name, stats.generations, stats.evaluations, stats.n_sol, stats.seconds)
    return archive, stats, population


def run_static(inst: Instance, cfg: GaConfig, backend: str | None = None) -> tuple[ParetoArchive, RunStats]:
    archive, stats, _ = run_search(Search(inst, cfg, backend=backend))
    return archive, stats
