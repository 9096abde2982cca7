"""Command-line harness: run static or dynamic solves on Li & Lim files and write reports.

Reports list every archive entry (used vehicles, f1, f2, F, routes) plus the
min-f1 and min-f2 entries as a summary. JSON output is deterministic for a
given set of flags unless ``--timing`` adds wall-clock fields.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import random
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .bounds import compute_bounds
from .dynamic_planner import DynamicEvent, read_events, run_dynamic
from .evolution import GaConfig, default_weights, run_static
from .exact_oracle import SizeGuardError, exact_front
from .instance_model import Instance, ParseError, load_lilim, select_couples
from .schedule_eval import Solution, aggregate_fitness, objectives

log = logging.getLogger(__name__)

CSV_HEADER = ("instance", "method", "N_sol", "N_k", "f1", "f2", "F", "seed")
METHOD_TAGS = {"static": "static", "dynamic-m1": "m1", "dynamic-m2": "m2"}


def derive_events(inst: Instance, fraction: float, release: float,
                  seed: int) -> tuple[Instance, list[DynamicEvent]]:
    """Pull ``ceil(fraction * couples)`` random couples out of ``inst`` as events at ``release * horizon``."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if release < 0.0:
        raise ValueError(f"release must be >= 0, got {release}")
    n = len(inst.couples)
    n_out = math.ceil(fraction * n)
    if n_out >= n:
        raise ValueError(f"fraction {fraction} would remove all {n} couples")
    rng = random.Random(seed)
    out = sorted(rng.sample(range(n), n_out))
    keep = [i for i in range(n) if i not in set(out)]
    t_d = release * inst.horizon
    events = []
    for ci in out:
        c = inst.couples[ci]
        events.append(DynamicEvent(t_d, inst.nodes[c.pickup_id], inst.nodes[c.delivery_id]))
    return select_couples(inst, keep), events


@dataclass
class ReportRow:
    n_k: int
    f1: float
    f2: float
    F: float
    routes: dict

    def to_dict(self) -> dict:
        return {"N_k": self.n_k, "f1": self.f1, "f2": self.f2, "F": self.F, "routes": self.routes}

    @classmethod
    def from_dict(cls, d: dict) -> "ReportRow":
        return cls(d["N_k"], d["f1"], d["f2"], d["F"], d["routes"])


@dataclass
class RunReport:
    instance: str
    method: str
    seed: int
    config: dict
    bounds: dict
    rows: list[ReportRow] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    oracle_front: Optional[list[list[float]]] = None
    timing: Optional[dict] = None

    @property
    def n_sol(self) -> int:
        return len(self.rows)

    def summary(self) -> dict:
        if not self.rows:
            return {"min_f1": None, "min_f2": None}
        by_f1 = min(range(len(self.rows)), key=lambda i: (self.rows[i].f1, self.rows[i].f2))
        by_f2 = min(range(len(self.rows)), key=lambda i: (self.rows[i].f2, self.rows[i].f1))
        return {"min_f1": by_f1, "min_f2": by_f2}

    def to_dict(self) -> dict:
        out = {
            "instance": self.instance,
            "method": self.method,
            "seed": self.seed,
            "config": self.config,
            "bounds": self.bounds,
            "N_sol": self.n_sol,
            "rows": [r.to_dict() for r in self.rows],
            "summary": self.summary(),
            "events": self.events,
        }
        if self.oracle_front is not None:
            out["oracle_front"] = self.oracle_front
        if self.timing is not None:
            out["timing"] = self.timing
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(d["instance"], d["method"], d["seed"], d["config"], d["bounds"],
                   [ReportRow.from_dict(r) for r in d["rows"]], d["events"],
                   d.get("oracle_front"), d.get("timing"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([self.instance, self.method, self.n_sol, r.n_k, repr(r.f1), repr(r.f2), repr(r.F), self.seed])
        return buf.getvalue()


def serialize_report(rep: RunReport) -> tuple[str, str]:
    """(CSV text, JSON text)."""
    return rep.to_csv(), rep.to_json()


def _rows(inst: Instance, archive, cfg: GaConfig) -> list[ReportRow]:
    w = default_weights(inst, cfg.lambda1, cfg.lambda2)
    rows = []
    for e in archive.sorted_entries():
        obj = objectives(inst, e.solution)
        rows.append(ReportRow(e.solution.used_vehicles, obj.f1, obj.f2, aggregate_fitness(obj, w),
                              e.solution.to_dict()))
    return rows


def solve(inst: Instance, mode: str, cfg: GaConfig, events: Sequence[DynamicEvent] = (),
          oracle: bool = False, timing: bool = False) -> RunReport:
    """Run one instance end to end and build its report."""
    if mode not in METHOD_TAGS:
        raise ValueError(f"unknown mode {mode!r}")
    cfg_dict = {k: getattr(cfg, k) for k in GaConfig.__dataclass_fields__}
    if mode == "static":
        if events:
            raise ValueError("events only apply to the dynamic modes")
        archive, stats = run_static(inst, cfg)
        final, outcomes, all_stats = inst, [], [stats]
    else:
        run = run_dynamic(inst, list(events), cfg, 1 if mode == "dynamic-m1" else 2)
        archive, final, all_stats = run.archive, run.instance, run.stats
        outcomes = [o.to_dict() for o in run.outcomes]
    rep = RunReport(inst.name, METHOD_TAGS[mode], cfg.seed, cfg_dict, compute_bounds(final).to_dict(),
                    _rows(final, archive, cfg), outcomes)
    if oracle:
        rep.oracle_front = [[p.f1, p.f2] for p in exact_front(final).points()]
    if timing:
        rep.timing = {"seconds": sum(s.seconds for s in all_stats), "backend": all_stats[0].backend,
                      "evaluations": sum(s.evaluations for s in all_stats)}
    return rep


def instance_seed(base: int, name: str) -> int:
    """Per-instance seed for directory runs; independent of which other files are present."""
    return (base * 1_000_003 + zlib.crc32(name.encode())) % (2 ** 31)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpdptw", description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", type=Path, help="Li & Lim instance file")
    src.add_argument("--instance-dir", type=Path, help="directory of instance files (*.txt), solved one by one")
    ap.add_argument("--mode", choices=sorted(METHOD_TAGS), default="static")
    ev = ap.add_mutually_exclusive_group()
    ev.add_argument("--events", type=Path, help="event CSV for the dynamic modes")
    ev.add_argument("--derive-events", nargs=2, type=float, metavar=("FRACTION", "RELEASE"),
                    help="turn FRACTION of the couples into events released at RELEASE * horizon")
    ap.add_argument("--config", type=Path, help="key = value file of search settings; flags override it")
    ap.add_argument("--pop", type=int)
    ap.add_argument("--gens", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--lambda1", type=float)
    ap.add_argument("--lambda2", type=float)
    ap.add_argument("--mv", type=int)
    ap.add_argument("--out", type=Path, help="output directory (default: JSON to stdout)")
    ap.add_argument("--format", choices=("json", "csv", "both"), default="json")
    ap.add_argument("--oracle", action="store_true", help="add the exact front (tiny instances only)")
    ap.add_argument("--timing", action="store_true", help="add wall time and backend to the JSON")
    ap.add_argument("--jobs", type=int, default=1, help="parallel workers in directory mode")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _config(args) -> GaConfig:
    cfg = GaConfig.from_file(args.config) if args.config else GaConfig()
    over = {"pop_size": args.pop, "generations": args.gens, "seed": args.seed,
            "lambda1": args.lambda1, "lambda2": args.lambda2, "mv": args.mv}
    return replace(cfg, **{k: v for k, v in over.items() if v is not None})


def _run_one(path: Path, args, cfg: GaConfig) -> RunReport:
    inst = load_lilim(path)
    events: list[DynamicEvent] = []
    if args.mode != "static":
        if args.events:
            events = read_events(args.events)
        elif args.derive_events:
            inst, events = derive_events(inst, args.derive_events[0], args.derive_events[1], cfg.seed)
    elif args.events or args.derive_events:
        raise ValueError("--events/--derive-events need a dynamic mode")
    return solve(inst, args.mode, cfg, events, oracle=args.oracle, timing=args.timing)


def _emit(rep: RunReport, args) -> None:
    csv_text, json_text = serialize_report(rep)
    if args.out is None:
        sys.stdout.write(csv_text if args.format == "csv" else json_text)
        if args.format == "both":
            sys.stdout.write(csv_text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    stem = f"{rep.instance}_{rep.method}"
    if args.format in ("json", "both"):
        (args.out / f"{stem}.json").write_text(json_text)
    if args.format in ("csv", "both"):
        (args.out / f"{stem}.csv").write_text(csv_text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.instance is not None:
            _emit(_run_one(args.instance, args, cfg), args)
            return 0
        paths = sorted(p for p in args.instance_dir.iterdir() if p.suffix.lower() == ".txt")
        if not paths:
            raise FileNotFoundError(f"no .txt instances in {args.instance_dir}")
        cfgs = [replace(cfg, seed=instance_seed(cfg.seed, p.stem.upper())) for p in paths]
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                reports = list(pool.map(_run_one, paths, [args] * len(paths), cfgs))
        else:
            reports = [_run_one(p, args, c) for p, c in zip(paths, cfgs)]
        for rep in reports:
            _emit(rep, args)
        return 0
    except (OSError, ParseError, ValueError, SizeGuardError, RuntimeError) as exc:
        print(f"mpdptw: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
