"""Acceptance criteria, each reported as one PASS/FAIL/SKIP line in the session summary.

Criteria that name the LRC101-LRC108 benchmark files run on them when they are
available (``MPDPTW_LRC1_DIR`` or ``data/lrc1/``) and skip otherwise. Each of
those also has a stand-in line that runs the same check on generated instances
of the same size and shape, so the machinery is exercised either way.
"""

import math
import random
import subprocess
import sys
import time

import pytest

from conftest import lrc1_dir, lrc1_files, record, LRC1_NAMES
from mpdptw.bench_cli import derive_events
from mpdptw.bounds import compute_bounds
from mpdptw.dynamic_planner import DynamicEvent, InsertionError, freeze_prefix, insert_method1, run_dynamic
from mpdptw.evolution import GaConfig, Search, default_weights, run_static
from mpdptw.exact_oracle import enumerate_solutions, exact_front
from mpdptw.instance_model import (Instance, generate_lrc_like, generate_synthetic, load_lilim, parse_lilim,
                                   select_couples, serialize_lilim, with_couple)
from mpdptw.pareto import ParetoArchive, dominates, extract_front
from mpdptw.schedule_eval import Solution, aggregate_fitness, hard_violations, objectives, propagate_schedule

FULL = dict(pop_size=50, generations=200)
STANDIN_SEEDS = range(101, 109)


def verdict(key: str, ok: bool, detail: str) -> None:
    record(key, "PASS" if ok else "FAIL", detail)
    assert ok, detail


def skip(key: str, reason: str) -> None:
    record(key, "SKIP", reason)
    pytest.skip(reason)


def real_lrc1(names=LRC1_NAMES) -> dict:
    folder = lrc1_dir()
    if folder is None:
        return {}
    files = lrc1_files(folder)
    return {n: files[n] for n in names if n in files}


def standins() -> dict[str, Instance]:
    return {f"LRCLIKE-{s}": generate_lrc_like(s) for s in STANDIN_SEEDS}


def same_point(a, b, tol=1e-9) -> bool:
    return abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol


# 1 -------------------------------------------------------------------------------

def test_1_static_search_recovers_exact_front():
    matched, ga_seconds, misses = 0, 0.0, []
    for seed in range(20):
        inst = generate_synthetic(3, 0.5, seed, n_vehicles=2)
        exact = exact_front(inst).points()
        t0 = time.perf_counter()
        arch, _ = run_static(inst, GaConfig(pop_size=16, generations=100, seed=seed))
        ga_seconds += time.perf_counter() - t0
        got = sorted(arch.points())
        if len(got) == len(exact) and all(same_point(a, b) for a, b in zip(got, exact)):
            matched += 1
        else:
            misses.append(seed)
    ok = matched >= 18 and ga_seconds < 5.0
    verdict("1", ok, f"{matched}/20 fronts matched (need >= 18), search time {ga_seconds:.2f} s (need < 5 s)"
            + (f", missed seeds {misses}" if misses else ""))


# 2 -------------------------------------------------------------------------------

def brute_force_min(inst, frozen, ev, w):
    ext = with_couple(inst, ev.pickup, ev.delivery)
    p, d = len(inst.nodes), len(inst.nodes) + 1
    best = math.inf
    for k, route in enumerate(frozen.base.routes):
        if frozen.closed(k):
            continue
        for i in range(frozen.frozen_len[k], len(route)):
            for j in range(i, len(route)):
                new = route[:i] + (p,) + route[i:j] + (d,) + route[j:]
                sol = Solution(frozen.base.routes[:k] + (new,) + frozen.base.routes[k + 1:])
                loads = propagate_schedule(ext, k, new).load
                if max(loads) > ext.fleet.capacity[k] or min(loads) < 0:
                    continue
                best = min(best, aggregate_fitness(objectives(ext, sol), w))
    return best


def test_2_method1_is_neighbourhood_optimal():
    rng = random.Random(2)
    agree, failures = 0, 0
    for case in range(50):
        n = rng.randint(2, 7)
        k = rng.randint(1, 3)
        inst = generate_synthetic(n, rng.random(), 1000 + case, n_vehicles=k, capacity=12)
        sol = Solution(Search(inst, GaConfig(seed=case)).random_individual().routes)
        donor = generate_synthetic(1, rng.random(), 5000 + case, capacity=12)
        c = donor.couples[0]
        ev = DynamicEvent(rng.uniform(0, inst.horizon * 0.6), donor.nodes[c.pickup_id], donor.nodes[c.delivery_id])
        frozen = freeze_prefix(inst, sol, ev.t_d)
        w = default_weights(with_couple(inst, ev.pickup, ev.delivery))
        expected = brute_force_min(inst, frozen, ev, w)
        try:
            got = aggregate_fitness(objectives(with_couple(inst, ev.pickup, ev.delivery),
                                               insert_method1(inst, frozen, ev, w)), w)
        except InsertionError:
            got = math.inf
            failures += 1
        agree += got == expected
    verdict("2", agree == 50, f"{agree}/50 insertions equal the brute-force minimum exactly "
            f"({failures} reported as unplaceable, matching brute force)")


# 3 -------------------------------------------------------------------------------

def bound_violations(inst, sols):
    rep = compute_bounds(inst)
    count, bad = 0, 0
    for sol in sols:
        f1, f2 = objectives(inst, sol)
        count += 1
        bad += (rep.f1_bound > f1) + (rep.f2_raw > f2)
    return count, bad


def test_3_bounds_sound_on_enumeration():
    total, bad = 0, 0
    for seed in range(20):
        inst = generate_synthetic(1 + seed % 4, (seed % 5) / 4, seed, n_vehicles=1 + seed % 3)
        c, b = bound_violations(inst, enumerate_solutions(inst))
        total += c
        bad += b
    verdict("3", bad == 0, f"{total} enumerated solutions on 20 tiny instances, {bad} bound violations")


@pytest.fixture(scope="module")
def standin_static():
    """Full-size static runs on the stand-ins, shared by several criteria."""
    out = {}
    for name, inst in standins().items():
        arch, stats = run_static(inst, GaConfig(seed=1, **FULL))
        out[name] = (inst, arch, stats)
    return out


def test_3_bounds_sound_on_lrc101():
    files = real_lrc1(["lrc101"])
    if not files:
        skip("3-lrc101", "LRC101 file not available (set MPDPTW_LRC1_DIR)")
    inst = load_lilim(files["lrc101"])
    arch, _ = run_static(inst, GaConfig(seed=1, **FULL))
    c, b = bound_violations(inst, [e.solution for e in arch])
    verdict("3-lrc101", b == 0, f"{c} archive entries on LRC101, {b} bound violations")


def test_3_bounds_sound_on_standin(standin_static):
    total, bad = 0, 0
    for inst, arch, _ in standin_static.values():
        c, b = bound_violations(inst, [e.solution for e in arch])
        total += c
        bad += b
    verdict("3-standin", bad == 0, f"{total} archive entries on 8 LRC1-size stand-ins, {bad} bound violations")


# 4 -------------------------------------------------------------------------------

def reserialized_violations(inst, sols):
    bad = 0
    for sol in sols:
        again = Solution.from_json(sol.to_json())
        bad += len(hard_violations(inst, again))
    return bad


def feasibility_suite(instances: dict, static=None) -> tuple[int, int]:
    checked, bad = 0, 0
    cfg = GaConfig(seed=1, **FULL)
    for name, inst in instances.items():
        arch = static[name][1] if static else run_static(inst, cfg)[0]
        sols = [e.solution for e in arch]
        checked += len(sols)
        bad += reserialized_violations(inst, sols)
        reduced, events = derive_events(inst, 0.1, 0.25, seed=1)
        first = run_static(reduced, cfg)
        for method in (1, 2):
            run = run_dynamic(reduced, events, cfg, method, initial=first)
            sols = [e.solution for e in run.archive]
            checked += len(sols)
            bad += reserialized_violations(run.instance, sols)
    return checked, bad


def test_4_feasibility_on_lrc1():
    files = real_lrc1()
    if len(files) < 8:
        skip("4-lrc1", f"LRC1 files not available ({len(files)}/8 found; set MPDPTW_LRC1_DIR)")
    checked, bad = feasibility_suite({n: load_lilim(p) for n, p in files.items()})
    verdict("4-lrc1", bad == 0, f"{checked} archive entries from static/m1/m2 runs on LRC101-108, "
            f"{bad} hard violations")


def test_4_feasibility_on_standins(standin_static):
    checked, bad = feasibility_suite(standins(), standin_static)
    verdict("4-standin", bad == 0, f"{checked} archive entries from static/m1/m2 runs on 8 stand-ins, "
            f"{bad} hard violations")


# 5 -------------------------------------------------------------------------------

def served_visits(inst, sol, t_d):
    """Per vehicle, the visits the incumbent had already left at ``t_d`` (depot start excluded)."""
    out = []
    for k, route in enumerate(sol.routes):
        dep = propagate_schedule(inst, k, route).departure
        done = [n for n, d in zip(route[1:], dep[1:]) if d <= t_d]
        finished = len(route) > 2 and dep[-1] <= t_d
        out.append((tuple(n for n in done if n != 0), finished))
    return out


def test_5_frozen_prefixes_never_move():
    inst = generate_lrc_like(5)
    reduced, derived = derive_events(inst, 0.1, 0.0, seed=5)
    times = [0.15, 0.25, 0.35, 0.45, 0.55, 0.65]
    events = [DynamicEvent(t * inst.horizon, e.pickup, e.delivery) for t, e in zip(times, derived)]
    checked, deviations = 0, 0
    for method in (1, 2):
        run = run_dynamic(reduced, events, GaConfig(pop_size=30, generations=60, seed=3), method)
        assert sum(o.served for o in run.outcomes) >= 2
        final = [e.solution for e in run.archive]
        for idx, fz in enumerate(run.commitments):
            served = served_visits(run.instance, fz.base, fz.t_d)
            later = [s for batch in run.emitted[idx:] for s in batch] + final
            for sol in later:
                for k, (visits, finished) in enumerate(served):
                    route = sol.routes[k]
                    checked += 1
                    if route[1:1 + len(visits)] != visits or (finished and route != fz.base.routes[k]):
                        deviations += 1
    verdict("5", deviations == 0, f"{checked} committed route prefixes re-checked visit by visit over m1 and m2 "
            f"runs with {len(events)} events, {deviations} deviations")


# 6 -------------------------------------------------------------------------------

def zero_tardiness_rate(base: Instance, generations: int) -> int:
    hits = 0
    for seed in range(10):
        reduced, events = derive_events(base, 0.1, 0.25, seed)
        run = run_dynamic(reduced, events, GaConfig(pop_size=50, generations=generations, seed=seed), 2)
        hits += any(e.objectives.f2 == 0 for e in run.archive)
    return hits


def test_6_zero_tardiness_on_lrc101_subset():
    files = real_lrc1(["lrc101"])
    if not files:
        skip("6-lrc101", "LRC101 file not available (set MPDPTW_LRC1_DIR)")
    hits = zero_tardiness_rate(select_couples(load_lilim(files["lrc101"]), range(10)), 50)
    verdict("6-lrc101", hits >= 8, f"{hits}/10 seeds reach an archive entry with f2 = 0 (need >= 8)")


def test_6_zero_tardiness_on_standin():
    hits = zero_tardiness_rate(select_couples(generate_lrc_like(101), range(10)), 50)
    verdict("6-standin", hits >= 8, f"{hits}/10 seeds reach an archive entry with f2 = 0 (need >= 8)")


# 7 -------------------------------------------------------------------------------

def test_7_archive_equals_front():
    rng = random.Random(7)
    good = 0
    for _ in range(1000):
        n = rng.randint(0, 60)
        grid = rng.choice([5, 20, 1000])
        pts = [(rng.randint(0, grid), rng.randint(0, grid)) for _ in range(n)]
        arch = ParetoArchive(capacity=None)
        for p in pts:
            arch.insert(p, None)
        entries = sorted(arch.points())
        brute = sorted({p for p in pts if not any(dominates(q, p) for q in pts)})
        good += entries == brute == extract_front(pts)
    verdict("7", good == 1000, f"{good}/1000 insertion sequences equal the extracted front")


# 8 -------------------------------------------------------------------------------

def cli_twice(path, tmp_path) -> tuple[list[float], bool]:
    seconds, blobs = [], []
    for tag in ("a", "b"):
        out = tmp_path / tag
        t0 = time.perf_counter()
        subprocess.run([sys.executable, "-m", "mpdptw", "--instance", str(path), "--seed", "1", "--pop", "50",
                        "--gens", "200", "--out", str(out)], check=True)
        seconds.append(time.perf_counter() - t0)
        blobs.append(next(out.glob("*.json")).read_bytes())
    return seconds, blobs[0] == blobs[1]


def test_8_lrc101_scale_and_determinism(tmp_path):
    files = real_lrc1(["lrc101"])
    if not files:
        skip("8-lrc101", "LRC101 file not available (set MPDPTW_LRC1_DIR)")
    seconds, same = cli_twice(files["lrc101"], tmp_path)
    verdict("8-lrc101", same and max(seconds) < 60, f"runs took {seconds[0]:.1f} s and {seconds[1]:.1f} s "
            f"(need < 60 s); JSON {'byte-identical' if same else 'differs'}")


def test_8_standin_scale_and_determinism(tmp_path):
    path = tmp_path / "lrclike101.txt"
    path.write_text(serialize_lilim(generate_lrc_like(101)))
    seconds, same = cli_twice(path, tmp_path)
    verdict("8-standin", same and max(seconds) < 60, f"runs took {seconds[0]:.1f} s and {seconds[1]:.1f} s "
            f"(need < 60 s); JSON {'byte-identical' if same else 'differs'}")


# 9 -------------------------------------------------------------------------------

def parser_fidelity(texts: dict[str, str]) -> list[str]:
    problems = []
    for name, text in texts.items():
        inst = parse_lilim(text, name=name)
        head = text.split()[:3]
        if (inst.fleet.count, inst.fleet.capacity[0], inst.fleet.speed[0]) != tuple(float(x) for x in head):
            problems.append(f"{name}: fleet header mismatch")
        paired = sorted(i for c in inst.couples for i in (c.pickup_id, c.delivery_id))
        if paired != list(range(1, len(inst.nodes))):
            problems.append(f"{name}: not every node is in exactly one couple")
        if parse_lilim(serialize_lilim(inst), name=name) != inst:
            problems.append(f"{name}: round trip changed a field")
    return problems


def test_9_parser_fidelity_lrc1():
    files = real_lrc1()
    if len(files) < 8:
        skip("9-lrc1", f"LRC1 files not available ({len(files)}/8 found; set MPDPTW_LRC1_DIR)")
    problems = parser_fidelity({n: p.read_text() for n, p in files.items()})
    verdict("9-lrc1", not problems, "; ".join(problems) or "8/8 files: all nodes paired, header matches, "
            "round trip exact")


def test_9_parser_fidelity_standins():
    problems = parser_fidelity({n: serialize_lilim(i) for n, i in standins().items()})
    verdict("9-standin", not problems, "; ".join(problems) or "8/8 stand-in files: all nodes paired, header "
            "matches, round trip exact")
