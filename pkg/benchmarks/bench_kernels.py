"""Compare the compiled and pure-Python kernels.

Two measurements per backend: raw decode/repair/evaluate throughput on random
chromosomes, and a short end-to-end search. Both backends must agree exactly.

    python benchmarks/bench_kernels.py [--seed N] [--chromosomes N] [--gens N]
"""

import argparse
import random
import time

from mpdptw.evolution import GaConfig, Search, default_weights, random_splits, run_search
from mpdptw.instance_model import generate_lrc_like
from mpdptw.kernels import backends, make_kernel


def throughput(inst, backend, chroms):
    kern = make_kernel(inst, default_weights(inst), backend=backend)
    t0 = time.perf_counter()
    out = [kern.process(p, s) for p, s in chroms]
    return time.perf_counter() - t0, out


def search(inst, backend, gens, seed):
    cfg = GaConfig(pop_size=50, generations=gens, seed=seed)
    t0 = time.perf_counter()
    archive, stats, _ = run_search(Search(inst, cfg, backend=backend))
    return time.perf_counter() - t0, sorted(archive.points()), stats.evaluations


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--chromosomes", type=int, default=2000)
    ap.add_argument("--gens", type=int, default=20)
    args = ap.parse_args()

    inst = generate_lrc_like(args.seed)
    rng = random.Random(args.seed)
    genes = list(range(1, len(inst.nodes)))
    chroms = []
    for _ in range(args.chromosomes):
        rng.shuffle(genes)
        chroms.append((tuple(genes), random_splits(len(genes), inst.fleet.count, rng)))

    names = sorted(backends())
    print(f"instance {inst.name}: {len(inst.nodes)} nodes, {inst.fleet.count} vehicles; backends {names}")
    kernel_out, search_out = {}, {}
    for b in names:
        secs, kernel_out[b] = throughput(inst, b, chroms)
        print(f"{b:>7} kernel: {args.chromosomes / secs:10.0f} chromosomes/s ({secs:.3f} s)")
    for b in names:
        secs, front, evals = search(inst, b, args.gens, args.seed)
        search_out[b] = front
        print(f"{b:>7} search: {args.gens} generations, {evals} evaluations in {secs:.2f} s")
    if len(names) > 1:
        same = kernel_out["cython"] == kernel_out["python"] and search_out["cython"] == search_out["python"]
        print("backends agree bit for bit" if same else "BACKENDS DISAGREE")
        return 0 if same else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
