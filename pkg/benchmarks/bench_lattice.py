"""Benchmark the lattice event kernels: compiled extension vs pure Python.

Runs the identical event workload (same sites, same RNG state, same
acceptance tables) through every available backend, reports ns/event, and
verifies the final configurations agree bit for bit.

Usage:
    python3 benchmarks/bench_lattice.py [--sites 4096] [--events 2000000]
"""

import argparse
import time

import numpy as np

from crossdiff.lattice import (_acceptance_tables, _bond_mask,
                               available_backends, get_kernel)
from crossdiff.lattice._rng import make_state
from crossdiff.simplex import CoefficientMatrix


def build_workload(sites, seed, equal_rates):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=sites).astype(np.uint8)
    if equal_rates:
        # every pair accepted: exercises the no-draw fast path
        K = CoefficientMatrix(np.ones((3, 3)) - np.eye(3))
    else:
        # generic couplings: exercises the acceptance-sampling path
        K = CoefficientMatrix([[0.0, 1.0, 1.5], [1.0, 0.0, 0.8],
                               [1.5, 0.8, 0.0]])
    thresh, always = _acceptance_tables(K.K, float(K.K.max()))
    return labels, thresh, always


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sites", type=int, default=4096)
    parser.add_argument("--events", type=int, default=2_000_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--equal-rates", action="store_true",
                        help="all couplings equal: no acceptance draws")
    args = parser.parse_args()

    labels, thresh, always = build_workload(args.sites, args.seed,
                                            args.equal_rates)
    n_bonds = args.sites - 1
    mask = _bond_mask(n_bonds)

    results = {}
    finals = {}
    for name in available_backends():
        kernel = get_kernel(name)
        sites = labels.copy()
        state = make_state(args.seed, stream=0)
        # python backend is ~1000x slower; scale its workload down and
        # normalize per event
        events = args.events if name == "compiled" else max(
            args.events // 200, 10_000)
        t0 = time.perf_counter()
        kernel.run_events(sites, state, events, mask, n_bonds, thresh,
                          always)
        elapsed = time.perf_counter() - t0
        results[name] = (elapsed, events, elapsed / events * 1e9)
        finals[name] = (sites, events)
        print(f"{name:>9}: {events:>10,} events in {elapsed:8.3f} s "
              f"-> {elapsed / events * 1e9:8.2f} ns/event")

    if len(results) == 2:
        ratio = results["python"][2] / results["compiled"][2]
        print(f"speedup: compiled is {ratio:,.0f}x faster per event")
        # replay the shorter python workload on the compiled kernel and
        # demand bit-identical trajectories
        sites = labels.copy()
        state = make_state(args.seed, stream=0)
        get_kernel("compiled").run_events(sites, state, finals["python"][1],
                                          mask, n_bonds, thresh, always)
        if np.array_equal(sites, finals["python"][0]):
            print("backend agreement: identical configurations "
                  f"after {finals['python'][1]:,} shared events")
        else:
            raise SystemExit("backend mismatch: configurations diverged")


if __name__ == "__main__":
    main()
