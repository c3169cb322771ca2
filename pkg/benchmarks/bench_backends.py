"""Benchmark the compiled replication kernels against the pure-Python loop.

Runs one seeded replication per policy on both backends, checks the outputs
are bit-identical, and prints a timing table.

    python benchmarks/bench_backends.py [--horizon N] [--repeats K]
"""

import argparse
import time

from daaf import BanditInstance, DelayModel, PolicySpec, default_checkpoints, run_replication_full
from daaf import backend


def time_one(spec, instance, checkpoints, use_backend, repeats):
    best = float("inf")
    result = None
    for i in range(repeats):
        start = time.perf_counter()
        result = run_replication_full(spec, instance, seed=7, checkpoints=checkpoints, use_backend=use_backend)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=100_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if backend.kernels is None:
        raise SystemExit("compiled kernels unavailable; build the extension first")

    instance = BanditInstance((0.5, 0.6), DelayModel.uniform_int(100), args.horizon)
    checkpoints = default_checkpoints(instance.horizon)
    specs = [
        PolicySpec("odaaf", "odaaf", variant="known-expectation"),
        PolicySpec("odaaf", "odaaf-b", variant="bounded"),
        PolicySpec("ucb1", "ucb1"),
        PolicySpec("qpmd", "qpmd"),
    ]

    print(f"horizon {args.horizon}, uniform-int(100) delays, best of {args.repeats}")
    print(f"{'policy':10s} {'compiled':>12s} {'python':>12s} {'speedup':>9s} {'rounds':>8s}")
    for spec in specs:
        t_c, r_c = time_one(spec, instance, checkpoints, "compiled", args.repeats)
        t_p, r_p = time_one(spec, instance, checkpoints, "python", args.repeats)
        assert r_c.trajectory.checkpoints == r_p.trajectory.checkpoints, "backend mismatch"
        assert r_c.trajectory.final_regret == r_p.trajectory.final_regret, "backend mismatch"
        print(
            f"{spec.label:10s} {t_c * 1e3:10.1f} ms {t_p * 1e3:10.1f} ms "
            f"{t_p / t_c:8.1f}x {r_c.sim_rounds:8d}"
        )


if __name__ == "__main__":
    main()
