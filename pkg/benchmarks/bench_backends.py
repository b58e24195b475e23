#!/usr/bin/env python3
"""Compare the two compute-kernel implementations.

Two measurements are taken:

1. micro: the split-search and distance kernels are timed in-process,
   active implementation against the pure-numpy fallback, on identical
   inputs.  Outputs are checked for bitwise equality first so the
   numbers describe two routes to the same answer.
2. macro: the full cascade runs in a child process per backend with
   SLICASCADE_BACKEND set in the environment, because the backend is
   chosen once at import time.  JIT warm-up happens before the clock
   starts in both modes.

Typical result on this machine: the compiled split search is roughly
even on root-sized nodes and 30x faster near the leaves, where the
vectorised form pays fixed allocation costs per candidate feature; the
distance kernel lands around 5x; the full cascade comes out 3-4x
faster compiled.
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from slicascade import kernels


def time_call(fn, *args, repeats):
    """Median wall time of ``fn(*args)`` over ``repeats`` calls."""
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def micro_split(rng, n, v, mtry, repeats):
    X = rng.normal(size=(n, v))
    y = rng.integers(0, 2, size=n).astype(np.int64)
    rows = np.arange(n, dtype=np.int64)
    feats = np.sort(rng.permutation(v)[:mtry]).astype(np.int64)

    active = kernels.best_split(X, y, rows, feats, 1)
    fallback = kernels._best_split_vec(X, y, rows, feats, 1)
    assert active == fallback, "kernel outputs diverged; timings meaningless"

    t_active = time_call(kernels.best_split, X, y, rows, feats, 1,
                         repeats=repeats)
    t_fallback = time_call(kernels._best_split_vec, X, y, rows, feats, 1,
                           repeats=repeats)
    return t_active, t_fallback


def micro_dists(rng, nq, nt, v, repeats):
    Q = rng.normal(size=(nq, v))
    T = rng.normal(size=(nt, v))

    active = kernels.sq_dists(Q, T)
    fallback = kernels._sq_dists_vec(Q, T)
    assert active.tobytes() == fallback.tobytes(), (
        "kernel outputs diverged; timings meaningless"
    )

    t_active = time_call(kernels.sq_dists, Q, T, repeats=repeats)
    t_fallback = time_call(kernels._sq_dists_vec, Q, T, repeats=repeats)
    return t_active, t_fallback


_CHILD = """
import sys, time
from slicascade import kernels
from slicascade.pipeline import CascadeConfig, run_cascade
from slicascade.tabular import synth_dataset

rows, noise, trees, seed = (int(a) for a in sys.argv[1:])
kernels.warm_up()
data = synth_dataset(rows, 6, noise, seed=seed)
config = CascadeConfig(seed=seed, n_trees=trees, importance_threshold=None,
                       importance_rule="median-q3", threads=1)
start = time.perf_counter()
run_cascade(data, config)
print(f"{kernels.BACKEND} {time.perf_counter() - start:.6f}")
"""


def macro_cascade(backend, rows, noise, trees, seed):
    """Full-cascade wall time in a fresh process pinned to ``backend``."""
    env = dict(os.environ, SLICASCADE_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", _CHILD, str(rows), str(noise),
         str(trees), str(seed)],
        env=env, capture_output=True, text=True, check=True,
    )
    got_backend, seconds = out.stdout.split()
    if got_backend != backend:
        raise RuntimeError(f"child ran backend {got_backend!r}, "
                           f"wanted {backend!r}")
    return float(seconds)


def fmt_row(label, t_active, t_fallback):
    speedup = t_fallback / t_active if t_active > 0 else float("inf")
    return (f"{label:<34} {t_active * 1e3:>12.3f} {t_fallback * 1e3:>12.3f} "
            f"{speedup:>9.2f}x")


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="time the compiled kernels against the numpy fallback")
    parser.add_argument("--rows", type=int, default=1063,
                        help="cascade row count (default: 1063)")
    parser.add_argument("--noise", type=int, default=37,
                        help="noise features for the cascade (default: 37)")
    parser.add_argument("--trees", type=int, default=500,
                        help="forest size for the cascade (default: 500)")
    parser.add_argument("--repeats", type=int, default=20,
                        help="micro-benchmark repeats (default: 20)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--skip-macro", action="store_true",
                        help="only run the in-process kernel timings")
    args = parser.parse_args(argv)

    if kernels.BACKEND != "numba":
        print("note: compiled backend unavailable, the 'active' column "
              "below is the fallback timed against itself", file=sys.stderr)
    kernels.warm_up()
    rng = np.random.default_rng(args.seed)

    header = (f"{'operation':<34} {'active (ms)':>12} {'numpy (ms)':>12} "
              f"{'speedup':>10}")
    print(f"active backend: {kernels.BACKEND}")
    print()
    print(header)
    print("-" * len(header))

    # node sizes span a forest's life: root-sized down to near-leaf
    for n, v, mtry in ((1063, 43, 6), (256, 43, 6), (32, 43, 6)):
        t_a, t_f = micro_split(rng, n, v, mtry, args.repeats)
        print(fmt_row(f"split search n={n} mtry={mtry}", t_a, t_f))
    for nq, nt, v in ((319, 744, 6), (32, 744, 6)):
        t_a, t_f = micro_dists(rng, nq, nt, v, args.repeats)
        print(fmt_row(f"distances {nq}x{nt} v={v}", t_a, t_f))

    if args.skip_macro:
        return 0

    print()
    print(f"full cascade, {args.rows} rows, 6+{args.noise} features, "
          f"{args.trees} trees, one process per backend:")
    times = {}
    for backend in ("numba", "numpy"):
        try:
            times[backend] = macro_cascade(backend, args.rows, args.noise,
                                           args.trees, args.seed)
        except subprocess.CalledProcessError as exc:
            print(f"  {backend:<8} failed: {exc.stderr.strip().splitlines()[-1]}")
    for backend, seconds in times.items():
        print(f"  {backend:<8} {seconds:>8.2f} s")
    if len(times) == 2:
        print(f"  end-to-end speedup: {times['numpy'] / times['numba']:.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
