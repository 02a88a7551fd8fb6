"""Compare the numba kernels against the plain numpy/Python fallback.

Each path runs in its own interpreter because the choice is made at import
time through RADMOT_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def worker(repeat):
    from radmot import USE_NUMBA, _kernels
    from radmot.pipeline import preset, run_sequence
    from radmot.synth import PROFILES, ScenarioSpec, generate_scenario

    rng = np.random.default_rng(0)

    def rows(n):
        return np.column_stack([
            rng.uniform(-10, 10, n), rng.uniform(-10, 10, n),
            rng.uniform(0.5, 5, n), rng.uniform(0.3, 2.5, n), rng.uniform(-np.pi, np.pi, n),
        ])

    A, B = rows(60), rows(60)
    costs = [rng.uniform(0, 1, (40, 40)) for _ in range(20)]
    scn = generate_scenario(ScenarioSpec(n_objects=15, n_frames=60, seed=1, noise=PROFILES["radar"]))
    cfg = preset("ab3dmot")

    def solve_all():
        for c in costs:
            _kernels.solve_rows_le_cols(c)

    return {
        "numba": USE_NUMBA,
        "pairwise_bev 60x60": _best(lambda: _kernels.pairwise_bev(A, B), repeat),
        "hungarian 20 x (40x40)": _best(solve_all, repeat),
        "ab3dmot radar 15 obj x 60 frames": _best(lambda: run_sequence(scn.bundle.frames, cfg), repeat),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args()
    if args.worker:
        print(json.dumps(worker(args.repeat)))
        return

    results = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, RADMOT_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        results[label] = json.loads(out.stdout.strip().splitlines()[-1])
    if not results["numba"].pop("numba"):
        print("warning: numba unavailable, both runs used the fallback path")
    results["numpy"].pop("numba")
    print(f"{'kernel':36s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speed-up':>9s}")
    for k in results["numba"]:
        a, b = results["numba"][k] * 1e3, results["numpy"][k] * 1e3
        print(f"{k:36s} {a:12.2f} {b:12.2f} {b / a:8.1f}x")


if __name__ == "__main__":
    main()
