"""Time the compiled RK4 kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py --sites 64 128 256 --steps 200
"""

import argparse
import json
import time

import numpy as np

from pairwalk.kernels import available_backends, rk4_advance
from pairwalk.lattice import InitialStateSpec, LatticeSpec, build_initial_state


def time_backend(backend, n, steps, repeats):
    lat = LatticeSpec(n, interaction=4.0)
    f0 = build_initial_state(lat, InitialStateSpec(width=1.0)).amplitudes
    onsite = np.zeros(n)
    fields = np.full((steps, 3), 0.5)
    best = float("inf")
    for _ in range(repeats):
        f = np.ascontiguousarray(f0.copy())
        start = time.perf_counter()
        rk4_advance(f, onsite, 1.0, 4.0, n / 2, 1e-3, fields, backend=backend)
        best = min(best, time.perf_counter() - start)
    return f, best / steps


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sites", type=int, nargs="+", default=[64, 128, 256])
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--json", action="store_true", help="one JSON object per line")
    args = parser.parse_args(argv)

    backends = available_backends()
    for n in args.sites:
        row = {"n_sites": n, "steps": args.steps}
        results = {b: time_backend(b, n, args.steps, args.repeats) for b in backends}
        for b, (_, per_step) in results.items():
            row[f"{b}_ms_per_step"] = per_step * 1e3
        if len(results) == 2:
            row["speedup"] = results["python"][1] / results["compiled"][1]
            row["max_abs_diff"] = float(np.max(np.abs(results["python"][0] - results["compiled"][0])))
        if args.json:
            print(json.dumps(row))
        else:
            print("  ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))


if __name__ == "__main__":
    main()
