"""Compare the numba and numpy flavours of the hot kernels.

Kernel timings call both flavours in-process; the end-to-end timings run the
CLI in a subprocess per backend because the flavour is bound at import.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 1.0] [--no-cli]
"""

import argparse
import json
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from pdestruct import _kernels


def inputs(scale, rng):
    n = int(4096 * scale)
    a = np.sort(rng.uniform(-1, 0, size=(n, 16)), axis=1)
    b = np.sort(rng.uniform(0.01, 1, size=(n, 16)), axis=1)
    t = np.sort(rng.uniform(0, 1, size=(int(2048 * scale), 8)), axis=1)
    side = int(300 * np.sqrt(scale))
    flags = rng.random((side, side)) < 0.02
    return {
        "quotient_spread": (a, np.sin(3 * a), b, np.sin(3 * b)),
        "pair_slope_max": (t, np.cos(5 * t)),
        "row_range": (rng.normal(size=(int(20000 * scale), 64)),),
        "neighbor_max": (rng.random((side, side)),),
        "box_witnesses": (flags, np.ones_like(flags), 4, 2),
    }


def bench_kernels(repeat, scale):
    rng = np.random.default_rng(0)
    rows = []
    for name, args in inputs(scale, rng).items():
        fast = _kernels.implementation(name, "numba")
        slow = _kernels.implementation(name, "numpy")
        fast(*args)  # compile
        same = all(np.array_equal(x, y, equal_nan=True) for x, y in zip(_as_tuple(fast(*args)), _as_tuple(slow(*args))))
        t_fast = min(timeit.repeat(lambda: fast(*args), number=1, repeat=repeat))
        t_slow = min(timeit.repeat(lambda: slow(*args), number=1, repeat=repeat))
        rows.append((name, t_fast, t_slow, same))
    return rows


def _as_tuple(x):
    return x if isinstance(x, tuple) else (x,)


CLI_CASES = [
    ["regularity", "--fn", "sextic", "--rect=-1,1,-1,1", "--nx", "81", "--threshold", "0.5"],
    ["lambda-map", "--fn", "plane_wave:abs:k=1", "--rect=-0.5,0.5,-0.5,0.5", "--nx", "81"],
    ["verify", "--fn", "plane_wave:sin:k=1"],
]


def bench_cli(repeat):
    rows = []
    for argv in CLI_CASES:
        times, metrics = {}, {}
        for backend in ("numba", "numpy"):
            env = {**os.environ, "PDESTRUCT_BACKEND": backend}
            # first run warms the numba on-disk cache
            subprocess.run([sys.executable, "-m", "pdestruct", *argv], env=env, capture_output=True, check=False)
            best = float("inf")
            for _ in range(repeat):
                t0 = time.perf_counter()
                proc = subprocess.run([sys.executable, "-m", "pdestruct", *argv], env=env, capture_output=True, check=False)
                best = min(best, time.perf_counter() - t0)
            times[backend] = best
            metrics[backend] = json.loads(proc.stdout)["metrics"]
        rows.append((argv[0], times["numba"], times["numpy"], metrics["numba"] == metrics["numpy"]))
    return rows


def show(title, rows):
    print(title)
    print(f"  {'case':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  identical")
    for name, fast, slow, same in rows:
        print(f"  {name:<18}{fast:>12.5f}{slow:>12.5f}{slow / fast:>10.2f}  {same}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=float, default=1.0, help="input size multiplier")
    ap.add_argument("--no-cli", action="store_true", help="skip the subprocess timings")
    args = ap.parse_args()
    show("kernels (best of %d)" % args.repeat, bench_kernels(args.repeat, args.size))
    if not args.no_cli:
        show("cli, whole process (best of %d)" % max(1, args.repeat // 2), bench_cli(max(1, args.repeat // 2)))


if __name__ == "__main__":
    main()
