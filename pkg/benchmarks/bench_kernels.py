"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each row reports the best wall time over ``--repeat`` runs and the largest
relative difference between the two backends' results.
"""

import argparse
import math
import timeit

import numpy as np

from twinhitch import _backend
from twinhitch.beams import SeedSpectrum, synthesize_seed
from twinhitch.core import TWO_PI, SeedSpec, make_grid

GRID = make_grid()
A1, A2, B, L = 2.8e-5 + 1.7e-5j, 2.8e-5, 1e-4, 5e4


def _cases():
    kx = np.ascontiguousarray(GRID.kx)
    support = SeedSpectrum(synthesize_seed(SeedSpec(100.0, 0.0, 3e-3), GRID))
    rng = np.random.default_rng(0)
    n_sets = 100
    rk_kx = rng.uniform(-0.05, 0.05, n_sets)
    rk_z = rng.uniform(1e3, 1e5, n_sets)
    ones, zeros = np.ones(n_sets, complex), np.zeros(n_sets, complex)
    return {
        "transfer_entries (4096 bins)": lambda k: k.transfer_entries(kx, L, A1, A2, B, TWO_PI)[0],
        f"weighted_gain ({len(support.kx)} support bins)": lambda k: k.weighted_gain(
            support.kx, support.weight, L, A1, A2, B, TWO_PI
        ),
        "bisect_gain (to rtol 1e-12)": lambda k: k.bisect_gain(
            support.kx, support.weight, L, A1, A2, TWO_PI, 1000.0, 0.0, 2e-4, 0.0, math.inf, 1e-12
        )[0],
        "rk4_propagate (100 sets x 4096 steps)": lambda k: k.rk4_propagate(
            rk_kx, rk_z, A1, A2, B, TWO_PI, ones, zeros, 4096
        )[0],
    }


def _rel_diff(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = _backend.available()
    if "compiled" not in backends:
        print("compiled kernels not built; only the numpy backend is available")
    modules = {name: _backend.load(name) for name in backends}
    header = f"{'kernel':42s}" + "".join(f"{n:>12s}" for n in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}{'rel diff':>11s}"
    print(header)
    for label, fn in _cases().items():
        times, results = [], []
        for name in backends:
            mod = modules[name]
            number = 1
            t = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
            times.append(t)
            results.append(fn(mod))
        row = f"{label:42s}" + "".join(f"{t * 1e3:10.3f}ms" for t in times)
        if len(backends) == 2:
            row += f"{times[1] / times[0]:9.1f}x{_rel_diff(results[0], results[1]):11.1e}"
        print(row)


if __name__ == "__main__":
    main()
