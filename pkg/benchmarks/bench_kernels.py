"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from edlab import _fallback
from edlab.lattice import haar_sample_pair
from edlab.limit_law import TruncationPolicy

try:
    from edlab import _kernels
except ImportError:
    _kernels = None


def orbit_case(N):
    rng = np.random.default_rng(0)
    return (*rng.random(4), N, 0.3, 0.3)


def pair_case(seed=0):
    rng = np.random.default_rng(seed)
    frames = haar_sample_pair(rng)
    pol = TruncationPolicy()
    (c1, x1), (c2, x2) = (pol.vectors(f) for f in frames)
    return (np.ascontiguousarray(c1, np.int64), np.ascontiguousarray(x1),
            np.ascontiguousarray(c2, np.int64), np.ascontiguousarray(x2),
            rng.random((2, 2)), 12345, pol.pcheck_max, 1.0, 1.0, 0.0)


def best(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args()
    if _kernels is None:
        print("compiled extension not built; nothing to compare")
        return
    cases = [("orbit_count N=1024", "orbit_count", orbit_case(1024)),
             ("orbit_count N=4096", "orbit_count", orbit_case(4096)),
             ("lattice_pair_sum", "lattice_pair_sum", pair_case())]
    print(f"{'kernel':<22}{'compiled (ms)':>15}{'python (ms)':>15}{'speedup':>10}")
    for label, name, args in cases:
        tc = best(getattr(_kernels, name), args, a.repeat)
        tp = best(getattr(_fallback, name), args, a.repeat)
        print(f"{label:<22}{1e3 * tc:>15.3f}{1e3 * tp:>15.3f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
