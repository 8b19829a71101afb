"""Compare the numba and pure-numpy flavours of the hot kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--trials 10000]

Each kernel is run once untimed (so numba compilation is excluded), then
timed ``--repeat`` times; the best time is reported. Outputs of the two
flavours must be bit-identical, otherwise the script exits with status 1.
"""

import argparse
import sys
import timeit

import numpy as np

from jpc import kernels
from jpc._jit import HAS_NUMBA
from jpc.model import RequestProfile, sample_realizations
from jpc.trellis import _members, _same_size_preds


def relax_case(n, c, horizon, seed=0):
    members = _members(n, c)
    preds = _same_size_preds(n, c)
    weights = np.random.default_rng(seed).random((n, horizon))
    gamma0 = np.zeros(members.shape[0])
    return (gamma0, members, preds, weights, 1, horizon - 2)


def offline_case(L, N, K, trials, seed=0):
    slots = sample_realizations(RequestProfile.uniform_iid(L, K), seed, 0, trials)
    return (slots, N, K)


def best_time(fn, args, repeat):
    fn(*args)  # warm-up, includes JIT compilation for the numba flavour
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def same_output(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--trials", type=int, default=10_000)
    args = parser.parse_args(argv)

    if not HAS_NUMBA:
        print("numba is not installed; nothing to compare")
        return 0

    cases = [
        ("relax L=10 N=5 K=200", kernels._relax_numpy, kernels._relax_numba, relax_case(10, 5, 200)),
        ("relax L=14 N=7 K=200", kernels._relax_numpy, kernels._relax_numba, relax_case(14, 7, 200)),
        (
            f"offline L=10 N=5 K=200 x{args.trials}",
            kernels._offline_hits_numpy,
            kernels._offline_hits_numba,
            offline_case(10, 5, 200, args.trials),
        ),
    ]

    print(f"{'kernel':<32}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    ok = True
    for name, slow, fast, case in cases:
        if not same_output(slow(*case), fast(*case)):
            print(f"{name}: outputs differ between flavours")
            ok = False
            continue
        t_np = best_time(slow, case, args.repeat)
        t_nb = best_time(fast, case, args.repeat)
        print(f"{name:<32}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
