"""Time the compiled and pure-Python counting kernels on identical inputs.

Run ``python3 benchmarks/bench_backends.py [--quick]``.
"""
import argparse
import sys
import timeit

import numpy as np

from urnmeasure import _backend
from urnmeasure.distributions import PowerLawPmf


def at_least_inputs(rng, n, queries):
    labels = PowerLawPmf(0.5).sample(rng, n)
    _, urn = np.unique(labels, return_inverse=True)
    starts, stops, qptr, ks = [], [], [0], []
    for _ in range(queries):
        for _ in range(int(rng.integers(1, 4))):
            a, b = sorted(int(x) for x in rng.integers(0, n + 1, size=2))
            starts.append(a)
            stops.append(b)
        qptr.append(len(starts))
        ks.append(int(rng.integers(1, 4)))
    arr = lambda v: np.asarray(v, dtype=np.int64)
    return (urn.astype(np.int64), arr(starts), arr(stops), arr(qptr), arr(ks), int(urn.max()) + 1)


def arc_inputs(rng, n, denom):
    labels = PowerLawPmf(0.5).sample(rng, n)
    _, tokens = np.unique(labels, return_inverse=True)
    return tokens.astype(np.int64), int(tokens.max()) + 1, denom


def bench(quick: bool) -> list:
    rng = np.random.default_rng(0)
    scale = 10 if quick else 1
    cases = [
        ("at_least_counts", at_least_inputs(rng, 10**5 // scale, 200 // scale)),
        ("arc_distinct_table", arc_inputs(rng, 5 * 10**4 // scale, 20)),
    ]
    results = []
    for kernel, args in cases:
        outputs = {}
        for name in _backend.available():
            fn = getattr(_backend.get(name), kernel)
            outputs[name] = fn(*args)
            repeats = 3 if name == "cython" or not quick else 1
            best = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeats))
            results.append((kernel, name, best))
        if len(outputs) == 2:
            np.testing.assert_array_equal(outputs["python"], outputs["cython"])
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true", help="small inputs, for smoke tests")
    args = parser.parse_args(argv)
    results = bench(args.quick)
    times = {(k, b): t for k, b, t in results}
    print(f"{'kernel':<20} {'backend':<8} {'seconds':>10} {'speed-up':>9}")
    for kernel, name, t in results:
        base = times.get((kernel, "python"), t)
        print(f"{kernel:<20} {name:<8} {t:>10.4f} {base / t:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
