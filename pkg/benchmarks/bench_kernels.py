"""Time the spanned-flat enumeration under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends must return the same flats; the script checks that before
printing timings. The first numba call includes JIT compilation, so it is
timed separately as ``warmup``. Inputs whose minors could overflow int64
run on Python-int object arrays under either backend (``dtype`` column).
"""

import argparse
import time
from itertools import combinations

import numpy as np

from spanflats import _kernels
from spanflats import enumeration as E
from spanflats.constructions import ConfigSpec, generate

CASES = [
    ("grid 4x4 lines", ConfigSpec("grid", {"m": 4, "d": 2}), 1),
    ("grid 3x3x3 planes", ConfigSpec("grid", {"m": 3, "d": 3}), 2),
    ("general position n=24 d=3", ConfigSpec("general_position", {"n": 24, "d": 3}, seed=1), 2),
    ("flat union d=4 n=22", ConfigSpec("flat_union", {"d": 4, "flats": [
        {"dim": 1, "count": 6}, {"dim": 2, "count": 10}, {"dim": 1, "count": 6}]}, seed=3), 3),
]


def run(S, k, backend):
    _kernels.set_backend(backend)
    E._spanned_flats_cached.cache_clear()
    t = time.perf_counter()
    out = E.spanned_flats(S, k)
    return time.perf_counter() - t, out


def kernels_only(S, k, backend):
    """Minors, primitive keys and the incidence pass, without building Flats."""
    _kernels.set_backend(backend)
    r = k + 1
    P = _kernels.as_matrix([E.integer_lift(p) for p in S], r)
    subsets = np.array(list(combinations(range(len(S)), r)), dtype=np.int64)
    colsets = _kernels.column_sets(S.ambient_dim + 1, r)
    t = time.perf_counter()
    keys = _kernels.primitive(_kernels.subset_minors(P, subsets, colsets))
    first = {}
    for idx, row in enumerate(keys.tolist()):
        if any(row):
            first.setdefault(tuple(row), idx)
    uniq = keys[list(first.values())]
    inc = _kernels.incidence(P, uniq, r)
    return time.perf_counter() - t, (uniq.tolist(), inc.tolist(), str(P.dtype))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels.numba is None:
        raise SystemExit("numba is not installed")
    S0 = generate(CASES[0][1])
    warm, _ = run(S0, 1, "numba")
    print(f"numba warmup (includes JIT or cache load): {warm:.3f}s")
    print(f"{'case':32s} {'flats':>7s} {'numba':>9s} {'numpy':>9s} {'speedup':>8s}")
    for name, spec, k in CASES:
        S = generate(spec)
        best = {}
        outs = {}
        for backend in ("numba", "numpy"):
            times = []
            for _ in range(args.repeat):
                dt, outs[backend] = run(S, k, backend)
                times.append(dt)
            best[backend] = min(times)
        if outs["numba"] != outs["numpy"]:
            raise SystemExit(f"backends disagree on {name}")
        print(f"{name:32s} {len(outs['numba']):7d} {best['numba']:8.4f}s {best['numpy']:8.4f}s "
              f"{best['numpy'] / best['numba']:7.1f}x")
    print()
    print("kernels only (minors + keys + incidence)")
    print(f"{'case':32s} {'keys':>7s} {'dtype':>6s} {'numba':>9s} {'numpy':>9s} {'speedup':>8s}")
    kernel_cases = CASES + [
        ("general position n=40 d=3", ConfigSpec("general_position", {"n": 40, "d": 3}, seed=2), 2),
        ("general position n=18 d=4", ConfigSpec("general_position", {"n": 18, "d": 4,
                                                                      "coord_range": 12}, seed=2), 3),
    ]
    for name, spec, k in kernel_cases:
        S = generate(spec)
        best, outs = {}, {}
        for backend in ("numba", "numpy"):
            times = []
            for _ in range(args.repeat):
                dt, outs[backend] = kernels_only(S, k, backend)
                times.append(dt)
            best[backend] = min(times)
        if outs["numba"] != outs["numpy"]:
            raise SystemExit(f"kernel outputs disagree on {name}")
        print(f"{name:32s} {len(outs['numba'][0]):7d} {outs['numba'][2]:>6s} {best['numba']:8.4f}s "
              f"{best['numpy']:8.4f}s {best['numpy'] / best['numba']:7.1f}x")


if __name__ == "__main__":
    main()
