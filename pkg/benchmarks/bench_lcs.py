"""Time the LCS kernels behind ROUGE-L.

Compares the compiled bit-parallel kernel, the pure-Python bit-parallel
fallback and the two-row dynamic program on random text pairs, and reports
peak Python-heap memory for the largest size.

    python3 benchmarks/bench_lcs.py --sizes 1000 10000 50000
"""

from __future__ import annotations

import argparse
import random
import string
import time
import tracemalloc

from bimqa import _lcs_py

try:
    from bimqa import _lcs_c
except ImportError:
    _lcs_c = None

ALPHABET = string.ascii_lowercase + string.digits + " ,.()\n"


def random_text(rng: random.Random, n: int) -> str:
    return "".join(rng.choice(ALPHABET) for _ in range(n))


def best_of(fn, a, b, repeat: int) -> tuple[float, int]:
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(a, b)
        best = min(best, time.perf_counter() - t0)
    return best, result


def peak_bytes(fn, a, b) -> int:
    tracemalloc.start()
    try:
        fn(a, b)
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sizes", type=int, nargs="+", default=[1000, 5000, 20000, 50000])
    p.add_argument("--dp-limit", type=int, default=2000, help="skip the dynamic program above this size")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = random.Random(args.seed)
    kernels = [("python bit-parallel", _lcs_py.lcs_length)]
    if _lcs_c is not None:
        kernels.insert(0, ("cython bit-parallel", _lcs_c.lcs_length))
    else:
        print("compiled kernel not built; timing the Python kernels only")

    print(f"{'chars':>8}  {'kernel':<22}{'seconds':>10}  {'lcs':>8}")
    for n in args.sizes:
        a, b = random_text(rng, n), random_text(rng, n)
        results = set()
        rows = list(kernels)
        if n <= args.dp_limit:
            rows.append(("python two-row DP", _lcs_py.lcs_length_dp))
        for name, fn in rows:
            secs, lcs = best_of(fn, a, b, args.repeat)
            results.add(lcs)
            print(f"{n:>8}  {name:<22}{secs:>10.4f}  {lcs:>8}")
        if len(results) != 1:
            raise SystemExit(f"kernels disagree at n={n}: {sorted(results)}")

    n = max(args.sizes)
    a, b = random_text(rng, n), random_text(rng, n)
    for name, fn in kernels:
        print(f"peak traced memory, {name}, {n} chars: {peak_bytes(fn, a, b) / 1024:.1f} KiB")


if __name__ == "__main__":
    main()
