"""Compare the compiled and pure-Python search kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3]

Runs exhaustive enumeration and branch-and-bound on the built-in benchmarks
with both backends, checks that they agree and prints wall-clock times.
"""
import argparse
import time

from vransplit import benchmark
from vransplit.exact import solve_bruteforce, solve_exact
from vransplit.kernels import compiled_backend

CASES = (
    ("bruteforce", "toy6", solve_bruteforce),
    ("bruteforce", "toy8", solve_bruteforce),
    ("bnb", "standard", solve_exact),
    ("bnb", "timing30", solve_exact),
)


def best_time(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-slow", action="store_true", help="skip the pure-Python run on timing30")
    args = ap.parse_args(argv)
    if compiled_backend is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")

    print(f"{'kernel':<11}{'scenario':<10}{'cython s':>11}{'python s':>11}{'speedup':>9}  agree")
    for kernel, name, solve in CASES:
        sc = benchmark.named(name)
        tc, rc = best_time(lambda: solve(sc, backend="cython"), args.repeat)
        if args.skip_slow and name == "timing30":
            print(f"{kernel:<11}{name:<10}{tc:>11.4f}{'-':>11}{'-':>9}  -")
            continue
        tp, rp = best_time(lambda: solve(sc, backend="python"), 1)
        agree = rc.assignment == rp.assignment
        print(f"{kernel:<11}{name:<10}{tc:>11.4f}{tp:>11.4f}{tp / tc:>9.1f}  {agree}")


if __name__ == "__main__":
    main()
