"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 20000]

Prints the best time per backend for template matching and edit distance.
"""

import argparse
import random
import string
import timeit

from eql import _pykernels
from eql.template import compile_template

try:
    from eql import _ckernels
except ImportError:
    _ckernels = None


def workload(n: int, seed: int = 7):
    rng = random.Random(seed)
    alphabet = string.ascii_lowercase[:6] + " %"
    templates, pairs = [], []
    for _ in range(n):
        t = "".join(rng.choice(alphabet + "_%") for _ in range(rng.randint(1, 12)))
        c = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        kinds, lits = compile_template(t)
        templates.append((kinds, lits, c))
        a = "".join(rng.choice(string.ascii_letters + " .") for _ in range(rng.randint(3, 30)))
        b = "".join(rng.choice(string.ascii_letters + " .") for _ in range(rng.randint(3, 30)))
        pairs.append((a, b))
    return templates, pairs


def run(module, templates, pairs, repeat: int) -> tuple[float, float]:
    match = module.match_atoms
    dist = module.edit_distance
    t_match = min(timeit.repeat(lambda: [match(k, lt, c) for k, lt, c in templates],
                                number=1, repeat=repeat))
    t_dist = min(timeit.repeat(lambda: [dist(a, b) for a, b in pairs], number=1, repeat=repeat))
    return t_match, t_dist


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    templates, pairs = workload(args.n)

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled kernels not built; showing the Python fallback only")

    results = {}
    print(f"{'backend':8} {'match_atoms':>12} {'edit_distance':>14}   ({args.n} calls each)")
    for name, module in backends:
        results[name] = run(module, templates, pairs, args.repeat)
        tm, td = results[name]
        print(f"{name:8} {tm * 1e3:10.1f}ms {td * 1e3:12.1f}ms")
    if len(results) == 2:
        (pm, pd), (cm, cd) = results["python"], results["cython"]
        print(f"speedup  {pm / cm:11.1f}x {pd / cd:13.1f}x")


if __name__ == "__main__":
    main()
