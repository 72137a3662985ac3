"""Compare the compiled geometry kernels against the numpy fallback.

Runs each kernel on identical inputs through both backends, checks they agree,
and prints a timing table. Invoke directly:

    python benchmarks/bench_kernels.py [--sizes 200,1000,4000] [--repeats 5]

The compiled extension must be built for the comparison to be meaningful;
otherwise both columns measure the fallback and the script says so.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pairtrack._kernels import _numpy as np_impl

try:
    from pairtrack._kernels import _core as c_impl

    HAVE_EXT = True
except ImportError:
    c_impl = np_impl
    HAVE_EXT = False


def random_pairs(n: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((n, 8))
    for half in (0, 4):
        out[:, half + 0] = rng.uniform(0, 1440, n)
        out[:, half + 1] = rng.uniform(0, 800, n)
        out[:, half + 2] = rng.uniform(5, 300, n)
        out[:, half + 3] = rng.uniform(5, 300, n)
    return out


def timeit(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="200,1000,4000")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if not HAVE_EXT:
        print("compiled extension not available; both columns use the fallback")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>6}{'numpy':>12}{'compiled':>12}{'speedup':>10}")
    for n in sizes:
        a = random_pairs(n, rng)
        b = random_pairs(n, rng)
        a4, b4 = a[:, :4].copy(), b[:, :4].copy()
        scores = rng.random(n)

        cases = [
            ("pairwise_iou", np_impl.pairwise_iou, c_impl.pairwise_iou, (a4, b4)),
            ("pairwise_iou3d", np_impl.pairwise_iou3d, c_impl.pairwise_iou3d, (a, b)),
            ("pairwise_giou3d", np_impl.pairwise_giou3d, c_impl.pairwise_giou3d, (a, b)),
            ("nms_keep", np_impl.nms_keep, c_impl.nms_keep, (a, scores, 0.5)),
        ]
        for name, f_np, f_c, xs in cases:
            r_np, r_c = f_np(*xs), f_c(*xs)
            if name == "nms_keep":
                assert list(r_np) == list(r_c), f"{name} disagrees at n={n}"
            else:
                assert np.allclose(r_np, r_c, atol=1e-12), f"{name} disagrees at n={n}"
            t_np = timeit(f_np, *xs, repeats=args.repeats)
            t_c = timeit(f_c, *xs, repeats=args.repeats)
            ratio = t_np / t_c if t_c > 0 else float("inf")
            print(f"{name:<18}{n:>6}{t_np:>11.4f}s{t_c:>11.4f}s{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
