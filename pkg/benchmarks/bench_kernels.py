"""Time the exhaustive subset search: compiled kernel vs numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--targets 1995]
"""
import argparse
import time

import numpy as np

from matchillum import _kernels_py, datasets, synth

try:
    from matchillum import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--targets", type=int, default=1995)
    args = ap.parse_args(argv)

    _, C = synth.macbeth_candidates(*datasets.macbeth())
    _, S = datasets.sfu1995_standin()
    S = S[:, : args.targets]
    combos = synth._subsets(C.shape[1], synth.SUBSET_SIZE)
    Linv, valid = synth._factor(C, combos)
    B = np.ascontiguousarray(C.T @ S)
    tt = np.einsum("ln,ln->n", S, S)
    call = (B, tt, combos, Linv, valid, synth.TIE_TOL)

    print(f"{S.shape[1]} targets x {len(combos)} subsets, best of {args.repeat}")
    t_py, (i_py, _) = best_of(lambda: _kernels_py.subset_residuals_best(*call), args.repeat)
    print(f"  numpy fallback : {t_py * 1e3:8.1f} ms")
    if _kernels is None:
        print("  compiled kernel: not built")
        return
    t_cy, (i_cy, _) = best_of(lambda: _kernels.subset_residuals_best(*call), args.repeat)
    print(f"  compiled kernel: {t_cy * 1e3:8.1f} ms  ({t_py / t_cy:.1f}x)")
    print(f"  same subsets chosen: {bool(np.array_equal(i_py, i_cy))}")


if __name__ == "__main__":
    main()
