"""Compare the numba kernels with the pure-numpy fallback.

Usage::

    python3 benchmarks/bench_backends.py [--n 100] [--T 250] [--B 20] [--repeat 3]

Both kernel families are importable side by side, so the script times them in
one process and checks that they agree.  A final end-to-end ``detect`` run is
timed in two subprocesses, one per ``PANELSEG_BACKEND`` value.
"""
import argparse
import os
import subprocess
import sys
import tempfile
import timeit
from pathlib import Path

import numpy as np

from panelseg import _accel, _kernels
from panelseg.cusum import DcMode


def best_of(fn, repeat):
    fn()  # warm-up (includes jit compilation on first call)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(n, T, B, repeat):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((n, T))
    batch = rng.standard_normal((B, n, T))
    W = np.ascontiguousarray(np.stack([DcMode.exponent(0).weights(n), DcMode.exponent(0.5).weights(n),
                                       DcMode.combined().weights(n)]))
    C = _kernels._cusum_block_np(X, 0, T - 1)
    w = T // 2
    cases = {
        "cusum_block": (lambda: _kernels._cusum_block_nb(X, 0, T - 1), lambda: _kernels._cusum_block_np(X, 0, T - 1)),
        "scan": (lambda: _kernels._scan_nb(C, W, 5, T - 6), lambda: _kernels._scan_np(C, W, 5, T - 6)),
        f"window_stats_batch (w={w}, B={B})": (
            lambda: _kernels._window_stats_batch_nb(batch, w, 5, w - 6, W),
            lambda: _kernels._window_stats_batch_np(batch, w, 5, w - 6, W)),
    }
    print(f"kernels at n={n}, T={T} (best of {repeat})")
    print(f"{'kernel':40s} {'numba s':>10s} {'numpy s':>10s} {'speed-up':>9s} {'max |diff|':>11s}")
    for name, (fnb, fnp) in cases.items():
        tn, tp = best_of(fnb, repeat), best_of(fnp, repeat)
        a, b = fnb(), fnp()
        diff = max(float(np.max(np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
                   for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)))
        print(f"{name:40s} {tn:10.4f} {tp:10.4f} {tp / tn:8.1f}x {diff:11.2e}")


def end_to_end(n, T, B):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((n, T))
    X[: n // 2, T // 2:] += 0.8
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "x.csv"
        np.savetxt(path, X, delimiter=",", fmt="%.17g")
        cmd = [sys.executable, "-c",
               "import sys, time; from panelseg.cli import main; t = time.perf_counter(); "
               f"main(['detect', '--input', r'{path}', '--boot-reps', '{B}', '--output', r'{Path(tmp) / 'r.json'}']); "
               "print(time.perf_counter() - t)"]
        print(f"end-to-end detect at n={n}, T={T}, B={B}")
        for backend in ("numba", "numpy"):
            env = dict(os.environ, PANELSEG_BACKEND=backend)
            subprocess.run(cmd, env=env, check=True, capture_output=True)  # populate the jit cache
            out = subprocess.run(cmd, env=env, check=True, capture_output=True, text=True)
            print(f"  {backend:6s} {float(out.stdout.strip().splitlines()[-1]):8.2f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--T", type=int, default=250)
    ap.add_argument("--B", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    kernel_table(args.n, args.T, args.B, args.repeat)
    if not args.skip_end_to_end:
        end_to_end(args.n, args.T, args.B)


if __name__ == "__main__":
    main()
