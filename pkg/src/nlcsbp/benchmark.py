"""Benchmark the compiled core against the numpy fallback.

Run as ``python -m nlcsbp.benchmark``.  Both backends execute the same
counter-based streams, so the workloads are identical draw for draw.
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels
from ._kernels import fallback


def _workloads():
    blocks = np.arange(250_000, dtype=np.uint64)
    yield ("philox 1e6 words", lambda k: k.philox4x64(7, np.uint64(1), blocks))
    u = fallback.bits_to_uniform(fallback.philox4x64(3, np.uint64(0), blocks)[:, 0])
    w = -np.log(fallback.bits_to_uniform(
        fallback.philox4x64(3, np.uint64(1), blocks)[:, 0]))
    yield ("stable transform 250k", lambda k: k.stable_increment_std(0.5, u, w))
    yield ("passage 5k paths", lambda k: k.stable_passage_batch(
        11, 0, 5000, 0.5, 1.0, 0.0, 0.0, 1000.0, 0.005, 5e-5, 10 ** 6))
    yield ("explosion 5k paths", lambda k: k.stable_eta_batch(
        13, 0, 5000, 0.5, 1.0, 1.0, 1.5, 1.0, 0.05, 1.1283791670955126, 4.0,
        1e-3, np.inf, np.empty(0), True, 10 ** 6))
    lt_logu = np.empty(0)
    yield ("jump passage 5k paths", lambda k: k.cpp_passage_batch(
        17, 0, 5000, 1.0, k.JUMP_LOGTAIL, np.array([2.0]), lt_logu, lt_logu,
        0.0, 1e6, 10 ** 6))


def _time(fn, reps=3):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    backends = [("python", fallback)]
    if _kernels.HAVE_COMPILED:
        backends.append(("cython", _kernels.get_backend_module("cython")))
    else:
        print("compiled core not built; timing the fallback only")
    print(f"{'workload':28s}" + "".join(f"{name:>12s}" for name, _ in backends)
          + ("{:>10s}".format("speedup") if len(backends) == 2 else ""))
    for label, work in _workloads():
        times = [_time(lambda m=mod: work(m)) for _, mod in backends]
        row = f"{label:28s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
