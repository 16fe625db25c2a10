"""Compiled kernel vs numpy fallback on the two hot loops.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from xyotto import _fallback
from xyotto.model import ModelParams, build_hamiltonian, gibbs_state

try:
    from xyotto import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=4096)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    mats = []
    for _ in range(2000):
        A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        mats.append(0.5 * (A + A.conj().T))
    rho = gibbs_state(build_hamiltonian(ModelParams(0.6, 0.0)), 1.0)
    stroke = (rho, 0.6, 0.0, 0.8, 0.5, args.steps, True, False, True, 0)

    backends = {"numpy": _fallback}
    if _kernels is not None:
        backends["cython"] = _kernels
    rows = []
    for name, mod in backends.items():
        eig = best_of(lambda: [mod.jacobi_eigh(M) for M in mats], args.repeat) / len(mats)
        prop = best_of(lambda: mod.propagate_schedule(*stroke), args.repeat)
        rows.append((name, eig * 1e6, prop * 1e3))

    print(f"{'backend':<8} {'eigh [us]':>10} {'stroke [ms]':>12}")
    for name, e, p in rows:
        print(f"{name:<8} {e:>10.2f} {p:>12.2f}")
    if len(rows) == 2:
        print(f"speed-up: eigh x{rows[0][1] / rows[1][1]:.0f}, stroke x{rows[0][2] / rows[1][2]:.0f}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
