"""Compare the numba and numpy kernel backends.

Part 1 times the raw kernels side by side in one process and checks that
they agree bit for bit. Part 2 runs a short adaptive kNN-UCB trial in a
fresh interpreter per backend (the backend is fixed at import time via
KNNUCB_BACKEND).

    python3 benchmarks/bench_kernels.py [--T 2000] [--repeats 200]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from knnucb import _kernels

TRIAL = """
import time
from knnucb import _kernels
from knnucb.environments import Environment, StudentT, TrigPair
from knnucb.policies import AdaptiveKnnUcb, PolicyConfig
from knnucb.simulate import run_trial, trial_seed
env = Environment(StudentT(1), TrigPair(1, 0.5))
cfg = PolicyConfig({T}, 2, 1, 0.5, env.lipschitz)
run_trial(env, AdaptiveKnnUcb(cfg), 50, trial_seed(0, 0))  # warm up / compile
t0 = time.perf_counter()
tr = run_trial(env, AdaptiveKnnUcb(cfg), {T}, trial_seed(0, 1))
print(_kernels.BACKEND, time.perf_counter() - t0, repr(float(tr.cum[-1])))
"""


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_table(repeats):
    rng = np.random.default_rng(0)
    print(f"{'n':>7} {'d':>3} {'numpy us':>10} {'numba us':>10} {'speedup':>8}  same")
    for n, d in [(100, 1), (1_000, 1), (10_000, 1), (1_000, 5), (10_000, 5), (5_000, 784)]:
        pts = rng.standard_normal((n, d))
        q = rng.standard_normal(d)
        k = n  # adaptive k sorts the whole store

        def np_path():
            idx, dist = _kernels.neighbor_order_numpy(pts, n, q, k)
            return idx, dist, _kernels.adaptive_prefix_numpy(dist, 1.0, np.log(1e4))

        def nb_path():
            idx, dist = _kernels.neighbor_order_numba(pts, n, q, k)
            return idx, dist, _kernels.adaptive_prefix_numba(dist, 1.0, np.log(1e4))

        a, b = np_path(), nb_path()  # also compiles
        same = np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) and a[2] == b[2]
        reps = max(3, repeats // max(1, n * d // 10_000))
        t_np, t_nb = best_of(np_path, reps), best_of(nb_path, reps)
        print(f"{n:>7} {d:>3} {t_np * 1e6:>10.1f} {t_nb * 1e6:>10.1f} {t_np / t_nb:>8.2f}  {same}")


def trial_table(T):
    print(f"\nadaptive trial, t4 / trig, T={T}")
    results = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, KNNUCB_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", TRIAL.format(T=T)], env=env, capture_output=True, text=True, check=True)
        name, secs, regret = out.stdout.split()
        results[name] = (float(secs), regret)
        print(f"  {name:>6}: {float(secs):7.3f} s   final regret {regret}")
    if results["numpy"][1] != results["numba"][1]:
        print("  WARNING: backends disagree")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--T", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    kernel_table(args.repeats)
    trial_table(args.T)


if __name__ == "__main__":
    main()
