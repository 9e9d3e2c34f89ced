"""Hot inner loops: distance scans, stable neighbor ordering, adaptive-k prefix search.

Two interchangeable backends live here. The numba backend is used when numba
imports cleanly; setting ``KNNUCB_BACKEND=numpy`` forces the pure-numpy path.
Both backends accumulate squared coordinate differences in the same order, so
they return bit-identical distances.
"""

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

BACKEND = os.environ.get("KNNUCB_BACKEND", "numba" if HAVE_NUMBA else "numpy").lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"KNNUCB_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")
if BACKEND == "numba" and not HAVE_NUMBA:  # pragma: no cover
    raise ImportError("KNNUCB_BACKEND=numba requested but numba is not installed")


# -- numpy backend ----------------------------------------------------------


def distances_numpy(points, n, query):
    acc = np.zeros(n)
    for j in range(points.shape[1]):
        diff = points[:n, j] - query[j]
        acc += diff * diff
    return np.sqrt(acc)


def neighbor_order_numpy(points, n, query, k):
    dist = distances_numpy(points, n, query)
    order = np.argsort(dist, kind="stable")[:k]
    return order, dist[order]


def adaptive_prefix_numpy(sorted_dist, lipschitz, log_t):
    j = np.arange(1, sorted_dist.shape[0] + 1)
    ok = lipschitz * sorted_dist <= np.sqrt(log_t / j)
    if not ok[0]:
        return 0
    # feasible set is a prefix; first failure ends it
    fails = np.flatnonzero(~ok)
    return int(fails[0]) if fails.size else int(ok.shape[0])


# -- numba backend ----------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def distances_numba(points, n, query):
        d = points.shape[1]
        out = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in range(d):
                diff = points[i, j] - query[j]
                acc += diff * diff
            out[i] = np.sqrt(acc)
        return out

    @numba.njit(cache=True, nogil=True)
    def neighbor_order_numba(points, n, query, k):
        dist = distances_numba(points, n, query)
        order = np.argsort(dist, kind="mergesort")[:k]
        return order, dist[order]

    @numba.njit(cache=True, nogil=True)
    def adaptive_prefix_numba(sorted_dist, lipschitz, log_t):
        count = 0
        for i in range(sorted_dist.shape[0]):
            if lipschitz * sorted_dist[i] <= np.sqrt(log_t / (i + 1)):
                count = i + 1
            else:
                break
        return count

else:  # pragma: no cover
    distances_numba = neighbor_order_numba = adaptive_prefix_numba = None


if BACKEND == "numba":
    distances = distances_numba
    neighbor_order = neighbor_order_numba
    adaptive_prefix = adaptive_prefix_numba
else:
    distances = distances_numpy
    neighbor_order = neighbor_order_numpy
    adaptive_prefix = adaptive_prefix_numpy
