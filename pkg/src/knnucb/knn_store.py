"""Per-action storage of (context, reward) samples with exact k-nearest-neighbor queries."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


class DimensionError(ValueError):
    pass


class EmptyStoreError(ValueError):
    pass


@dataclass(frozen=True)
class NeighborEntry:
    sample_index: int
    distance: float
    reward: float


class ActionStore:
    """Insertion-ordered samples for one action.

    Indices are stable: the i-th inserted sample keeps index i. Queries scan
    every stored point (Euclidean distance) and order by distance, breaking
    exact ties by the smaller insertion index.
    """

    def __init__(self, dim, capacity=64):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self._points = np.empty((max(capacity, 1), self.dim))
        self._rewards = np.empty(max(capacity, 1))
        self._size = 0

    def __len__(self):
        return self._size

    @property
    def points(self):
        return self._points[: self._size]

    @property
    def rewards(self):
        return self._rewards[: self._size]

    def _check_dim(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.dim:
            raise DimensionError(f"expected a context of length {self.dim}, got {x.shape[0]}")
        return x

    def insert(self, x, y):
        """Append one sample and return its insertion index."""
        x = self._check_dim(x)
        if self._size == self._points.shape[0]:
            cap = 2 * self._points.shape[0]
            points = np.empty((cap, self.dim))
            points[: self._size] = self._points[: self._size]
            rewards = np.empty(cap)
            rewards[: self._size] = self._rewards[: self._size]
            self._points, self._rewards = points, rewards
        idx = self._size
        self._points[idx] = x
        self._rewards[idx] = float(y)
        self._size += 1
        return idx

    def neighbor_arrays(self, query, k):
        """(indices, distances) of the min(k, size) nearest samples, nearest first."""
        if self._size == 0:
            raise EmptyStoreError("knn query on an empty store")
        if k < 1:
            raise ValueError("k must be positive")
        query = self._check_dim(query)
        return _kernels.neighbor_order(self._points, self._size, query, int(k))

    def knn(self, query, k):
        idx, dist = self.neighbor_arrays(query, k)
        return [NeighborEntry(int(i), float(r), float(self._rewards[i])) for i, r in zip(idx, dist)]

    def sorted_distances(self, query, k_max):
        return self.neighbor_arrays(query, k_max)[1]


def insert(store, x, y):
    return store.insert(x, y)


def knn(store, query, k):
    return store.knn(query, k)


def sorted_distances(store, query, k_max):
    return store.sorted_distances(query, k_max)


def brute_knn(store, query, k):
    """Reference kNN: full scan in plain Python, then a stable sort on (distance, index)."""
    if len(store) == 0:
        raise EmptyStoreError("knn query on an empty store")
    if k < 1:
        raise ValueError("k must be positive")
    query = [float(v) for v in np.asarray(query, dtype=np.float64).reshape(-1)]
    if len(query) != store.dim:
        raise DimensionError(f"expected a context of length {store.dim}, got {len(query)}")
    rows = store.points.tolist()
    rewards = store.rewards.tolist()
    scored = []
    for i, row in enumerate(rows):
        acc = 0.0
        for a, b in zip(row, query):
            diff = a - b
            acc += diff * diff
        scored.append((math.sqrt(acc), i))
    scored.sort()
    return [NeighborEntry(i, dist, rewards[i]) for dist, i in scored[:k]]
