"""Baseline policies: UCBogram, ABSE, the oracle, and uniform random choice.

UCBogram and ABSE work on a clipped box ``[-clip, clip]^d``; contexts outside
it are clipped coordinate-wise, so heavy-tailed draws land in edge bins.
"""

import math

import numpy as np

from .policies import Policy


def bin_index(x, bins, clip):
    """Per-coordinate bin indices after clipping to ``[-clip, clip]``."""
    x = np.clip(np.asarray(x, dtype=np.float64), -clip, clip)
    idx = np.floor((x + clip) / (2.0 * clip) * bins).astype(np.int64)
    return np.minimum(idx, bins - 1)


def _ucb1_pick(counts, sums, width_scale):
    unpulled = np.flatnonzero(counts == 0)
    if unpulled.size:
        return int(unpulled[0])
    n = counts.sum()
    index = sums / counts + width_scale * np.sqrt(2.0 * math.log(n) / counts)
    return int(np.argmax(index))


class Ucbogram(Policy):
    """Uniform partition into ``bins**d`` cells with an independent UCB1 per cell."""

    name = "ucbogram"

    def __init__(self, num_actions, dim, bins, clip=3.0, width_scale=1.0):
        super().__init__(num_actions)
        if bins < 1 or clip <= 0:
            raise ValueError("bins must be >= 1 and clip > 0")
        self.dim = int(dim)
        self.bins = int(bins)
        self.clip = float(clip)
        self.width_scale = float(width_scale)
        self._counts = {}
        self._sums = {}

    def cell(self, x):
        return tuple(int(i) for i in bin_index(x, self.bins, self.clip))

    def _stats(self, cell):
        if cell not in self._counts:
            self._counts[cell] = np.zeros(self.num_actions, dtype=np.int64)
            self._sums[cell] = np.zeros(self.num_actions)
        return self._counts[cell], self._sums[cell]

    def _select(self, x):
        counts, sums = self._stats(self.cell(x))
        return _ucb1_pick(counts, sums, self.width_scale)

    def _update(self, x, a, y):
        counts, sums = self._stats(self.cell(x))
        counts[a] += 1
        sums[a] += y


class _Bin:
    __slots__ = ("lo", "side", "depth", "arms", "counts", "sums", "rounds", "children")

    def __init__(self, lo, side, depth, arms, num_actions):
        self.lo = lo
        self.side = side
        self.depth = depth
        self.arms = list(arms)
        self.counts = np.zeros(num_actions, dtype=np.int64)
        self.sums = np.zeros(num_actions)
        self.rounds = 0
        self.children = None


class Abse(Policy):
    """Adaptively binned successive elimination.

    Inside a bin the surviving arms are pulled round-robin. After every
    completed round (each survivor pulled once more) an arm is dropped when
    ``mean + w < best_mean - w`` with ``w = conf * sqrt(2 ln(max(T/r, e)) / r)``
    after ``r`` rounds. A bin at depth ``l`` with two or more survivors splits
    into ``2**d`` children once it has run ``ceil(conf * ln(max(T * g**2, e)) / g**2)``
    rounds, ``g = 2**-l``; children inherit the survivors and start fresh.
    """

    name = "abse"

    def __init__(self, num_actions, dim, horizon_T, max_depth=4, clip=3.0, conf=1.0):
        super().__init__(num_actions)
        if max_depth < 0 or clip <= 0 or conf <= 0:
            raise ValueError("invalid ABSE parameters")
        self.dim = int(dim)
        self.horizon_T = int(horizon_T)
        self.max_depth = int(max_depth)
        self.clip = float(clip)
        self.conf = float(conf)
        self.root = _Bin(np.full(self.dim, -self.clip), 2.0 * self.clip, 0, range(num_actions), num_actions)

    def width(self, rounds):
        return self.conf * math.sqrt(2.0 * math.log(max(self.horizon_T / rounds, math.e)) / rounds)

    def schedule(self, depth):
        gap = 2.0**-depth
        return math.ceil(self.conf * math.log(max(self.horizon_T * gap * gap, math.e)) / (gap * gap))

    def leaf(self, x):
        x = np.clip(x, -self.clip, self.clip)
        node = self.root
        while node.children is not None:
            half = node.side / 2.0
            bits = np.minimum(((x - node.lo) >= half).astype(np.int64), 1)
            node = node.children[int(np.dot(bits, 1 << np.arange(self.dim)))]
        return node

    def _select(self, x):
        node = self.leaf(x)
        if len(node.arms) == 1:
            return node.arms[0]
        # round-robin: the survivor with the fewest pulls, lowest index first
        return min(node.arms, key=lambda a: (node.counts[a], a))

    def _update(self, x, a, y):
        node = self.leaf(x)
        node.counts[a] += 1
        node.sums[a] += y
        if len(node.arms) < 2:
            return
        if min(node.counts[b] for b in node.arms) <= node.rounds:
            return
        node.rounds += 1
        means = {b: node.sums[b] / node.counts[b] for b in node.arms}
        w = self.width(node.rounds)
        top = max(means.values())
        node.arms = [b for b in node.arms if means[b] + w >= top - w]
        if len(node.arms) >= 2 and node.depth < self.max_depth and node.rounds >= self.schedule(node.depth):
            self._split(node)

    def _split(self, node):
        half = node.side / 2.0
        children = []
        for code in range(2**self.dim):
            bits = np.array([(code >> j) & 1 for j in range(self.dim)], dtype=np.float64)
            children.append(_Bin(node.lo + bits * half, half, node.depth + 1, node.arms, self.num_actions))
        node.children = children


class OraclePolicy(Policy):
    """Always picks ``argmax_a eta_a(x)`` (lowest index on ties)."""

    name = "oracle"

    def __init__(self, family):
        super().__init__(family.num_actions)
        self.family = family

    def _select(self, x):
        return int(np.argmax(self.family.means(x[None, :])[0]))


class UniformRandomPolicy(Policy):
    name = "random"

    def __init__(self, num_actions, rng):
        super().__init__(num_actions)
        self.rng = rng

    def _select(self, x):
        return int(self.rng.integers(self.num_actions))
