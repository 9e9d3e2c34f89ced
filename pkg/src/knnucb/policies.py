"""Nearest-neighbor UCB policies (fixed k and adaptive k) and the action-selection rule.

Every policy follows the same two-call protocol per step::

    a = policy.act(x)
    policy.observe(x, a, y)

Baseline policies (UCBogram, ABSE, oracle, uniform random) live in
:mod:`knnucb.baselines` and share this protocol.
"""

import math
from dataclasses import dataclass
from functools import total_ordering

import numpy as np

from . import _kernels
from .knn_store import ActionStore


class ProtocolError(RuntimeError):
    pass


@total_ordering
class UcbValue:
    """A finite upper confidence bound, or the Infinite sentinel.

    Infinite sorts above every finite value and equals other Infinites. It is
    a separate variant rather than ``float('inf')`` so the ordering stays total.
    """

    __slots__ = ("value",)

    def __init__(self, value=None):
        self.value = None if value is None else float(value)

    @classmethod
    def finite(cls, value):
        return cls(value)

    @property
    def is_infinite(self):
        return self.value is None

    def _key(self):
        return (1, 0.0) if self.value is None else (0, self.value)

    def __eq__(self, other):
        if not isinstance(other, UcbValue):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other):
        if not isinstance(other, UcbValue):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return "Infinite" if self.value is None else f"Finite({self.value!r})"


INFINITE = UcbValue()


def Finite(value):
    return UcbValue(value)


@dataclass
class PolicyConfig:
    horizon_T: int
    num_actions: int
    dim: int
    sigma: float
    lipschitz_L: float
    conf_scale: float = 1.0
    k_fixed: int | None = None

    def __post_init__(self):
        if self.horizon_T < 1:
            raise ValueError("horizon_T must be >= 1")
        if self.num_actions < 1 or self.dim < 1:
            raise ValueError("num_actions and dim must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.lipschitz_L <= 0 or self.conf_scale <= 0:
            raise ValueError("lipschitz_L and conf_scale must be positive")
        if self.k_fixed is not None and self.k_fixed < 1:
            raise ValueError("k_fixed must be positive")


def default_k(T, dim, alpha=None):
    """Fixed-k choice ``ceil(T**(2/(d+2)))``; with a known margin exponent and
    ``d <= alpha + 1`` the rate-optimal choice is ``ceil(T**(2/(alpha+3)))``."""
    if alpha is not None and dim <= alpha + 1:
        exponent = 2.0 / (alpha + 3.0)
    else:
        exponent = 2.0 / (dim + 2.0)
    # guard against 1000**(2/3) = 100.00000000000001 style round-up
    return max(1, math.ceil(T**exponent - 1e-9))


def _log_term(cfg, power):
    # ln(d * T**power * |A|) without forming T**power (overflows for image-sized d)
    return math.log(cfg.dim) + power * math.log(cfg.horizon_T) + math.log(cfg.num_actions)


def fixed_b(cfg):
    """Constant exploration bonus of the fixed-k rule."""
    if cfg.k_fixed is None:
        raise ValueError("fixed_b needs cfg.k_fixed")
    log_term = _log_term(cfg, 2 * cfg.dim + 2)
    if log_term <= 0:
        raise ValueError("d * T^(2d+2) * |A| must exceed 1")
    return cfg.conf_scale * math.sqrt(2.0 * cfg.sigma**2 / cfg.k_fixed * log_term)


def adaptive_b(cfg, k):
    """Per-query bonus of the adaptive rule for a neighborhood of size k."""
    if k < 1:
        raise ValueError("k must be positive")
    log_term = _log_term(cfg, 2 * cfg.dim + 3)
    return cfg.conf_scale * math.sqrt(2.0 * cfg.sigma**2 / k * log_term)


@dataclass
class PolicyState:
    stores: list
    t: int = 1

    @classmethod
    def fresh(cls, cfg):
        return cls([ActionStore(cfg.dim) for _ in range(cfg.num_actions)])

    @property
    def counts(self):
        return [len(s) for s in self.stores]


def fixed_ucb(cfg, state, a, x):
    store = state.stores[a]
    k = cfg.k_fixed
    if len(store) < k:
        return INFINITE
    idx, dist = store.neighbor_arrays(x, k)
    mean = store.rewards[idx].sum() / k
    return UcbValue(mean + fixed_b(cfg) + cfg.lipschitz_L * dist[-1])


def _adaptive_neighbors(cfg, store, x):
    if len(store) == 0:
        return None
    idx, dist = store.neighbor_arrays(x, len(store))
    k = _kernels.adaptive_prefix(dist, float(cfg.lipschitz_L), math.log(cfg.horizon_T))
    if k == 0:
        return None
    return idx[:k], dist[:k]


def adaptive_select_k(cfg, state, a, x):
    """Largest j with ``L * rho_j(x) <= sqrt(ln T / j)``, or None when the
    nearest stored sample of action a is already too far (or none exists)."""
    found = _adaptive_neighbors(cfg, state.stores[a], x)
    return None if found is None else len(found[0])


def adaptive_ucb(cfg, state, a, x):
    store = state.stores[a]
    found = _adaptive_neighbors(cfg, store, x)
    if found is None:
        return INFINITE
    idx, dist = found
    k = len(idx)
    mean = store.rewards[idx].sum() / k
    return UcbValue(mean + adaptive_b(cfg, k) + cfg.lipschitz_L * dist[-1])


def choose_action(ucbs):
    """Index of the largest UCB; ties go to the lowest index."""
    if len(ucbs) == 0:
        raise ValueError("choose_action needs at least one action")
    best = 0
    for a in range(1, len(ucbs)):
        if ucbs[a] > ucbs[best]:
            best = a
    return best


class Policy:
    """act/observe bookkeeping shared by all policies."""

    name = "policy"

    def __init__(self, num_actions):
        self.num_actions = int(num_actions)
        self.t = 1
        self.pull_counts = np.zeros(self.num_actions, dtype=np.int64)
        self._pending = None

    def act(self, x):
        if self._pending is not None:
            raise ProtocolError("act called twice without observe")
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        a = int(self._select(x))
        self._pending = (x, a)
        return a

    def observe(self, x, a, y):
        if self._pending is None:
            raise ProtocolError("observe called without a preceding act")
        px, pa = self._pending
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if pa != a or x.shape != px.shape or not np.array_equal(x, px):
            raise ProtocolError("observe must receive the context and action of the preceding act")
        self._pending = None
        self._update(x, a, float(y))
        self.pull_counts[a] += 1
        self.t += 1

    def _select(self, x):
        raise NotImplementedError

    def _update(self, x, a, y):
        pass


class _KnnUcbPolicy(Policy):
    def __init__(self, cfg):
        super().__init__(cfg.num_actions)
        self.cfg = cfg
        self.state = PolicyState.fresh(cfg)
        self.last_ucbs = None

    def ucb(self, a, x):
        raise NotImplementedError

    def _select(self, x):
        self.last_ucbs = [self.ucb(a, x) for a in range(self.num_actions)]
        return choose_action(self.last_ucbs)

    def _update(self, x, a, y):
        self.state.stores[a].insert(x, y)
        self.state.t += 1


class FixedKnnUcb(_KnnUcbPolicy):
    name = "fixed_knn"

    def __init__(self, cfg):
        if cfg.k_fixed is None:
            raise ValueError("FixedKnnUcb needs cfg.k_fixed")
        super().__init__(cfg)

    def ucb(self, a, x):
        return fixed_ucb(self.cfg, self.state, a, x)


class AdaptiveKnnUcb(_KnnUcbPolicy):
    name = "adaptive_knn"

    def ucb(self, a, x):
        return adaptive_ucb(self.cfg, self.state, a, x)


def act(policy, x):
    return policy.act(x)


def observe(policy, x, a, y):
    policy.observe(x, a, y)
