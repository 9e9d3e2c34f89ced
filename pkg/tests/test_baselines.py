import math

import numpy as np
import pytest

from knnucb.baselines import Abse, OraclePolicy, Ucbogram, UniformRandomPolicy, bin_index
from knnucb.environments import LinearPair, TrigPair


def step(policy, x, reward_of):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = policy.act(x)
    policy.observe(x, a, reward_of(a))
    return a


class TestBinIndex:
    @pytest.mark.parametrize("x,want", [(-1.0, 0), (0.999, 3), (5.0, 3), (-7.0, 0), (0.0, 2), (-0.5, 1)])
    def test_one_dim(self, x, want):
        assert bin_index([x], 4, 1.0)[0] == want

    def test_two_dim(self):
        assert list(bin_index([-3.0, 2.9], 8, 3.0)) == [0, 7]


class TestUcbogram:
    def test_unpulled_first(self):
        policy = Ucbogram(3, 1, bins=4, clip=1.0)
        assert [step(policy, 0.1, lambda a: 5.0) for _ in range(3)] == [0, 1, 2]

    def test_cells_are_independent(self):
        policy = Ucbogram(2, 1, bins=2, clip=1.0)
        step(policy, 0.5, lambda a: 1.0)
        # a new cell starts again from action 0
        assert step(policy, -0.5, lambda a: 1.0) == 0

    def test_deterministic_gap_trace(self):
        # arm 0 pays 1, arm 1 pays 0; ucb1 index = mean + sqrt(2 ln n / n_a)
        policy = Ucbogram(2, 1, bins=1, clip=1.0)
        counts = np.zeros(2, dtype=int)
        for _ in range(2000):
            n = counts.sum()
            widths = np.sqrt(2 * math.log(max(n, 1)) / np.maximum(counts, 1))
            a = step(policy, 0.2, lambda a: 1.0 - a)
            if counts.min() > 0:
                # the worse arm wins only when its width covers gap + better width
                assert a == int(widths[1] > 1.0 + widths[0])
            counts[a] += 1
        # worse-arm pulls grow like 2 ln n
        assert counts[1] <= 2 * math.log(2000) + 2

    def test_hand_trace(self):
        policy = Ucbogram(2, 1, bins=1, clip=1.0)
        actions = [step(policy, 0.0, lambda a: 1.0 - a) for _ in range(7)]
        # arm 1 returns once sqrt(2 ln n) > 1 + sqrt(2 ln n / (n - 1)): first at n = 6
        assert actions == [0, 1, 0, 0, 0, 0, 1]


class TestAbse:
    def test_single_action(self):
        policy = Abse(1, 1, horizon_T=100)
        assert all(step(policy, x, lambda a: 0.0) == 0 for x in np.linspace(-1, 1, 20))

    def test_round_robin(self):
        policy = Abse(2, 1, horizon_T=1000, max_depth=0)
        assert [step(policy, 0.3, lambda a: 0.5) for _ in range(8)] == [0, 1] * 4

    def test_elimination_when_width_below_half_gap(self):
        T = 1000
        policy = Abse(2, 1, horizon_T=T, max_depth=0)
        first = next(r for r in range(1, T) if policy.width(r) < 0.5)
        for r in range(1, first):
            step(policy, 0.0, lambda a: float(a == 0))
            step(policy, 0.0, lambda a: float(a == 0))
            assert policy.root.arms == [0, 1], r
        step(policy, 0.0, lambda a: float(a == 0))
        step(policy, 0.0, lambda a: float(a == 0))
        assert policy.root.arms == [0]
        assert all(step(policy, 0.0, lambda a: float(a == 0)) == 0 for _ in range(10))

    def test_split_schedule(self):
        policy = Abse(2, 1, horizon_T=10**4, max_depth=2)
        rounds = policy.schedule(0)
        assert rounds == math.ceil(math.log(10**4))
        for _ in range(rounds):
            step(policy, 0.1, lambda a: 0.0)
            step(policy, 0.1, lambda a: 0.0)
        assert policy.root.children is not None
        assert len(policy.root.children) == 2
        assert policy.leaf(np.array([0.1])).depth == 1

    def test_width_decreases(self):
        policy = Abse(2, 1, horizon_T=1000)
        w = [policy.width(r) for r in range(1, 200)]
        assert all(a > b for a, b in zip(w, w[1:]))


def test_oracle_picks_argmax():
    fam = TrigPair(1)
    policy = OraclePolicy(fam)
    for x in np.linspace(-4, 4, 41):
        assert step(policy, x, lambda a: 0.0) == int(np.argmax(fam.means(np.array([[x]]))[0]))


def test_oracle_tie_lowest():
    assert step(OraclePolicy(LinearPair(1)), 0.0, lambda a: 0.0) == 0


def test_random_policy_covers_actions():
    policy = UniformRandomPolicy(4, np.random.default_rng(0))
    seen = [step(policy, 0.0, lambda a: 0.0) for _ in range(400)]
    counts = np.bincount(seen, minlength=4)
    assert counts.min() > 60
