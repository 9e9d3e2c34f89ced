import math

import numpy as np
import pytest

from knnucb.environments import Cauchy, LinearPair, RewardFamily, StandardGaussian, UniformBox
from knnucb.probes import DegenerateProbeError, margin_probe, tail_exponent_probe, tail_u_grid


class Flat(RewardFamily):
    dim = 1

    def means(self, X):
        return np.zeros((np.atleast_2d(X).shape[0], 2))


def test_uniform_below_density_is_zero():
    # UniformBox(1, 1) has f = 0.5 on its support
    with pytest.raises(DegenerateProbeError):
        tail_exponent_probe(UniformBox(1), [0.1, 0.2, 0.4], 10_000, np.random.default_rng(0))


def test_uniform_at_density_is_one():
    res = tail_exponent_probe(UniformBox(1), [0.1, 0.5], 10_000, np.random.default_rng(0))
    assert list(res.estimate) == [0.0, 1.0]


def test_needs_samples():
    with pytest.raises(ValueError):
        tail_exponent_probe(Cauchy(1), [0.01, 0.1], 100, np.random.default_rng(0))


def test_increasing_grid():
    with pytest.raises(ValueError):
        tail_exponent_probe(Cauchy(1), [0.1, 0.01], 10_000, np.random.default_rng(0))


def test_cauchy_slope():
    rng = np.random.default_rng(1)
    dist = Cauchy(1)
    res = tail_exponent_probe(dist, tail_u_grid(dist, rng), 1_000_000, rng)
    assert abs(res.slope - 0.5) < 0.1


def test_gaussian_tail_exact():
    # P(phi(X) <= u) = 2 * Phi(-sqrt(-2 ln(u sqrt(2 pi))))
    from scipy.stats import norm

    u = np.array([1e-3, 1e-2, 5e-2])
    n = 400_000
    res = tail_exponent_probe(StandardGaussian(1), u, n, np.random.default_rng(2))
    exact = 2 * norm.cdf(-np.sqrt(-2 * np.log(u * math.sqrt(2 * math.pi))))
    assert np.all(np.abs(res.estimate - exact) < 4 * np.sqrt(exact * (1 - exact) / n))


def test_cauchy_tail_exact():
    # f(x) <= u  <=>  |x| >= sqrt(1/(pi u) - 1)
    rng = np.random.default_rng(3)
    dist = Cauchy(1)
    probs = np.array([1e-3, 1e-2])
    u = tail_u_grid(dist, rng, probs)
    n = 400_000
    res = tail_exponent_probe(dist, u, n, rng)
    exact = 1 - 2 / math.pi * np.arctan(np.sqrt(1 / (math.pi * u) - 1))
    assert np.all(np.abs(res.estimate - exact) < 4 * np.sqrt(exact * (1 - exact) / n))
    # the pilot grid lands near the requested levels
    assert np.all(np.abs(exact / probs - 1) < 0.3)


def test_margin_linear_uniform():
    # action 1 is -x: gap = 2x on x > 0, so P(0 < gap < u) = u/4 for u <= 2
    u = np.array([0.1, 0.5, 1.0, 2.0])
    n = 400_000
    res = margin_probe(LinearPair(1), UniformBox(1), 1, u, n, np.random.default_rng(4))
    exact = u / 4
    assert np.all(np.abs(res.estimate - exact) < 3 * np.sqrt(exact * (1 - exact) / n))
    assert res.slope == pytest.approx(1.0, abs=0.02)


def test_margin_zero_gap():
    res = margin_probe(Flat(), UniformBox(1), 0, [0.1, 1.0], 10_000, np.random.default_rng(5))
    assert list(res.estimate) == [0.0, 0.0]
    assert res.slope is None
