"""Context distributions, mean-reward families and the environment wrapper.

Multivariate Gaussian, Student-t and Cauchy contexts are coordinate-wise
products of the one-dimensional laws. Action ids are 0-based: action 0
carries the first reward function of each pair.
"""

import math

import numpy as np
from scipy import stats


# -- context distributions ---------------------------------------------------


class ContextDistribution:
    dim = 1
    beta = None  # tail exponent metadata, None when not documented

    def sample(self, rng, n):
        raise NotImplementedError

    def pdf(self, X):
        raise NotImplementedError


class UniformBox(ContextDistribution):
    def __init__(self, dim=1, half_width=1.0):
        if dim < 1 or half_width <= 0:
            raise ValueError("UniformBox needs dim >= 1 and half_width > 0")
        self.dim = int(dim)
        self.half_width = float(half_width)
        self.beta = 1.0

    def sample(self, rng, n):
        return rng.uniform(-self.half_width, self.half_width, size=(n, self.dim))

    def pdf(self, X):
        X = np.atleast_2d(X)
        inside = np.all(np.abs(X) <= self.half_width, axis=1)
        return np.where(inside, (2.0 * self.half_width) ** -self.dim, 0.0)

    def __repr__(self):
        return f"UniformBox(dim={self.dim}, half_width={self.half_width})"


class _CoordinateProduct(ContextDistribution):
    """i.i.d. coordinates drawn from one 1-d law."""

    def _sample_1d(self, rng, size):
        raise NotImplementedError

    def _pdf_1d(self, x):
        raise NotImplementedError

    def sample(self, rng, n):
        return self._sample_1d(rng, (n, self.dim))

    def pdf(self, X):
        X = np.atleast_2d(X)
        return np.prod(self._pdf_1d(X), axis=1)


class StandardGaussian(_CoordinateProduct):
    def __init__(self, dim=1):
        self.dim = int(dim)
        self.beta = 1.0

    def _sample_1d(self, rng, size):
        return rng.standard_normal(size)

    def _pdf_1d(self, x):
        return stats.norm.pdf(x)

    def __repr__(self):
        return f"StandardGaussian(dim={self.dim})"


class StudentT(_CoordinateProduct):
    def __init__(self, dim=1, dof=4.0):
        if dof <= 0:
            raise ValueError("dof must be positive")
        self.dim = int(dim)
        self.dof = float(dof)
        # documented values for the t4 examples (d=1: 0.8, d=2: 2/3)
        self.beta = self.dof / (self.dof + self.dim)

    def _sample_1d(self, rng, size):
        return rng.standard_t(self.dof, size)

    def _pdf_1d(self, x):
        return stats.t.pdf(x, self.dof)

    def __repr__(self):
        return f"StudentT(dim={self.dim}, dof={self.dof})"


class Cauchy(_CoordinateProduct):
    def __init__(self, dim=1):
        self.dim = int(dim)
        self.beta = 1.0 / (1.0 + self.dim)

    def _sample_1d(self, rng, size):
        return rng.standard_cauchy(size)

    def _pdf_1d(self, x):
        return 1.0 / (math.pi * (1.0 + x * x))

    def __repr__(self):
        return f"Cauchy(dim={self.dim})"


class Product(ContextDistribution):
    """Cartesian product of one-dimensional distributions."""

    def __init__(self, parts):
        parts = list(parts)
        if not parts or any(p.dim != 1 for p in parts):
            raise ValueError("Product takes a nonempty list of 1-d distributions")
        self.parts = parts
        self.dim = len(parts)

    def sample(self, rng, n):
        return np.hstack([p.sample(rng, n) for p in self.parts])

    def pdf(self, X):
        X = np.atleast_2d(X)
        out = np.ones(X.shape[0])
        for j, p in enumerate(self.parts):
            out *= p.pdf(X[:, j : j + 1])
        return out


def sample_context(dist, rng):
    return dist.sample(rng, 1)[0]


# -- reward families ---------------------------------------------------------


class RewardFamily:
    num_actions = 2
    sigma = 0.0
    lipschitz = None  # None when the family is not Lipschitz
    gap_bound = None

    def means(self, X):
        """(n, num_actions) array of mean rewards at each row of X."""
        raise NotImplementedError

    def mean_reward(self, a, x):
        if not 0 <= a < self.num_actions:
            raise ValueError(f"action {a} out of range")
        return float(self.means(np.asarray(x, dtype=np.float64).reshape(1, -1))[0, a])

    def optimal_reward(self, x):
        return float(self.means(np.asarray(x, dtype=np.float64).reshape(1, -1))[0].max())

    def sample_reward(self, a, x, rng):
        mean = self.mean_reward(a, x)
        if self.sigma == 0:
            return mean
        return mean + self.sigma * rng.standard_normal()


class LinearPair(RewardFamily):
    """eta_0(x) = s, eta_1(x) = -s with s = sum of coordinates."""

    def __init__(self, dim=1, sigma=0.5):
        self.dim = int(dim)
        self.sigma = float(sigma)
        self.lipschitz = math.sqrt(self.dim)

    def means(self, X):
        s = np.atleast_2d(X).sum(axis=1)
        return np.column_stack([s, -s])


class TrigPair(RewardFamily):
    """eta_0(x) = sin(s), eta_1(x) = cos(s) with s = sum of coordinates."""

    def __init__(self, dim=1, sigma=0.5):
        self.dim = int(dim)
        self.sigma = float(sigma)
        self.lipschitz = math.sqrt(self.dim)
        self.gap_bound = 2.0

    def means(self, X):
        s = np.atleast_2d(X).sum(axis=1)
        return np.column_stack([np.sin(s), np.cos(s)])


def mean_reward(family, a, x):
    return family.mean_reward(a, x)


def optimal_reward(family, x):
    return family.optimal_reward(x)


def sample_reward(family, a, x, rng):
    return family.sample_reward(a, x, rng)


# -- environment -------------------------------------------------------------


class Environment:
    """A context law paired with a reward family."""

    def __init__(self, distribution, family, name=None):
        if distribution.dim != getattr(family, "dim", distribution.dim):
            raise ValueError("distribution and reward family dimensions differ")
        self.distribution = distribution
        self.family = family
        self.name = name or f"{distribution!r}/{type(family).__name__}"

    @property
    def dim(self):
        return self.distribution.dim

    @property
    def num_actions(self):
        return self.family.num_actions

    @property
    def sigma(self):
        return self.family.sigma

    @property
    def lipschitz(self):
        return self.family.lipschitz

    def draw(self, rng, T):
        """Contexts for T steps and the (T, num_actions) mean rewards at them."""
        X = self.distribution.sample(rng, T)
        return X, self.family.means(X)
