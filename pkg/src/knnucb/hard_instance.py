"""Disjoint-ball hard instances used to stress policies near the lower bound.

Bounded variant: ``B`` balls of radius ``h`` with density 1 on each; the
first ``K`` carry reward ``v_j * h`` for action 0 (action 1 is identically 0).
Tailed variant: one central ball of density 1 plus ``K`` tail balls of
density ``m``, each a margin ball.

Both constructions are asymptotic, so the integer counts are rounded and
every constraint is re-checked; ``K`` shrinks until all of them hold.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .environments import ContextDistribution, RewardFamily


class InfeasibleInstanceError(ValueError):
    pass


def unit_ball_volume(d):
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def _ceil(x):
    return math.ceil(x - 1e-9)


def _floor(x):
    return math.floor(x + 1e-9)


def margin_ball_count(h, alpha, C_alpha, dim):
    """Largest K with ``K * v_d * h**d <= C_alpha * h**alpha`` (bounded variant)."""
    return _floor(C_alpha * h ** (alpha - dim) / unit_ball_volume(dim))


@dataclass
class HardInstanceSpec:
    dim: int
    variant: str  # "bounded" or "tailed"
    radius_h: float
    num_margin_balls_K: int
    num_balls_B: int
    tail_mass_m: float
    signs: np.ndarray
    alpha: float
    C_alpha: float
    beta: float
    C_beta: float
    centers: np.ndarray  # (B, d) ball centers; rows < K are margin balls
    center_radius: float = 0.0  # tailed variant: radius of the central ball
    horizon_T: int = 0
    constraints: dict = field(default_factory=dict)

    @property
    def v_d(self):
        return unit_ball_volume(self.dim)

    def to_json(self):
        return json.dumps(
            {
                "dim": self.dim,
                "variant": self.variant,
                "horizon_T": self.horizon_T,
                "radius_h": self.radius_h,
                "num_margin_balls_K": self.num_margin_balls_K,
                "num_balls_B": self.num_balls_B,
                "tail_mass_m": self.tail_mass_m,
                "center_radius": self.center_radius,
                "alpha": self.alpha,
                "C_alpha": self.C_alpha,
                "beta": self.beta,
                "C_beta": self.C_beta,
                "signs": [int(s) for s in self.signs],
                "centers": self.centers.tolist(),
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        raw["signs"] = np.array(raw["signs"], dtype=np.int64)
        raw["centers"] = np.array(raw["centers"], dtype=np.float64).reshape(-1, raw["dim"])
        spec = cls(**raw)
        spec.constraints = check_constraints(spec)
        return spec


def check_constraints(spec):
    """name -> (lhs, rhs, satisfied) for every construction constraint."""
    d, h, K, B, m = spec.dim, spec.radius_h, spec.num_margin_balls_K, spec.num_balls_B, spec.tail_mass_m
    v = unit_ball_volume(d)
    out = {}
    if len(spec.centers) > 1:
        sep = cKDTree(spec.centers).query(spec.centers, k=2)[0][:, 1].min()
    else:
        sep = math.inf
    out["balls_disjoint"] = (2.0 * h, float(sep), bool(sep > 2.0 * h))
    out["margin_balls_exist"] = (1.0, float(K), K >= 1)
    out["margin_balls_within_B"] = (float(K), float(B), K <= B)
    if spec.variant == "bounded":
        mass = B * v * h**d
        out["normalization"] = (mass, 1.0, bool(abs(mass - 1.0) <= 1e-9))
        lhs = K * v * h**d
        out["margin_condition"] = (lhs, spec.C_alpha * h**spec.alpha, bool(lhs <= spec.C_alpha * h**spec.alpha * (1 + 1e-12)))
    else:
        tail = m * K * v * h**d
        central = v * spec.center_radius**d
        out["normalization"] = (central + tail, 1.0, bool(abs(central + tail - 1.0) <= 1e-9))
        out["margin_condition"] = (tail, spec.C_alpha * h**spec.alpha, bool(tail <= spec.C_alpha * h**spec.alpha * (1 + 1e-12)))
        out["tail_condition"] = (tail, spec.C_beta * m**spec.beta, bool(tail <= spec.C_beta * m**spec.beta * (1 + 1e-12)))
        info = spec.horizon_T * m * v * h ** (d + 2)
        out["information_budget"] = (info, 0.5, bool(info < 0.5))
        if B:
            gap = np.linalg.norm(spec.centers, axis=1).min() - spec.center_radius - h
        else:
            gap = math.inf
        out["central_ball_disjoint"] = (0.0, float(gap), bool(gap > 0))
    return out


def _lattice(count, dim, spacing, offset):
    side = max(1, _ceil(count ** (1.0 / dim)))
    grid = np.indices((side,) * dim).reshape(dim, -1).T[:count]
    return offset + spacing * grid.astype(np.float64)


def build_hard_instance(T, alpha, C_alpha, beta, C_beta, dim, variant, rng, h=None, B=None):
    """Construct a constraint-satisfying hard instance.

    ``h`` and ``B`` override the nominal radius / ball count (bounded variant).
    The bounded radius is recomputed from ``B`` so ``B * v_d * h**d == 1``.
    """
    if dim < 1 or T < 2:
        raise ValueError("need dim >= 1 and T >= 2")
    if not 0 < alpha <= dim:
        raise ValueError("alpha must lie in (0, dim]")
    v = unit_ball_volume(dim)
    if variant == "bounded":
        h0 = T ** (-1.0 / (dim + 2)) if h is None else float(h)
        if B is None:
            B = _ceil(1.0 / (v * h0**dim))
        radius = (1.0 / (B * v)) ** (1.0 / dim)
        K = min(margin_ball_count(radius, alpha, C_alpha, dim), B)
        m = 1.0
        center_radius = 0.0
    elif variant == "tailed":
        m = T ** (-alpha / (alpha + beta * (dim + 2)))
        # constant factor keeps T * m * v_d * h^(d+2) = 1/4 < 1/2
        radius = (4.0 * v * T * m) ** (-1.0 / (dim + 2)) if h is None else float(h)
        K = _floor(radius ** (alpha - dim) / m)
        K = min(
            K,
            _floor(C_alpha * radius ** (alpha - dim) / (m * v)),
            _floor(C_beta * m ** (beta - 1.0) / (v * radius**dim)),
            _floor(0.5 / (m * v * radius**dim)),
        )
        B = K
        center_radius = None
    else:
        raise ValueError(f"unknown variant {variant!r}")

    while True:
        if K < 1:
            raise InfeasibleInstanceError(
                f"margin_balls_exist violated: no margin ball fits (variant={variant}, T={T}, alpha={alpha}, dim={dim})"
            )
        if variant == "tailed":
            B = K
            center_radius = ((1.0 - m * K * v * radius**dim) / v) ** (1.0 / dim)
            offset = np.zeros(dim)
            offset[0] = center_radius + 2.0 * radius
            centers = _lattice(B, dim, 3.0 * radius, offset)
        else:
            centers = _lattice(B, dim, 3.0 * radius, np.zeros(dim))
        signs = rng.choice(np.array([-1, 1]), size=K)
        spec = HardInstanceSpec(
            dim=dim,
            variant=variant,
            radius_h=radius,
            num_margin_balls_K=K,
            num_balls_B=B,
            tail_mass_m=m,
            signs=signs,
            alpha=float(alpha),
            C_alpha=float(C_alpha),
            beta=float(beta),
            C_beta=float(C_beta),
            centers=centers,
            center_radius=center_radius,
            horizon_T=int(T),
        )
        spec.constraints = check_constraints(spec)
        if all(ok for _, _, ok in spec.constraints.values()):
            return spec
        bad = [name for name, (_, _, ok) in spec.constraints.items() if not ok]
        if bad == ["normalization"] or "balls_disjoint" in bad or "information_budget" in bad:
            raise InfeasibleInstanceError(f"{', '.join(bad)} violated")
        K -= 1


def _sample_ball(rng, n, dim):
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(size=(n, 1)) ** (1.0 / dim)


class HardInstance(ContextDistribution):
    """Context law of a hard instance: piecewise-constant density on disjoint balls."""

    def __init__(self, spec):
        self.spec = spec
        self.dim = spec.dim
        self.beta = spec.beta if spec.variant == "tailed" else None
        self._tree = cKDTree(spec.centers)

    def ball_of(self, X):
        """Index of the tail/margin ball containing each row, -1 if none."""
        X = np.atleast_2d(X)
        dist, idx = self._tree.query(X)
        return np.where(dist <= self.spec.radius_h, idx, -1)

    def pdf(self, X):
        X = np.atleast_2d(X)
        s = self.spec
        inside = self.ball_of(X) >= 0
        if s.variant == "bounded":
            return inside.astype(np.float64)
        central = np.linalg.norm(X, axis=1) <= s.center_radius
        return np.where(central, 1.0, np.where(inside, s.tail_mass_m, 0.0))

    def sample(self, rng, n):
        s = self.spec
        unit = _sample_ball(rng, n, s.dim)
        if s.variant == "bounded":
            which = rng.integers(s.num_balls_B, size=n)
            return s.centers[which] + s.radius_h * unit
        tail_mass = s.tail_mass_m * s.num_balls_B * s.v_d * s.radius_h**s.dim
        in_tail = rng.uniform(size=n) < tail_mass
        which = rng.integers(s.num_balls_B, size=n)
        return np.where(
            in_tail[:, None],
            s.centers[which] + s.radius_h * unit,
            s.center_radius * unit,
        )

    def bounding_box(self):
        s = self.spec
        lo = s.centers.min(axis=0) - s.radius_h
        hi = s.centers.max(axis=0) + s.radius_h
        if s.variant == "tailed":
            lo = np.minimum(lo, -s.center_radius)
            hi = np.maximum(hi, s.center_radius)
        return lo, hi


class HardInstanceReward(RewardFamily):
    """eta_0(x) = v_j * h inside margin ball j, 0 elsewhere; eta_1 = 0.

    Discontinuous at ball boundaries, so it has no Lipschitz constant.
    """

    def __init__(self, spec, sigma=0.0):
        self.spec = spec
        self.dim = spec.dim
        self.sigma = float(sigma)
        self.gap_bound = spec.radius_h
        self._dist = HardInstance(spec)

    def means(self, X):
        ball = self._dist.ball_of(X)
        margin = (ball >= 0) & (ball < self.spec.num_margin_balls_K)
        eta = np.where(margin, self.spec.signs[np.where(margin, ball, 0)] * self.spec.radius_h, 0.0)
        return np.column_stack([eta, np.zeros_like(eta)])
