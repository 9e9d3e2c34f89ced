import math

import numpy as np
import pytest

from knnucb.hard_instance import (
    HardInstance,
    HardInstanceReward,
    HardInstanceSpec,
    InfeasibleInstanceError,
    build_hard_instance,
    check_constraints,
    unit_ball_volume,
)
from knnucb.probes import margin_probe, mc_total_mass

TAILED_M = 0.00398107170553497  # 10**-2.4


def bounded(**kw):
    args = dict(T=1000, alpha=1.0, C_alpha=4.0, beta=1.0, C_beta=1.0, dim=1, variant="bounded")
    args.update(kw)
    return build_hard_instance(rng=np.random.default_rng(0), **args)


def tailed(**kw):
    args = dict(T=10**6, alpha=1.0, C_alpha=1.0, beta=0.5, C_beta=1.0, dim=1, variant="tailed")
    args.update(kw)
    return build_hard_instance(rng=np.random.default_rng(0), **args)


def all_ok(spec):
    return all(ok for _, _, ok in spec.constraints.values())


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


class TestBounded:
    def test_forced_counts(self):
        spec = bounded(C_alpha=2.0, h=0.1, B=5)
        assert spec.num_balls_B == 5
        assert spec.radius_h == pytest.approx(0.1)
        assert spec.num_balls_B * spec.v_d * spec.radius_h == pytest.approx(1.0)
        assert spec.num_margin_balls_K == 1  # floor(2 * 0.1**0 / 2)
        assert all_ok(spec)

    @pytest.mark.parametrize("dim,alpha", [(1, 1.0), (2, 1.0), (2, 2.0), (3, 0.5)])
    def test_constraints_hold(self, dim, alpha):
        spec = bounded(dim=dim, alpha=alpha, T=500)
        assert all_ok(spec)
        lhs, rhs, _ = spec.constraints["normalization"]
        assert lhs == pytest.approx(1.0)
        assert spec.num_margin_balls_K <= spec.num_balls_B
        assert len(spec.signs) == spec.num_margin_balls_K
        assert set(np.unique(spec.signs)) <= {-1, 1}

    def test_alpha_equal_dim_needs_room(self):
        # with alpha = d, K = floor(C_alpha / v_d) whatever h is
        with pytest.raises(InfeasibleInstanceError):
            bounded(alpha=1.0, C_alpha=1.9)
        assert bounded(alpha=1.0, C_alpha=2.0).num_margin_balls_K == 1

    def test_infeasible(self):
        with pytest.raises(InfeasibleInstanceError, match="margin_balls_exist"):
            bounded(C_alpha=1e-6)

    def test_alpha_above_dim(self):
        with pytest.raises(ValueError):
            bounded(alpha=2.0, dim=1)

    def test_pdf_normalizes(self):
        spec = bounded(dim=2, T=300)
        dist = HardInstance(spec)
        lo, hi = dist.bounding_box()
        est, se = mc_total_mass(dist, lo, hi, 400_000, np.random.default_rng(1))
        assert abs(est - 1.0) < 3 * se

    def test_samples_land_in_balls(self):
        dist = HardInstance(bounded(dim=2, T=300))
        X = dist.sample(np.random.default_rng(2), 5000)
        assert (dist.ball_of(X) >= 0).all()


class TestTailed:
    def test_mass(self):
        spec = tailed()
        assert spec.tail_mass_m == pytest.approx(TAILED_M, rel=1e-12)
        assert all_ok(spec)

    @pytest.mark.parametrize("dim,alpha,beta", [(1, 1.0, 0.5), (2, 1.0, 0.8), (2, 2.0, 0.3)])
    def test_constraints_hold(self, dim, alpha, beta):
        spec = tailed(dim=dim, alpha=alpha, beta=beta, T=10**5)
        assert all_ok(spec)
        c = spec.constraints
        assert c["information_budget"][0] < 0.5
        assert c["tail_condition"][0] <= c["tail_condition"][1] * (1 + 1e-12)

    def test_pdf_normalizes(self):
        spec = tailed(T=10**5)
        dist = HardInstance(spec)
        lo, hi = dist.bounding_box()
        est, se = mc_total_mass(dist, lo, hi, 1_000_000, np.random.default_rng(3))
        assert abs(est - 1.0) < 3 * se


class TestReward:
    def test_gap_in_and_out_of_margin_balls(self):
        spec = bounded(C_alpha=2.0, h=0.1, B=5)
        fam = HardInstanceReward(spec)
        h = spec.radius_h
        inside = spec.centers[0]
        eta = fam.means(inside[None, :])[0]
        v = spec.signs[0]
        assert eta[0] == pytest.approx(v * h) and eta[1] == 0.0
        wrong = 1 if v > 0 else 0
        assert fam.optimal_reward(inside) - fam.mean_reward(wrong, inside) == pytest.approx(h)
        assert fam.optimal_reward(inside) - fam.mean_reward(1 - wrong, inside) == 0.0
        # a non-margin ball and a point between balls: no gap
        for x in (spec.centers[-1], spec.centers[0] + 1.5 * h):
            assert np.all(fam.means(np.atleast_2d(x)) == 0.0)

    def test_margin_probe_below_bound(self):
        spec = bounded(dim=1, T=2000, alpha=0.5, C_alpha=1.5)
        fam, dist = HardInstanceReward(spec), HardInstance(spec)
        u = np.geomspace(spec.radius_h / 4, 1.0, 15)
        n = 200_000
        for a in (0, 1):
            res = margin_probe(fam, dist, a, u, n, np.random.default_rng(a))
            bound = spec.C_alpha * u**spec.alpha
            assert np.all(res.estimate <= bound + 3 * np.sqrt(bound * (1 - np.minimum(bound, 1)) / n) + 1e-12)


def test_json_round_trip():
    spec = tailed(dim=2, T=10**5)
    back = HardInstanceSpec.from_json(spec.to_json())
    assert back.num_margin_balls_K == spec.num_margin_balls_K
    assert np.array_equal(back.centers, spec.centers)
    assert np.array_equal(back.signs, spec.signs)
    assert back.constraints == check_constraints(spec)
