import struct

import numpy as np
import pytest

from knnucb.baselines import OraclePolicy, UniformRandomPolicy
from knnucb.dataset import (
    IdxParseError,
    LabeledImageSet,
    classification_env,
    load_labeled_images,
    parse_idx_images,
    parse_idx_labels,
    serialize_idx_images,
    serialize_idx_labels,
)
from knnucb.simulate import run_trial, run_trials, stream, trial_seed

# hand-assembled: magic 0x803, count 1, rows 1, cols 2, pixels 0 and 255
TINY_IMAGES = bytes.fromhex("00000803" "00000001" "00000001" "00000002" "00ff")
# magic 0x801, count 3, labels 7 0 9
TINY_LABELS = bytes.fromhex("00000801" "00000003" "070009")


def image_set(n=40, side=3, seed=0):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(n, side * side)) / 255.0
    return LabeledImageSet(pixels, rng.integers(0, 10, size=n), side, side)


class TestParse:
    def test_tiny_images(self):
        assert len(TINY_IMAGES) == 18
        out = parse_idx_images(TINY_IMAGES)
        assert out.shape == (1, 1, 2)
        assert out.tolist() == [[[0.0, 1.0]]]

    def test_tiny_labels(self):
        assert parse_idx_labels(TINY_LABELS).tolist() == [7, 0, 9]

    @pytest.mark.parametrize("parse", [parse_idx_images, parse_idx_labels])
    def test_empty(self, parse):
        with pytest.raises(IdxParseError) as info:
            parse(b"")
        assert info.value.offset == 0

    def test_wrong_magic(self):
        with pytest.raises(IdxParseError) as info:
            parse_idx_images(TINY_LABELS)
        assert info.value.offset == 0 and "0x00000801" in str(info.value)
        with pytest.raises(IdxParseError):
            parse_idx_labels(TINY_IMAGES)

    def test_truncated_header(self):
        with pytest.raises(IdxParseError) as info:
            parse_idx_images(TINY_IMAGES[:10])
        assert info.value.offset == 8

    def test_truncated_payload(self):
        with pytest.raises(IdxParseError) as info:
            parse_idx_images(TINY_IMAGES[:17])
        assert info.value.offset == 17
        with pytest.raises(IdxParseError) as info:
            parse_idx_labels(TINY_LABELS[:9])
        assert info.value.offset == 9

    def test_trailing_bytes(self):
        with pytest.raises(IdxParseError) as info:
            parse_idx_labels(TINY_LABELS + b"\x00")
        assert info.value.offset == 11

    def test_dimension_overflow(self):
        data = struct.pack(">IIII", 0x803, 2**31, 2**31, 2**31)
        with pytest.raises(IdxParseError) as info:
            parse_idx_images(data)
        assert info.value.offset == 4

    def test_round_trip_bytes(self):
        assert serialize_idx_images(parse_idx_images(TINY_IMAGES)) == TINY_IMAGES
        assert serialize_idx_labels(parse_idx_labels(TINY_LABELS)) == TINY_LABELS

    def test_round_trip_random(self):
        rng = np.random.default_rng(1)
        raw = struct.pack(">IIII", 0x803, 5, 4, 3) + rng.integers(0, 256, 60, dtype=np.uint8).tobytes()
        assert serialize_idx_images(parse_idx_images(raw)) == raw
        assert parse_idx_images(raw).max() <= 1.0


def test_load_with_limit(tmp_path):
    rng = np.random.default_rng(2)
    imgs = rng.integers(0, 256, (6, 2, 2)) / 255.0
    (tmp_path / "i.idx").write_bytes(serialize_idx_images(imgs))
    (tmp_path / "l.idx").write_bytes(serialize_idx_labels([1, 2, 3, 4, 5, 6]))
    data = load_labeled_images(tmp_path / "i.idx", tmp_path / "l.idx", limit=4)
    assert data.images.shape == (4, 4) and data.labels.tolist() == [1, 2, 3, 4]
    assert np.array_equal(data.images, imgs[:4].reshape(4, 4))


def test_load_count_mismatch(tmp_path):
    (tmp_path / "i.idx").write_bytes(TINY_IMAGES)
    (tmp_path / "l.idx").write_bytes(TINY_LABELS)
    with pytest.raises(ValueError):
        load_labeled_images(tmp_path / "i.idx", tmp_path / "l.idx")


class TestClassification:
    def test_epoch_permutations(self):
        env = classification_env(image_set(10))
        X, eta = env.draw(np.random.default_rng(0), 25)
        lookup = {row.tobytes(): i for i, row in enumerate(env.images.images)}
        idx = [lookup[row.tobytes()] for row in X]
        assert sorted(idx[:10]) == list(range(10)) and sorted(idx[10:20]) == list(range(10))
        assert eta.sum(axis=1).tolist() == [1.0] * 25

    def test_fixed_seed_pins_order(self):
        env = classification_env(image_set(10), seed=3)
        a, _ = env.draw(np.random.default_rng(0), 10)
        b, _ = env.draw(np.random.default_rng(1), 10)
        assert np.array_equal(a, b)

    def test_means(self):
        data = image_set(5)
        env = classification_env(data)
        eta = env.family.means(data.images)
        assert np.array_equal(eta.argmax(axis=1), data.labels)
        assert all(env.family.optimal_reward(x) == 1.0 for x in data.images)
        assert env.sigma == 0.0

    def test_label_policy_zero_regret(self):
        env = classification_env(image_set())
        tr = run_trial(env, OraclePolicy(env.family), 100, trial_seed(0, 0))
        assert tr.cum[-1] == 0.0

    def test_regret_is_one_minus_reward(self):
        env = classification_env(image_set())
        seed = trial_seed(0, 1)
        tr = run_trial(env, UniformRandomPolicy(10, np.random.default_rng(0)), 200, seed)
        _, eta = env.draw(stream(seed, 0), 200)  # the contexts the trial saw
        reward = eta[np.arange(200), tr.actions]
        assert np.array_equal(tr.inst, 1.0 - reward)
        assert set(np.unique(tr.inst)) <= {0.0, 1.0}

    def test_random_policy_regret(self):
        env = classification_env(image_set(60))
        res = run_trials(env, lambda rng: UniformRandomPolicy(10, rng), 1000, 20, master_seed=5)
        # per-trial sd sqrt(1000 * 0.9 * 0.1) = 9.5; mean of 20
        assert abs(res.final_mean - 900) < 4 * 9.5 / np.sqrt(20)

    def test_empty(self):
        with pytest.raises(ValueError):
            classification_env(LabeledImageSet(np.zeros((0, 4)), np.zeros(0, dtype=int), 2, 2))
