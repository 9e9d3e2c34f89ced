"""IDX image/label files and the digit-classification bandit built from them.

IDX layout (big-endian)::

    images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | count*rows*cols u8
    labels: u32 magic 0x00000801 | u32 count | count u8

Gzip-compressed files are not handled; decompress them first.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .environments import RewardFamily

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxParseError(ValueError):
    def __init__(self, offset, message):
        super().__init__(f"IDX parse error at offset {offset}: {message}")
        self.offset = offset


def _u32(data, offset, what):
    if len(data) < offset + 4:
        raise IdxParseError(offset, f"truncated header, expected {what}")
    return struct.unpack_from(">I", data, offset)[0]


def _payload(data, offset, count, what):
    if len(data) < offset + count:
        raise IdxParseError(len(data), f"truncated {what}: need {count} bytes after offset {offset}")
    if len(data) > offset + count:
        raise IdxParseError(offset + count, f"{len(data) - offset - count} trailing bytes")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=offset)


def parse_idx_images(data):
    """Decode an IDX image file into a (count, rows, cols) float array in [0, 1]."""
    data = bytes(data)
    magic = _u32(data, 0, "magic")
    if magic != IMAGES_MAGIC:
        raise IdxParseError(0, f"bad magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}")
    count, rows, cols = (_u32(data, off, name) for off, name in ((4, "count"), (8, "rows"), (12, "cols")))
    total = count * rows * cols
    if total > len(data):
        raise IdxParseError(4, f"dimensions {count}x{rows}x{cols} exceed the file size")
    pixels = _payload(data, 16, total, "pixel payload")
    return pixels.reshape(count, rows, cols) / 255.0


def parse_idx_labels(data):
    data = bytes(data)
    magic = _u32(data, 0, "magic")
    if magic != LABELS_MAGIC:
        raise IdxParseError(0, f"bad magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}")
    count = _u32(data, 4, "count")
    if count > len(data):
        raise IdxParseError(4, f"count {count} exceeds the file size")
    return _payload(data, 8, count, "label payload").astype(np.int64)


def serialize_idx_images(images):
    images = np.asarray(images)
    pixels = np.rint(images * 255.0).astype(np.uint8)
    count, rows, cols = images.shape
    return struct.pack(">IIII", IMAGES_MAGIC, count, rows, cols) + pixels.tobytes()


def serialize_idx_labels(labels):
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", LABELS_MAGIC, labels.shape[0]) + labels.tobytes()


@dataclass
class LabeledImageSet:
    images: np.ndarray  # (n, rows*cols), pixels in [0, 1]
    labels: np.ndarray
    rows: int
    cols: int

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError("image and label counts differ")

    def __len__(self):
        return self.labels.shape[0]


def load_labeled_images(images_path, labels_path, limit=None):
    raw = parse_idx_images(Path(images_path).read_bytes())
    labels = parse_idx_labels(Path(labels_path).read_bytes())
    if raw.shape[0] != labels.shape[0]:
        raise ValueError(f"{raw.shape[0]} images but {labels.shape[0]} labels")
    if limit is not None:
        raw, labels = raw[:limit], labels[:limit]
    n, rows, cols = raw.shape
    return LabeledImageSet(raw.reshape(n, rows * cols), labels, rows, cols)


class Classification(RewardFamily):
    """Reward 1 when the action equals the label of the image, else 0. Noiseless."""

    def __init__(self, image_set, num_actions=10):
        self.images = image_set
        self.num_actions = int(num_actions)
        self.dim = image_set.images.shape[1]
        self.sigma = 0.0
        self._lookup = None

    def label_of(self, X):
        if self._lookup is None:
            self._lookup = {row.tobytes(): int(lbl) for row, lbl in zip(self.images.images, self.images.labels)}
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([self._lookup[row.tobytes()] for row in X], dtype=np.int64)

    def means_from_labels(self, labels):
        return (labels[:, None] == np.arange(self.num_actions)[None, :]).astype(np.float64)

    def means(self, X):
        return self.means_from_labels(self.label_of(X))


class ClassificationEnvironment:
    """Images presented in shuffled order, reshuffled at each new epoch.

    With ``seed=None`` each trial's context stream decides the order; a fixed
    seed pins the same presentation order for every trial.
    """

    def __init__(self, image_set, seed=None, num_actions=10):
        if len(image_set) == 0:
            raise ValueError("empty image set")
        self.images = image_set
        self.family = Classification(image_set, num_actions)
        self.seed = seed
        self.name = f"classification(n={len(image_set)})"

    dim = property(lambda self: self.family.dim)
    num_actions = property(lambda self: self.family.num_actions)
    sigma = property(lambda self: 0.0)
    lipschitz = property(lambda self: None)

    def order(self, rng, T):
        n = len(self.images)
        epochs = -(-T // n)
        return np.concatenate([rng.permutation(n) for _ in range(epochs)])[:T]

    def draw(self, rng, T):
        if self.seed is not None:
            rng = np.random.default_rng(self.seed)
        idx = self.order(rng, T)
        return self.images.images[idx], self.family.means_from_labels(self.images.labels[idx])


def classification_env(image_set, seed=None):
    return ClassificationEnvironment(image_set, seed)
