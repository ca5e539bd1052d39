"""Synthetic two-task dataset and batching utilities.

Points are drawn uniformly on [-2, 2]^2.  Task 1 labels the quadrant,
one-hot over four classes with the convention

    class 0: x1 >= 0 and x2 >= 0      class 1: x1 < 0 and x2 >= 0
    class 2: x1 < 0 and x2 < 0        class 3: x1 >= 0 and x2 < 0

(axes belong to the class whose closed inequality they satisfy).  Task 2
is membership of the open unit disk: 1 when x1^2 + x2^2 < 1, else 0, so
points exactly on the circle get label 0.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np

from .losses import LabeledBatch

BATCH_REGIMES = ("sampled", "split")


@dataclass(frozen=True)
class SyntheticPoint:
    x1: float
    x2: float
    quadrant: int
    in_circle: int


@dataclass(frozen=True)
class DataStore:
    """Column-oriented dataset: inputs plus one label block per task."""

    inputs: np.ndarray
    labels: tuple

    @property
    def size(self):
        return self.inputs.shape[0]

    def take(self, idx):
        return DataStore(self.inputs[idx], tuple(block[idx] for block in self.labels))

    def batch(self):
        return LabeledBatch(self.inputs, self.labels)


def quadrant_class(x1, x2):
    if x1 >= 0.0:
        return 0 if x2 >= 0.0 else 3
    return 1 if x2 >= 0.0 else 2


def synthetic_labels(coords):
    """(one-hot quadrant block, binary circle block) for an (N, 2) array."""
    x1, x2 = coords[:, 0], coords[:, 1]
    cls = np.where(x1 >= 0.0, np.where(x2 >= 0.0, 0, 3), np.where(x2 >= 0.0, 1, 2))
    onehot = np.zeros((len(coords), 4))
    onehot[np.arange(len(coords)), cls] = 1.0
    circle = ((x1 * x1 + x2 * x2) < 1.0).astype(np.float64).reshape(-1, 1)
    return onehot, circle


def generate_points(n, rng):
    """n SyntheticPoints; coordinates come from one uniform draw of 2n
    values on [-2, 2), consumed in row-major (x1, x2) pairs."""
    if n < 1:
        raise ValueError("need n >= 1")
    coords = rng.uniform(-2.0, 2.0, 2 * n).reshape(n, 2)
    onehot, circle = synthetic_labels(coords)
    cls = onehot.argmax(axis=1)
    return [
        SyntheticPoint(float(coords[i, 0]), float(coords[i, 1]), int(cls[i]), int(circle[i, 0]))
        for i in range(n)
    ]


def points_to_store(points):
    coords = np.array([[p.x1, p.x2] for p in points], dtype=np.float64)
    onehot = np.zeros((len(points), 4))
    onehot[np.arange(len(points)), [p.quadrant for p in points]] = 1.0
    circle = np.array([[float(p.in_circle)] for p in points])
    return DataStore(coords, (onehot, circle))


def generate_store(n, rng):
    """Array-backed equivalent of points_to_store(generate_points(n, rng))."""
    if n < 1:
        raise ValueError("need n >= 1")
    coords = rng.uniform(-2.0, 2.0, 2 * n).reshape(n, 2)
    return DataStore(coords, synthetic_labels(coords))


def split_store(store, ratios, rng):
    """Shuffle once, then slice into (train, val, test).

    Train and validation sizes are rounded from the ratios; the remainder
    goes to test."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("need three positive ratios")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    n = store.size
    n_train = round(n * ratios[0])
    n_val = round(n * ratios[1])
    if n_train < 1 or n_val < 1 or n - n_train - n_val < 1:
        raise ValueError("every part of the split must be non-empty")
    perm = rng.permutation(n)
    shuffled = store.take(perm)
    return (
        shuffled.take(np.arange(0, n_train)),
        shuffled.take(np.arange(n_train, n_train + n_val)),
        shuffled.take(np.arange(n_train + n_val, n)),
    )


@dataclass(frozen=True)
class Scaler:
    """Column-wise standardizer fitted on training inputs only."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, inputs):
        return (inputs - self.mean) / self.std

    def transform_store(self, store):
        return replace(store, inputs=self.transform(store.inputs))


def fit_scaler(inputs):
    """Per-column mean and population standard deviation; zero-variance
    columns get std 1 so constant features pass through centered."""
    inputs = np.asarray(inputs, dtype=np.float64)
    mean = inputs.mean(axis=0)
    std = inputs.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return Scaler(mean, std)


def sample_batch(store, size, rng):
    """Uniform batch without replacement inside the batch."""
    if not 1 <= size <= store.size:
        raise ValueError(f"batch size {size} out of range 1..{store.size}")
    idx = rng.partial_permutation(store.size, size)
    return LabeledBatch(store.inputs[idx], tuple(b[idx] for b in store.labels))


def epoch_split(store, size, rng):
    """Shuffle the store and cut it into consecutive batches of ``size``;
    a final partial batch is kept."""
    if not 1 <= size <= store.size:
        raise ValueError(f"batch size {size} out of range 1..{store.size}")
    perm = rng.permutation(store.size)
    return [
        LabeledBatch(store.inputs[chunk], tuple(b[chunk] for b in store.labels))
        for chunk in (perm[i : i + size] for i in range(0, store.size, size))
    ]


def batches_per_epoch(n, size, regime):
    """Steps per epoch: floor(n/size) for the sampled regime, ceil for the
    split regime (the partial batch counts)."""
    if regime not in BATCH_REGIMES:
        raise ValueError(f"unknown batching regime {regime!r}")
    if not 1 <= size <= n:
        raise ValueError(f"batch size {size} out of range 1..{n}")
    if regime == "sampled":
        return n // size
    return -(-n // size)


def save_csv(path, store):
    """Write the synthetic schema: header x1,x2,q,c; 17 significant digits."""
    onehot, circle = store.labels
    cls = onehot.argmax(axis=1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "q", "c"])
        for i in range(store.size):
            writer.writerow(
                [
                    format(store.inputs[i, 0], ".17g"),
                    format(store.inputs[i, 1], ".17g"),
                    int(cls[i]),
                    int(circle[i, 0]),
                ]
            )


def load_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x1", "x2", "q", "c"]:
            raise ValueError(f"unexpected CSV header {header!r}")
        coords, cls, circle = [], [], []
        for row in reader:
            coords.append((float(row[0]), float(row[1])))
            cls.append(int(row[2]))
            circle.append(int(row[3]))
    if not coords:
        raise ValueError("empty dataset file")
    coords = np.array(coords)
    if any(not 0 <= q <= 3 for q in cls) or any(c not in (0, 1) for c in circle):
        raise ValueError("labels out of range in dataset file")
    onehot = np.zeros((len(cls), 4))
    onehot[np.arange(len(cls)), cls] = 1.0
    return DataStore(coords, (onehot, np.array(circle, dtype=np.float64).reshape(-1, 1)))
