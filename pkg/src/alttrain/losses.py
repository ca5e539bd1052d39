"""Per-task losses and their weighted aggregate.

The aggregate loss is ``sum_k weight_k * task_loss_k`` with strictly
positive weights.  For gradient work each loss also exposes its "head
delta": the gradient with respect to the final-layer pre-activation, with
the softmax/sigmoid of the head folded in analytically.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg

LOSS_KINDS = ("categorical_cross_entropy", "binary_cross_entropy_from_logits", "mse")

# Probabilities are clamped to [PROB_FLOOR, 1] before taking logs.
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LabeledBatch:
    """Input rows plus one label block per task (same row count each)."""

    inputs: np.ndarray
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "inputs", linalg.as_matrix(self.inputs))
        object.__setattr__(self, "labels", tuple(linalg.as_matrix(l) for l in self.labels))
        if self.inputs.shape[0] < 1:
            raise ValueError("batch must have at least one row")
        if not self.labels:
            raise ValueError("batch needs at least one label block")
        for block in self.labels:
            if block.shape[0] != self.inputs.shape[0]:
                raise ValueError("label block row count differs from inputs")

    @property
    def size(self):
        return self.inputs.shape[0]

    @property
    def task_count(self):
        return len(self.labels)


def project_batch(batch, k):
    """Single-task view of a multi-task batch: inputs unchanged, labels
    reduced to block k (tasks are numbered 1..K)."""
    if not 1 <= k <= batch.task_count:
        raise ValueError(f"task index {k} out of range 1..{batch.task_count}")
    return LabeledBatch(batch.inputs, (batch.labels[k - 1],))


@dataclass(frozen=True)
class LossConfig:
    """Loss kind and positive weight per task."""

    kinds: tuple
    weights: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if self.weights is None:
            object.__setattr__(self, "weights", (1.0,) * len(self.kinds))
        else:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.kinds:
            raise ValueError("need at least one task loss")
        for kind in self.kinds:
            if kind not in LOSS_KINDS:
                raise ValueError(f"unknown loss kind {kind!r}")
        if len(self.weights) != len(self.kinds):
            raise ValueError("one weight per task required")
        if any(not w > 0 for w in self.weights):
            raise ValueError("task weights must be strictly positive")

    @property
    def task_count(self):
        return len(self.kinds)


def _check_pair(outputs, labels):
    if outputs.shape != labels.shape:
        raise ValueError(f"outputs {outputs.shape} and labels {labels.shape} differ")
    if not np.isfinite(outputs).all():
        raise ValueError("non-finite model outputs")


def _check_one_hot(labels):
    if not np.isin(labels, (0.0, 1.0)).all() or not (labels.sum(axis=1) == 1.0).all():
        raise ValueError("categorical labels must be one-hot rows")


def _check_binary(labels):
    if not np.isin(labels, (0.0, 1.0)).all():
        raise ValueError("binary labels must be 0 or 1")


def task_loss(kind, outputs, labels):
    """Mean-over-batch loss of one task.

    categorical_cross_entropy expects class probabilities (softmax head);
    binary_cross_entropy_from_logits expects raw logits (linear head) and
    is evaluated in its numerically stable form; mse sums squared errors
    over output columns before averaging over the batch (no 1/2 factor).
    """
    outputs = linalg.as_matrix(outputs)
    labels = linalg.as_matrix(labels)
    _check_pair(outputs, labels)
    rows = outputs.shape[0]
    if kind == "categorical_cross_entropy":
        _check_one_hot(labels)
        p_true = (outputs * labels).sum(axis=1)
        return float(-np.log(np.clip(p_true, PROB_FLOOR, 1.0)).mean())
    if kind == "binary_cross_entropy_from_logits":
        _check_binary(labels)
        z = outputs
        per_elem = np.maximum(z, 0.0) - z * labels + np.log1p(np.exp(-np.abs(z)))
        return float(per_elem.sum() / rows)
    if kind == "mse":
        return float(((outputs - labels) ** 2).sum() / rows)
    raise ValueError(f"unknown loss kind {kind!r}")


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def head_delta(kind, outputs, labels):
    """Gradient of task_loss w.r.t. the head pre-activation.

    The softmax (categorical) and sigmoid (binary) are folded in, so the
    returned matrix feeds straight into the model's backward pass."""
    outputs = linalg.as_matrix(outputs)
    labels = linalg.as_matrix(labels)
    _check_pair(outputs, labels)
    rows = outputs.shape[0]
    if kind == "categorical_cross_entropy":
        return (outputs - labels) / rows
    if kind == "binary_cross_entropy_from_logits":
        return (_sigmoid(outputs) - labels) / rows
    if kind == "mse":
        return 2.0 * (outputs - labels) / rows
    raise ValueError(f"unknown loss kind {kind!r}")


def aggregate_loss(config, outputs, batch):
    """(weighted total, per-task unweighted losses) for one batch."""
    if len(outputs) != config.task_count or batch.task_count != config.task_count:
        raise ValueError("task count mismatch between config, outputs, and batch")
    per_task = tuple(
        task_loss(kind, out, lab)
        for kind, out, lab in zip(config.kinds, outputs, batch.labels)
    )
    total = float(sum(w * l for w, l in zip(config.weights, per_task)))
    return total, per_task


def aggregate_head_deltas(config, outputs, batch):
    """Per-task head deltas of the weighted aggregate loss."""
    if len(outputs) != config.task_count or batch.task_count != config.task_count:
        raise ValueError("task count mismatch between config, outputs, and batch")
    return [
        w * head_delta(kind, out, lab)
        for kind, w, out, lab in zip(config.kinds, config.weights, outputs, batch.labels)
    ]
