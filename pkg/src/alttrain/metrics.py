"""Classification metrics from confusion matrices.

Decision rules: multi-class outputs take the argmax with ties broken
toward the lowest class index; single-column outputs are binary logits,
predicting class 1 exactly when the logit is > 0 (a logit of 0 predicts
class 0).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i, j] = rows with true class i predicted as class j."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ValueError("confusion matrix must be square, at least 2x2")
        if (c < 0).any():
            raise ValueError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def total(self):
        return int(self.counts.sum())


def predicted_classes(outputs):
    outputs = np.asarray(outputs, dtype=np.float64)
    if outputs.ndim != 2:
        raise ValueError("outputs must be 2-D")
    if outputs.shape[1] == 1:
        return (outputs[:, 0] > 0.0).astype(np.int64)
    return outputs.argmax(axis=1).astype(np.int64)


def true_classes(labels):
    labels = np.asarray(labels, dtype=np.float64)
    if labels.ndim != 2:
        raise ValueError("labels must be 2-D")
    if labels.shape[1] == 1:
        return labels[:, 0].astype(np.int64)
    return labels.argmax(axis=1).astype(np.int64)


def confusion_matrix(outputs, labels):
    """Confusion counts for one task's outputs against its label block."""
    outputs = np.asarray(outputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if outputs.shape != labels.shape:
        raise ValueError("outputs and labels must have the same shape")
    if not np.isfinite(outputs).all():
        raise ValueError("non-finite outputs")
    n_classes = 2 if outputs.shape[1] == 1 else outputs.shape[1]
    pred = predicted_classes(outputs)
    true = true_classes(labels)
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class TaskScores:
    precision: float
    recall: float
    f1: float
    accuracy: float

    def as_dict(self):
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
        }


def weighted_scores(cm):
    """Support-weighted precision, recall, and F1.

    Per-class ratios with a zero denominator score 0 (a class never
    predicted has precision 0; an absent class has recall 0).  The
    support-weighted recall is computed as trace/total, to which it is
    mathematically identical, so it equals the accuracy exactly.
    """
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise ValueError("empty confusion matrix")
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    tp = np.diag(counts)
    precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
    recall = np.where(support > 0, tp / np.maximum(support, 1), 0.0)
    pr_sum = precision + recall
    f1 = np.where(pr_sum > 0, 2.0 * precision * recall / np.where(pr_sum > 0, pr_sum, 1.0), 0.0)
    accuracy = float(int(tp.sum()) / total)
    return TaskScores(
        precision=float((support * precision).sum() / total),
        recall=accuracy,
        f1=float((support * f1).sum() / total),
        accuracy=accuracy,
    )
