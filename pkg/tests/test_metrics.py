"""Tests for confusion matrices and support-weighted scores."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alttrain.metrics import (
    ConfusionMatrix,
    confusion_matrix,
    predicted_classes,
    weighted_scores,
)


class TestDecisionRules:
    def test_argmax_tie_breaks_to_lowest_class(self):
        assert predicted_classes(np.array([[0.5, 0.5], [0.2, 0.8]])).tolist() == [0, 1]
        assert predicted_classes(np.array([[0.3, 0.4, 0.4]])).tolist() == [1]

    def test_binary_threshold_is_strict(self):
        out = np.array([[0.1], [-0.1], [0.0]])
        assert predicted_classes(out).tolist() == [1, 0, 0]

    def test_confusion_orientation(self):
        # Rows are true classes, columns are predictions.
        outputs = np.array([[0.9, 0.1], [0.9, 0.1], [0.2, 0.8]])
        labels = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        cm = confusion_matrix(outputs, labels)
        assert cm.counts.tolist() == [[1, 0], [1, 1]]

    def test_binary_logits_confusion(self):
        outputs = np.array([[1.5], [-0.5], [0.0], [2.0]])
        labels = np.array([[1.0], [0.0], [1.0], [1.0]])
        cm = confusion_matrix(outputs, labels)
        assert cm.counts.tolist() == [[1, 0], [1, 2]]

    def test_validation(self):
        with pytest.raises(ValueError):
            confusion_matrix(np.zeros((2, 2)), np.zeros((3, 2)))
        with pytest.raises(ValueError):
            confusion_matrix(np.array([[np.nan, 1.0]]), np.array([[1.0, 0.0]]))
        with pytest.raises(ValueError):
            ConfusionMatrix(np.array([[1, 2, 3]]))
        with pytest.raises(ValueError):
            ConfusionMatrix(np.array([[1, -1], [0, 2]]))


class TestWeightedScores:
    def test_documented_two_class_case(self):
        scores = weighted_scores(ConfusionMatrix(np.array([[3, 1], [2, 4]])))
        assert scores.recall == 0.7
        assert scores.accuracy == 0.7
        assert abs(scores.precision - 0.72) < 1e-15
        assert abs(scores.f1 - 232.0 / 330.0) < 1e-12

    def test_never_predicted_class_has_zero_precision(self):
        scores = weighted_scores(ConfusionMatrix(np.array([[0, 2], [0, 3]])))
        assert abs(scores.precision - (3.0 / 5.0) * (3.0 / 5.0)) < 1e-15
        assert scores.recall == 0.6

    def test_perfect_predictions(self):
        scores = weighted_scores(ConfusionMatrix(np.diag([5, 7, 9])))
        assert scores.precision == 1.0
        assert scores.recall == 1.0
        assert scores.f1 == 1.0

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            weighted_scores(ConfusionMatrix(np.zeros((2, 2), dtype=int)))

    @given(
        st.lists(
            st.lists(st.integers(0, 50), min_size=3, max_size=3), min_size=3, max_size=3
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_weighted_recall_equals_accuracy_exactly(self, rows):
        counts = np.array(rows)
        if counts.sum() == 0:
            counts[0, 0] = 1
        cm = ConfusionMatrix(counts)
        scores = weighted_scores(cm)
        assert scores.recall == np.trace(counts) / counts.sum()
        assert scores.recall == scores.accuracy
        for value in (scores.precision, scores.recall, scores.f1):
            assert 0.0 <= value <= 1.0
