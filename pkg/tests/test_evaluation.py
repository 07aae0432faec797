import numpy as np
import pytest

from pbim.errors import ArgumentError
from pbim.evaluation import (
    ConfusionCounts, equal_error_detection_rate, metrics, recall_precision_curve, roc,
)


def mann_whitney_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y > 0]
    neg = [s for s, y in zip(scores, labels) if y <= 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_metrics_hand_case():
    m = metrics(ConfusionCounts(tp=40, fp=5, tn=45, fn=10))
    assert m.recall == pytest.approx(0.8)
    assert m.classification_rate == pytest.approx(0.85)
    assert m.one_minus_precision == pytest.approx(5 / 45)
    assert m.one_minus_precision_gt == pytest.approx(5 / 50)
    assert m.absent == ()


def test_metrics_with_zero_denominators_are_absent():
    m = metrics(ConfusionCounts(tp=0, fp=0, tn=10, fn=0))
    assert m.recall is None and m.one_minus_precision is None
    assert m.classification_rate == 1.0
    assert set(m.absent) == {"recall", "one_minus_precision", "one_minus_precision_gt"}
    assert metrics(ConfusionCounts()).absent == (
        "recall", "one_minus_precision", "classification_rate", "one_minus_precision_gt")


def test_perfect_classifier():
    m = metrics(ConfusionCounts.from_predictions([1, 1, -1, -1], [1, 1, -1, -1]))
    assert (m.recall, m.one_minus_precision, m.classification_rate) == (1.0, 0.0, 1.0)


def test_metric_identities_on_random_predictions(rng):
    for _ in range(50):
        labels = rng.choice([-1, 1], size=40)
        preds = rng.choice([-1, 1], size=40)
        c = ConfusionCounts.from_predictions(preds, labels)
        assert c.total == 40
        m = metrics(c)
        if m.recall is not None:
            assert 0.0 <= m.recall <= 1.0
        assert m.classification_rate == pytest.approx(np.mean(preds == labels))


def test_confusion_counts_validate():
    with pytest.raises(ArgumentError):
        ConfusionCounts(tp=-1)
    with pytest.raises(ArgumentError):
        ConfusionCounts.from_predictions([1], [1, -1])


def test_roc_hand_case():
    summary = roc([0.9, 0.8, 0.7, 0.6], [1, -1, 1, -1])
    assert summary.points == ((0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0))
    assert summary.auc == pytest.approx(0.75)
    assert summary.eer_detection_rate == pytest.approx(0.5)


def test_perfect_and_inverted_rankings():
    perfect = roc([0.9, 0.1], [1, -1])
    assert (perfect.auc, perfect.eer_detection_rate) == (1.0, 1.0)
    assert roc([0.1, 0.9], [1, -1]).auc == 0.0


def test_auc_matches_rank_statistic_with_ties(rng):
    for _ in range(100):
        scores = rng.integers(0, 6, size=30).astype(float)
        labels = np.where(rng.random(30) < 0.5, 1, -1)
        labels[0], labels[1] = 1, -1
        assert roc(scores, labels).auc == pytest.approx(mann_whitney_auc(scores, labels), abs=1e-9)


def test_roc_is_monotone_and_spans_the_unit_square(rng):
    scores = rng.standard_normal(60)
    labels = np.where(rng.random(60) < 0.4, 1, -1)
    labels[0], labels[1] = 1, -1
    points = roc(scores, labels).points
    assert points[0] == (0.0, 0.0) and points[-1] == (1.0, 1.0)
    fprs, tprs = zip(*points)
    assert list(fprs) == sorted(fprs) and list(tprs) == sorted(tprs)


def test_roc_needs_both_classes():
    with pytest.raises(ArgumentError):
        roc([0.1, 0.2], [1, 1])
    with pytest.raises(ArgumentError):
        roc([0.1, 0.2], [1])


def test_equal_error_rate_interpolates():
    # crossing between (0, 0.4) and (1, 1): gaps -0.6 and 1.0
    assert equal_error_detection_rate([(0.0, 0.0), (0.0, 0.4), (1.0, 1.0)]) == pytest.approx(0.4 + 0.375 * 0.6)


def test_recall_precision_curve():
    curve = recall_precision_curve([0.9, 0.8, 0.7, 0.6], [1, -1, 1, -1])
    assert curve == [(0.0, 0.5), (0.5, 0.5), (pytest.approx(1 / 3), 1.0), (0.5, 1.0)]
