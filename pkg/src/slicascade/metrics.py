"""Evaluation metrics for binary classifiers and probability scores.

Class 1 (impaired) is the positive class everywhere.  Rates whose
denominator is zero are reported as None rather than NaN, so JSON output
stays clean and callers cannot silently propagate undefined numbers.

The AUC is the rank-sum (Mann-Whitney) statistic computed from fractional
ranks of the scores, which credits ties between a positive and a negative
score with one half, exactly matching exhaustive pair counting.
"""

from dataclasses import dataclass

import numpy as np

from .stats import fractional_ranks


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with class 1 positive: tp + fn positives, tn + fp negatives."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class BasicMetrics:
    """Rates derived from one confusion matrix; None where undefined."""

    accuracy: float
    precision: float | None
    recall: float | None
    neg_recall: float | None
    f1: float | None


def _check_binary(v, name):
    v = np.asarray(v)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty vector, got shape {v.shape}")
    if not np.isin(v, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return v.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionMatrix:
    """Tally a prediction vector against truth."""
    y_true = _check_binary(y_true, "y_true")
    y_pred = _check_binary(y_pred, "y_pred")
    if y_true.shape != y_pred.shape:
        raise ValueError(
            f"length mismatch: {y_true.shape[0]} true vs {y_pred.shape[0]} predicted"
        )
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    tn = int(((y_true == 0) & (y_pred == 0)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def basic_metrics(cm: ConfusionMatrix) -> BasicMetrics:
    """Accuracy, precision, recall, negative-class recall and F1.

    F1 is the harmonic mean of precision and recall; it is None whenever
    either ingredient is undefined or both are zero.
    """
    for field in ("tp", "fp", "tn", "fn"):
        if getattr(cm, field) < 0:
            raise ValueError(f"negative count {field}={getattr(cm, field)}")
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else None
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    neg_recall = cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp > 0 else None
    if precision is None or recall is None or precision + recall == 0.0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return BasicMetrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        neg_recall=neg_recall,
        f1=f1,
    )


def auc_roc(y_true, scores) -> float:
    """Area under the ROC curve by the rank-sum statistic.

    Equals (number of positive-negative score pairs ordered correctly,
    counting ties as one half) divided by the number of such pairs.
    Requires both classes and finite scores.
    """
    y_true = _check_binary(y_true, "y_true")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != y_true.shape:
        raise ValueError(
            f"length mismatch: {y_true.shape[0]} labels vs {scores.shape[0]} scores"
        )
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    n1 = int(y_true.sum())
    n0 = y_true.size - n1
    if n0 == 0 or n1 == 0:
        raise ValueError("AUC needs at least one row of each class")
    ranks = fractional_ranks(scores)
    rank_sum = float(ranks[y_true == 1].sum())
    return (rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n0)


def regression_metrics(y_true, y_hat):
    """(rmse, mae, r2) of real-valued predictions.

    R^2 is 1 - SSE / SST against the mean of ``y_true``; it is None when
    ``y_true`` is constant, and exactly 0 when the predictions are that
    constant mean.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y_true.ndim != 1 or y_true.size < 2 or y_true.shape != y_hat.shape:
        raise ValueError(
            f"need two equally long vectors with n >= 2, got "
            f"{y_true.shape} and {y_hat.shape}"
        )
    if not (np.isfinite(y_true).all() and np.isfinite(y_hat).all()):
        raise ValueError("regression metrics need finite inputs")
    err = y_hat - y_true
    rmse = float(np.sqrt(np.mean(err * err)))
    mae = float(np.mean(np.abs(err)))
    centered = y_true - y_true.mean()
    sst = float(np.dot(centered, centered))
    if sst == 0.0:
        return rmse, mae, None
    sse = float(np.dot(err, err))
    return rmse, mae, 1.0 - sse / sst


def roc_points(y_true, scores):
    """ROC polyline vertices as (threshold, fpr, tpr) triples.

    Predictions at threshold t are ``score >= t``.  The first row uses an
    infinite threshold (nothing predicted positive); thresholds then walk
    the distinct scores downward, ending at (1, 1).
    """
    y_true = _check_binary(y_true, "y_true")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != y_true.shape:
        raise ValueError("labels and scores must have equal length")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    n1 = int(y_true.sum())
    n0 = y_true.size - n1
    if n0 == 0 or n1 == 0:
        raise ValueError("an ROC curve needs at least one row of each class")
    points = [(float("inf"), 0.0, 0.0)]
    for t in np.unique(scores)[::-1]:
        pred = scores >= t
        tp = int((pred & (y_true == 1)).sum())
        fp = int((pred & (y_true == 0)).sum())
        points.append((float(t), fp / n0, tp / n1))
    return points


@dataclass(frozen=True)
class EvaluationReport:
    """One classifier evaluation: counts, derived rates, optional scores.

    The score-based entries (auc, rmse, mae, r2) are None when no scores
    were supplied.  Every rate is recomputable from ``confusion`` and the
    stored vectors; nothing here is free-floating.
    """

    confusion: ConfusionMatrix
    accuracy: float
    precision: float | None
    recall: float | None
    neg_recall: float | None
    f1: float | None
    auc: float | None
    rmse: float | None
    mae: float | None
    r2: float | None
    n_rows: int


def evaluate(y_true, y_pred, scores=None) -> EvaluationReport:
    """Assemble the full report for hard labels and optional scores.

    The regression block compares scores (typically predicted
    probabilities) against the 0/1 labels.
    """
    cm = confusion(y_true, y_pred)
    rates = basic_metrics(cm)
    auc = rmse = mae = r2 = None
    if scores is not None:
        auc = auc_roc(y_true, scores)
        rmse, mae, r2 = regression_metrics(
            np.asarray(y_true, dtype=np.float64), scores
        )
    return EvaluationReport(
        confusion=cm,
        accuracy=rates.accuracy,
        precision=rates.precision,
        recall=rates.recall,
        neg_recall=rates.neg_recall,
        f1=rates.f1,
        auc=auc,
        rmse=rmse,
        mae=mae,
        r2=r2,
        n_rows=cm.total,
    )


def format_evaluation(report: EvaluationReport) -> str:
    """Aligned text rendering: the count matrix, then the derived rates."""
    cm = report.confusion
    def cell(value):
        return "undefined" if value is None else f"{value:.5f}"
    lines = [
        f"{'':<12} {'pred 1':>8} {'pred 0':>8}",
        f"{'true 1':<12} {cm.tp:>8} {cm.fn:>8}",
        f"{'true 0':<12} {cm.fp:>8} {cm.tn:>8}",
        "",
    ]
    rows = [
        ("accuracy", report.accuracy),
        ("precision", report.precision),
        ("recall", report.recall),
        ("neg_recall", report.neg_recall),
        ("f1", report.f1),
        ("auc", report.auc),
        ("rmse", report.rmse),
        ("mae", report.mae),
        ("r2", report.r2),
    ]
    for name, value in rows:
        if name in ("auc", "rmse", "mae", "r2") and value is None:
            continue
        lines.append(f"{name:<12} {cell(value):>10}")
    return "\n".join(lines) + "\n"


def report_dict(report: EvaluationReport) -> dict:
    """JSON-ready view of an :class:`EvaluationReport`."""
    return {
        "kind": "evaluation",
        "n_rows": report.n_rows,
        "confusion": {
            "tp": report.confusion.tp,
            "fp": report.confusion.fp,
            "tn": report.confusion.tn,
            "fn": report.confusion.fn,
        },
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "neg_recall": report.neg_recall,
        "f1": report.f1,
        "auc": report.auc,
        "rmse": report.rmse,
        "mae": report.mae,
        "r2": report.r2,
    }
