import json

import numpy as np
import pytest

import oracles
from slicascade.metrics import (
    BasicMetrics,
    ConfusionMatrix,
    auc_roc,
    basic_metrics,
    confusion,
    evaluate,
    format_evaluation,
    regression_metrics,
    report_dict,
    roc_points,
)
from slicascade.render import roc_csv


class TestConfusion:
    def test_simple_tally(self):
        cm = confusion([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
        assert (cm.tp, cm.fp, cm.tn, cm.fn) == (2, 1, 1, 1)
        assert cm.total == 5

    def test_validation(self):
        with pytest.raises(ValueError):
            confusion([1, 0], [1])
        with pytest.raises(ValueError):
            confusion([1, 2], [1, 0])
        with pytest.raises(ValueError):
            confusion([], [])


class TestBasicMetrics:
    def test_reference_counts(self):
        out = basic_metrics(ConfusionMatrix(tp=238, fp=4, tn=67, fn=5))
        assert abs(out.accuracy - 305 / 314) < 1e-12
        assert abs(out.precision - 238 / 242) < 1e-12
        assert abs(out.recall - 238 / 243) < 1e-12
        assert abs(out.neg_recall - 67 / 71) < 1e-12
        assert abs(out.f1 - 476 / 485) < 1e-12

    def test_undefined_rates_are_none(self):
        out = basic_metrics(ConfusionMatrix(tp=0, fp=0, tn=5, fn=0))
        assert out.accuracy == 1.0
        assert out.precision is None
        assert out.recall is None
        assert out.neg_recall == 1.0
        assert out.f1 is None

    def test_f1_none_when_precision_and_recall_both_zero(self):
        out = basic_metrics(ConfusionMatrix(tp=0, fp=3, tn=0, fn=2))
        assert out.precision == 0.0
        assert out.recall == 0.0
        assert out.f1 is None

    def test_f1_is_the_harmonic_mean(self):
        rng = np.random.default_rng(80)
        for trial in range(50):
            tp, fp, tn, fn = (int(v) for v in rng.integers(1, 50, size=4))
            out = basic_metrics(ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn))
            direct = 2 * tp / (2 * tp + fp + fn)
            assert abs(out.f1 - direct) < 1e-12
            assert abs(out.accuracy - (tp + tn) / (tp + fp + tn + fn)) < 1e-15

    def test_counts_validated(self):
        with pytest.raises(ValueError):
            basic_metrics(ConfusionMatrix(tp=-1, fp=0, tn=1, fn=0))
        with pytest.raises(ValueError):
            basic_metrics(ConfusionMatrix(tp=0, fp=0, tn=0, fn=0))


class TestAuc:
    def test_perfect_and_inverted(self):
        y = [0, 0, 1, 1]
        assert auc_roc(y, [0.1, 0.2, 0.8, 0.9]) == 1.0
        assert auc_roc(y, [0.9, 0.8, 0.2, 0.1]) == 0.0

    def test_constant_scores_give_half(self):
        assert auc_roc([0, 1, 0, 1], [3.0, 3.0, 3.0, 3.0]) == 0.5

    def test_exhaustive_pair_counting(self):
        rng = np.random.default_rng(81)
        for n in range(2, 13):
            for n1 in range(1, n):
                y = np.zeros(n, dtype=np.int64)
                y[rng.permutation(n)[:n1]] = 1
                # coarse grid ensures plenty of tied scores
                scores = rng.integers(0, 4, size=n).astype(np.float64)
                want = oracles.auc_pair_oracle(y.tolist(), scores.tolist())
                assert auc_roc(y, scores) == want

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(82)
        y = rng.integers(0, 2, size=40)
        y[:2] = [0, 1]
        scores = rng.integers(0, 8, size=40).astype(np.float64)
        assert auc_roc(y, scores) == auc_roc(y, np.exp(scores / 8.0))

    def test_complement_symmetry(self):
        rng = np.random.default_rng(83)
        y = rng.integers(0, 2, size=30)
        y[:2] = [0, 1]
        scores = rng.normal(size=30)
        assert abs(auc_roc(y, scores) + auc_roc(y, -scores) - 1.0) < 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            auc_roc([1, 1], [0.1, 0.2])
        with pytest.raises(ValueError):
            auc_roc([0, 1], [0.1, float("nan")])
        with pytest.raises(ValueError):
            auc_roc([0, 1, 0], [0.1, 0.2])


class TestRegressionMetrics:
    def test_perfect_predictions(self):
        rmse, mae, r2 = regression_metrics([0.0, 1.0, 0.0], [0.0, 1.0, 0.0])
        assert rmse == 0.0 and mae == 0.0 and r2 == 1.0

    def test_half_off_example(self):
        rmse, mae, r2 = regression_metrics([0.0, 1.0], [0.5, 0.5])
        assert rmse == 0.5 and mae == 0.5
        assert abs(r2) < 1e-15

    def test_mean_prediction_scores_zero(self):
        y = np.array([0.0, 0.0, 1.0, 1.0])
        rmse, mae, r2 = regression_metrics(y, np.full(4, y.mean()))
        assert r2 == 0.0

    def test_constant_truth_has_no_r2(self):
        rmse, mae, r2 = regression_metrics([1.0, 1.0, 1.0], [0.5, 1.0, 1.5])
        assert r2 is None
        assert abs(mae - 1.0 / 3.0) < 1e-15

    def test_rmse_dominates_mae(self):
        rng = np.random.default_rng(84)
        for trial in range(40):
            n = int(rng.integers(2, 30))
            y = rng.normal(size=n)
            y_hat = rng.normal(size=n)
            rmse, mae, r2 = regression_metrics(y, y_hat)
            assert rmse + 1e-12 >= mae

    def test_validation(self):
        with pytest.raises(ValueError):
            regression_metrics([1.0], [1.0])
        with pytest.raises(ValueError):
            regression_metrics([1.0, 2.0], [1.0])
        with pytest.raises(ValueError):
            regression_metrics([1.0, np.inf], [1.0, 2.0])


class TestRocPoints:
    def test_endpoints_and_monotonicity(self):
        rng = np.random.default_rng(85)
        y = rng.integers(0, 2, size=25)
        y[:2] = [0, 1]
        scores = rng.integers(0, 6, size=25).astype(np.float64)
        points = roc_points(y, scores)
        assert points[0] == (float("inf"), 0.0, 0.0)
        assert points[-1][1] == 1.0 and points[-1][2] == 1.0
        thresholds = [t for t, _, _ in points]
        assert all(a > b for a, b in zip(thresholds, thresholds[1:]))
        for (_, fa, ta), (_, fb, tb) in zip(points, points[1:]):
            assert fb >= fa and tb >= ta

    def test_point_count_tracks_distinct_scores(self):
        y = [0, 1, 0, 1]
        points = roc_points(y, [0.3, 0.3, 0.7, 0.7])
        assert len(points) == 3

    def test_trapezoid_area_equals_auc(self):
        rng = np.random.default_rng(86)
        for trial in range(30):
            n = int(rng.integers(4, 40))
            y = rng.integers(0, 2, size=n)
            y[:2] = [0, 1]
            scores = rng.integers(0, 5, size=n).astype(np.float64)
            points = roc_points(y, scores)
            fpr = [p[1] for p in points]
            tpr = [p[2] for p in points]
            area = float(np.trapezoid(tpr, fpr))
            assert abs(area - auc_roc(y, scores)) < 1e-12

    def test_csv_rendering(self):
        y = [0, 1]
        text = roc_csv(roc_points(y, [0.25, 0.75]))
        lines = text.strip().split("\n")
        assert lines[0] == "threshold,fpr,tpr"
        assert lines[1].startswith("inf,")
        assert len(lines) == 4


class TestEvaluate:
    def test_everything_recomputable(self):
        rng = np.random.default_rng(87)
        y = rng.integers(0, 2, size=60)
        y[:2] = [0, 1]
        scores = rng.random(60)
        pred = (scores > 0.5).astype(np.int64)
        report = evaluate(y, pred, scores)
        cm = report.confusion
        assert cm.total == 60
        again = basic_metrics(cm)
        assert report.accuracy == again.accuracy
        assert report.precision == again.precision
        assert report.f1 == again.f1
        assert report.auc == auc_roc(y, scores)
        rmse, mae, r2 = regression_metrics(y.astype(np.float64), scores)
        assert (report.rmse, report.mae, report.r2) == (rmse, mae, r2)

    def test_scores_optional(self):
        report = evaluate([0, 1, 1], [0, 1, 0])
        assert report.auc is None
        assert report.rmse is None
        assert report.n_rows == 3

    def test_dict_is_json_ready(self):
        rng = np.random.default_rng(88)
        y = rng.integers(0, 2, size=30)
        y[:2] = [0, 1]
        scores = rng.random(30)
        report = evaluate(y, (scores > 0.4).astype(int), scores)
        out = report_dict(report)
        back = json.loads(json.dumps(out, allow_nan=False))
        assert back["confusion"]["tp"] == report.confusion.tp
        assert back["accuracy"] == report.accuracy

    def test_none_survives_serialisation(self):
        report = evaluate([0, 1, 1], [0, 1, 0])
        out = report_dict(report)
        assert out["auc"] is None
        json.dumps(out, allow_nan=False)


class TestFormatting:
    def test_counts_and_rates_shown(self):
        report = evaluate([0, 1, 1, 0], [0, 1, 0, 0], [0.2, 0.9, 0.4, 0.1])
        text = format_evaluation(report)
        assert "true 1" in text and "pred 0" in text
        assert "accuracy" in text and "auc" in text

    def test_undefined_cells_spelled_out(self):
        report = evaluate([0, 0, 0, 1], [0, 0, 0, 0])
        text = format_evaluation(report)
        assert "undefined" in text
        assert "auc" not in text
