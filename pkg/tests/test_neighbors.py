import numpy as np
import pytest

import oracles
from slicascade import metrics
from slicascade.neighbors import (
    KnnModel,
    _assign_folds,
    _folds_are_sound,
    _neighbour_order,
    _standardise_queries,
    fit_knn,
    format_selection_table,
    predict,
    predict_proba,
    select_k,
    selection_dict,
)
from slicascade.tabular import DataValidationError, FeatureMatrix, synth_dataset


def matrix(values, labels, names=None):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if names is None:
        names = tuple(f"f{i}" for i in range(values.shape[1]))
    return FeatureMatrix(values, np.asarray(labels, dtype=np.int64), names)


class TestFitKnn:
    def test_standardised_storage(self):
        data = matrix([0.0, 2.0, 4.0, 6.0], [0, 0, 1, 1])
        model = fit_knn(data, k=2)
        assert model.k == 2
        assert abs(model.train_values.mean()) < 1e-15
        assert abs(model.train_values.std() - 1.0) < 1e-15
        assert np.array_equal(model.train_labels, data.labels)

    def test_k_bounds(self):
        data = matrix([0.0, 2.0, 4.0, 6.0], [0, 0, 1, 1])
        with pytest.raises(ValueError):
            fit_knn(data, k=0)
        with pytest.raises(ValueError):
            fit_knn(data, k=5)
        fit_knn(data, k=4)

    def test_constant_column_named_in_error(self):
        values = np.column_stack([np.arange(4.0), np.full(4, 2.0)])
        data = matrix(values, [0, 1, 0, 1], ("alive", "flat"))
        with pytest.raises(ValueError) as err:
            fit_knn(data, k=1)
        assert "flat" in str(err.value)

    def test_single_class_rejected(self):
        data = matrix([1.0, 2.0, 3.0], [0, 0, 0])
        with pytest.raises(DataValidationError):
            fit_knn(data, k=1)


class TestPrediction:
    def test_training_row_is_its_own_neighbour(self):
        rng = np.random.default_rng(70)
        data = matrix(rng.normal(size=(30, 3)), rng.integers(0, 2, size=30))
        if len(set(data.labels.tolist())) < 2:
            pytest.skip("degenerate draw")
        model = fit_knn(data, k=1)
        for i in range(30):
            assert predict_proba(model, data.values[i]) == float(data.labels[i])
            assert predict(model, data.values[i]) == data.labels[i]

    def test_k_equal_n_gives_prevalence(self):
        data = matrix(np.arange(10.0), [1, 0, 0, 1, 0, 0, 0, 1, 0, 0])
        model = fit_knn(data, k=10)
        assert predict_proba(model, [4.2]) == 0.3
        assert predict(model, [4.2]) == 0

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(71)
        for trial in range(30):
            n = int(rng.integers(10, 60))
            v = int(rng.integers(1, 6))
            labels = rng.integers(0, 2, size=n)
            labels[:2] = [0, 1]
            data = matrix(rng.normal(size=(n, v)), labels)
            k = int(rng.integers(1, n + 1))
            model = fit_knn(data, k)
            queries = rng.normal(size=(8, v))
            Q, _ = _standardise_queries(model, queries)
            got_p = predict_proba(model, queries)
            got_y = predict(model, queries)
            for qi in range(8):
                want_p, _ = oracles.knn_proba_oracle(
                    model.train_values, model.train_labels, Q[qi], k
                )
                want_y = oracles.knn_predict_oracle(
                    model.train_values, model.train_labels, Q[qi], k
                )
                assert abs(got_p[qi] - want_p) < 1e-12
                assert got_y[qi] == want_y

    def test_kth_distance_tie_takes_lowest_row_index(self):
        # query sits on the middle duplicated value; rows 0 and 3 tie at
        # the second-shell distance, so k=3 must take row 0
        data = matrix([0.0, 1.0, 1.0, 2.0], [0, 1, 0, 1])
        model = fit_knn(data, k=3)
        proba = predict_proba(model, [1.0])
        assert proba == pytest.approx(1.0 / 3.0, abs=0)
        assert predict(model, [1.0]) == 0

    def test_split_vote_resolved_by_summed_distance(self):
        data = matrix([0.0, 3.0, 10.0, 13.0], [0, 0, 1, 1])
        model = fit_knn(data, k=2)
        # 6.4 is nearer the class-0 pair, 6.6 nearer the class-1 pair
        assert predict_proba(model, [6.4]) == 0.5
        assert predict(model, [6.4]) == 0
        assert predict(model, [6.6]) == 1

    def test_split_vote_with_equal_sums_goes_to_one(self):
        data = matrix([0.0, 1.0, 1.0, 2.0], [0, 1, 0, 1])
        model = fit_knn(data, k=2)
        # both neighbours of the centre query sit at distance zero
        assert predict_proba(model, [1.0]) == 0.5
        assert predict(model, [1.0]) == 1

    def test_affine_rescaling_changes_nothing(self):
        # integer data, 8 rows, power-of-two scale: the standardised
        # coordinates are bit-for-bit identical, so outputs must be too
        rng = np.random.default_rng(72)
        values = rng.integers(-10, 11, size=(8, 2)).astype(np.float64)
        labels = np.array([0, 1, 0, 1, 1, 0, 0, 1])
        queries = rng.integers(-10, 11, size=(5, 2)).astype(np.float64)
        a = fit_knn(matrix(values, labels), k=3)
        b = fit_knn(matrix(values * 4.0 + 3.0, labels), k=3)
        assert a.train_values.tobytes() == b.train_values.tobytes()
        pa = predict_proba(a, queries)
        pb = predict_proba(b, queries * 4.0 + 3.0)
        assert np.array_equal(pa, pb)
        assert np.array_equal(predict(a, queries), predict(b, queries * 4.0 + 3.0))

    def test_train_permutation_is_invisible(self):
        rng = np.random.default_rng(73)
        values = rng.normal(size=(40, 3))
        labels = rng.integers(0, 2, size=40)
        labels[:2] = [0, 1]
        perm = rng.permutation(40)
        a = fit_knn(matrix(values, labels), k=5)
        b = fit_knn(matrix(values[perm], labels[perm]), k=5)
        queries = rng.normal(size=(10, 3))
        assert np.array_equal(predict_proba(a, queries), predict_proba(b, queries))
        assert np.array_equal(predict(a, queries), predict(b, queries))

    def test_query_validation(self):
        data = matrix([0.0, 1.0, 2.0, 3.0], [0, 1, 0, 1])
        model = fit_knn(data, k=2)
        with pytest.raises(ValueError):
            predict_proba(model, np.zeros((2, 2)))
        with pytest.raises(ValueError):
            predict(model, [float("inf")])


class TestSelectK:
    def test_default_k_max_is_root_n(self):
        data = synth_dataset(730, 2, 2, seed=1)
        report = select_k(data, seed=1)
        assert report.candidates == tuple(range(1, 28))
        assert 1 <= report.chosen_k <= 27
        assert report.fold_seed == 1

    def test_cross_validation_matches_refit_oracle(self):
        data = synth_dataset(60, 2, 1, seed=3)
        report = select_k(data, k_max=6, folds=3, seed=5)
        assignment = _assign_folds(60, data.labels, 3, report.fold_seed, False)
        for f in range(3):
            held = np.flatnonzero(assignment == f)
            train = data.take(np.flatnonzero(assignment != f))
            y_held = data.labels[held].astype(np.float64)
            for k in report.candidates:
                sub_model = fit_knn(train, k)
                proba = predict_proba(sub_model, data.values[held])
                rmse, mae, r2 = metrics.regression_metrics(y_held, proba)
                got = report.fold_metrics[k - 1][f]
                assert got[0] == mae
                assert got[1] == rmse
                assert got[2] == r2

    def test_composite_is_the_plain_average(self):
        data = synth_dataset(80, 2, 1, seed=4)
        report = select_k(data, k_max=5, folds=4, seed=0)
        want = (report.mean_mae + report.mean_rmse + (1.0 - report.mean_r2)) / 3.0
        assert np.array_equal(report.composite, want)
        best = report.composite.min()
        first_best = int(np.flatnonzero(report.composite == best)[0]) + 1
        assert report.chosen_k == first_best

    def test_two_tight_clusters_choose_k_one(self):
        rng = np.random.default_rng(74)
        n = 60
        labels = np.repeat([0, 1], n // 2)
        values = rng.normal(scale=0.05, size=(n, 2))
        values[labels == 1] += 10.0
        data = matrix(values, labels)
        report = select_k(data, k_max=7, folds=5, seed=2)
        assert report.chosen_k == 1

    def test_determinism(self):
        data = synth_dataset(90, 2, 2, seed=6)
        a = select_k(data, k_max=6, folds=4, seed=9)
        b = select_k(data, k_max=6, folds=4, seed=9)
        assert a.chosen_k == b.chosen_k
        assert np.array_equal(a.composite, b.composite)

    def test_unsound_fold_redraws_once(self):
        # three positives over three folds: a sound assignment needs one
        # per fold, which a fair share of seeds fails to produce
        labels = np.zeros(12, dtype=np.int64)
        labels[[0, 1, 2]] = 1
        found = None
        for seed in range(400):
            first = _assign_folds(12, labels, 3, seed, False)
            second = _assign_folds(12, labels, 3, seed + 1, False)
            if (not _folds_are_sound(labels, first, 3)
                    and _folds_are_sound(labels, second, 3)):
                found = seed
                break
        assert found is not None
        rng = np.random.default_rng(75)
        data = matrix(rng.normal(size=(12, 2)), labels)
        report = select_k(data, k_max=3, folds=3, seed=found)
        assert report.fold_seed == found + 1

    def test_hopeless_labels_rejected(self):
        labels = np.zeros(8, dtype=np.int64)
        labels[0] = 1
        rng = np.random.default_rng(76)
        data = matrix(rng.normal(size=(8, 1)), labels)
        with pytest.raises(ValueError) as err:
            select_k(data, k_max=2, folds=2, seed=0)
        assert "single class" in str(err.value)

    def test_stratified_folds_balance_classes(self):
        labels = np.repeat([0, 1], 6)
        assignment = _assign_folds(12, labels, 3, 4, True)
        for f in range(3):
            part = labels[assignment == f]
            assert part.size == 4
            assert part.sum() == 2

    def test_k_max_capped_by_smallest_training_fold(self):
        data = synth_dataset(20, 1, 1, seed=0)
        with pytest.raises(ValueError):
            select_k(data, k_max=11, folds=2, seed=0)
        report = select_k(data, k_max=10, folds=2, seed=0)
        assert report.candidates[-1] == 10

    def test_parameter_validation(self):
        data = synth_dataset(30, 1, 1, seed=0)
        with pytest.raises(ValueError):
            select_k(data, folds=1)
        with pytest.raises(ValueError):
            select_k(data, folds=31)
        with pytest.raises(ValueError):
            select_k(data, k_max=0)


class TestReportViews:
    def test_table_marks_the_choice(self):
        data = synth_dataset(50, 2, 1, seed=7)
        report = select_k(data, k_max=4, folds=5, seed=1)
        text = format_selection_table(report)
        assert "<- chosen" in text
        assert text.count("\n") == 2 + len(report.candidates)

    def test_dict_round_trips_to_json(self):
        import json

        data = synth_dataset(50, 2, 1, seed=8)
        report = select_k(data, k_max=4, folds=5, seed=1)
        out = selection_dict(report)
        encoded = json.dumps(out, allow_nan=False)
        back = json.loads(encoded)
        assert back["chosen_k"] == report.chosen_k
        assert len(back["fold_metrics"]) == 4
        assert len(back["fold_metrics"][0]) == 5
