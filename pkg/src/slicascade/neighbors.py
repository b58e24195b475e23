"""k-nearest-neighbour classification on z-scored features.

Distances are squared Euclidean on standardised columns (train mean and
population standard deviation; queries reuse the train statistics).
Neighbour ranking uses a stable sort of distances, so ties at the k-th
distance resolve toward the lowest training-row index.  The predicted
probability is the fraction of class-1 labels among the k neighbours; the
hard label is 1 when that fraction exceeds one half, 0 when it falls
short, and an exact half is broken by the smaller summed distance to each
class's neighbours (equal sums go to class 1).

``select_k`` scores every candidate k by cross-validated agreement
between predicted probabilities and held-out labels, combining mean
absolute error, root-mean-square error and 1 - R^2 into a single composite
(their plain average).  The smallest k attains any tied best composite.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels, metrics
from .seeding import make_rng
from .tabular import FeatureMatrix, require_both_classes


@dataclass(frozen=True)
class KnnModel:
    """Standardised training set plus the neighbourhood size."""

    train_values: np.ndarray
    train_labels: np.ndarray
    k: int
    means: np.ndarray
    stds: np.ndarray
    feature_names: tuple


def fit_knn(data: FeatureMatrix, k: int) -> KnnModel:
    """Standardise the table and freeze it as the reference set."""
    require_both_classes(data, "fit_knn")
    if not 1 <= k <= data.n_rows:
        raise ValueError(f"k must lie in [1, {data.n_rows}], got {k}")
    means = data.values.mean(axis=0)
    stds = data.values.std(axis=0)
    flat = np.flatnonzero(stds == 0.0)
    if flat.size:
        raise ValueError(
            f"cannot standardise constant column {data.names[flat[0]]!r}"
        )
    z = (data.values - means) / stds
    z.setflags(write=False)
    return KnnModel(
        train_values=z,
        train_labels=data.labels,
        k=k,
        means=means,
        stds=stds,
        feature_names=data.names,
    )


def _standardise_queries(model: KnnModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.train_values.shape[1]:
        raise ValueError(
            f"expected {model.train_values.shape[1]} feature columns, "
            f"got shape {X.shape}"
        )
    if not np.isfinite(X).all():
        raise ValueError("queries contain non-finite values")
    return (X - model.means) / model.stds, single


def _neighbour_order(model: KnnModel, Q):
    dists = kernels.sq_dists(np.ascontiguousarray(Q),
                             np.ascontiguousarray(model.train_values))
    order = np.argsort(dists, axis=1, kind="stable")
    return dists, order


def predict_proba(model: KnnModel, X) -> np.ndarray:
    """Fraction of class-1 labels among the k nearest training rows."""
    Q, single = _standardise_queries(model, X)
    _, order = _neighbour_order(model, Q)
    top = order[:, :model.k]
    proba = model.train_labels[top].sum(axis=1) / model.k
    return proba[0] if single else proba


def predict(model: KnnModel, X) -> np.ndarray:
    """Hard labels with the documented split-vote tie break."""
    Q, single = _standardise_queries(model, X)
    dists, order = _neighbour_order(model, Q)
    top = order[:, :model.k]
    ones = model.train_labels[top].sum(axis=1)
    proba = ones / model.k
    labels = np.where(proba > 0.5, 1, 0).astype(np.int64)
    tied = np.flatnonzero(proba == 0.5)
    for row in tied:
        neigh = top[row]
        is_one = model.train_labels[neigh] == 1
        d = dists[row, neigh]
        sum_one = float(d[is_one].sum())
        sum_zero = float(d[~is_one].sum())
        labels[row] = 0 if sum_zero < sum_one else 1
    return labels[0] if single else labels


@dataclass(frozen=True)
class KSelectionReport:
    """Cross-validation record behind one chosen neighbourhood size.

    ``fold_metrics[k - 1][f]`` is the (mae, rmse, r2) triple for candidate
    ``k`` on fold ``f``; the mean arrays average over folds, and
    ``composite`` is (mae + rmse + (1 - r2)) / 3 of those means.
    ``fold_seed`` records the seed that actually produced the folds, which
    differs from the requested seed only when a single-class fold forced
    one redraw.
    """

    candidates: tuple
    mean_mae: np.ndarray
    mean_rmse: np.ndarray
    mean_r2: np.ndarray
    composite: np.ndarray
    chosen_k: int
    folds: int
    fold_seed: int
    fold_metrics: tuple


def _assign_folds(n, labels, folds, seed, stratify):
    rng = make_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    if stratify:
        for cls in (0, 1):
            members = np.flatnonzero(labels == cls)
            members = members[rng.permutation(members.size)]
            assignment[members] = np.arange(members.size) % folds
    else:
        perm = rng.permutation(n)
        for f, chunk in enumerate(np.array_split(perm, folds)):
            assignment[chunk] = f
    return assignment


def _folds_are_sound(labels, assignment, folds) -> bool:
    for f in range(folds):
        held = assignment == f
        for part in (held, ~held):
            part_labels = labels[part]
            if part_labels.size == 0:
                return False
            ones = int(part_labels.sum())
            if ones == 0 or ones == part_labels.size:
                return False
    return True


def select_k(data: FeatureMatrix, k_max: int | None = None, folds: int = 5,
             seed: int = 0, stratify: bool = False) -> KSelectionReport:
    """Pick the neighbourhood size by k-fold cross-validation.

    ``k_max`` defaults to floor(sqrt(n_rows)).  Every candidate
    k = 1..k_max is scored on each fold by comparing predicted
    probabilities against the held-out labels; candidates are ranked by
    the composite described on :class:`KSelectionReport`.  A fold whose
    held-out or retained part collapses to a single class triggers one
    redraw with seed + 1 before giving up.
    """
    require_both_classes(data, "select_k")
    n = data.n_rows
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if folds > n:
        raise ValueError(f"cannot make {folds} folds from {n} rows")
    if k_max is None:
        k_max = int(np.floor(np.sqrt(n)))
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    fold_seed = seed
    assignment = _assign_folds(n, data.labels, folds, fold_seed, stratify)
    if not _folds_are_sound(data.labels, assignment, folds):
        fold_seed = seed + 1
        assignment = _assign_folds(n, data.labels, folds, fold_seed, stratify)
        if not _folds_are_sound(data.labels, assignment, folds):
            raise ValueError(
                "a cross-validation fold contains a single class even "
                "after one redraw; use stratify or more data"
            )
    min_train = min(int((assignment != f).sum()) for f in range(folds))
    if k_max > min_train:
        raise ValueError(
            f"k_max={k_max} exceeds the smallest training fold ({min_train} rows)"
        )
    per_fold = np.empty((k_max, folds, 3), dtype=np.float64)
    for f in range(folds):
        held = assignment == f
        sub = data.take(np.flatnonzero(~held))
        reference = fit_knn(sub, k=1)
        Q, _ = _standardise_queries(reference, data.values[held])
        _, order = _neighbour_order(reference, Q)
        ordered_labels = sub.labels[order]
        prefix = np.cumsum(ordered_labels, axis=1)
        y_held = data.labels[held].astype(np.float64)
        for k in range(1, k_max + 1):
            proba = prefix[:, k - 1] / k
            rmse, mae, r2 = metrics.regression_metrics(y_held, proba)
            per_fold[k - 1, f] = (mae, rmse, r2)
    mean_mae = per_fold[:, :, 0].mean(axis=1)
    mean_rmse = per_fold[:, :, 1].mean(axis=1)
    mean_r2 = per_fold[:, :, 2].mean(axis=1)
    composite = (mean_mae + mean_rmse + (1.0 - mean_r2)) / 3.0
    chosen = int(np.argmin(composite)) + 1
    return KSelectionReport(
        candidates=tuple(range(1, k_max + 1)),
        mean_mae=mean_mae,
        mean_rmse=mean_rmse,
        mean_r2=mean_r2,
        composite=composite,
        chosen_k=chosen,
        folds=folds,
        fold_seed=fold_seed,
        fold_metrics=tuple(
            tuple(tuple(per_fold[k, f]) for f in range(folds))
            for k in range(k_max)
        ),
    )


def format_selection_table(report: KSelectionReport) -> str:
    """Aligned text table of the per-candidate cross-validation scores."""
    header = f"{'k':>4} {'mean_mae':>10} {'mean_rmse':>10} {'mean_r2':>10} {'composite':>10}"
    lines = [header, "-" * len(header)]
    for i, k in enumerate(report.candidates):
        marker = "  <- chosen" if k == report.chosen_k else ""
        lines.append(
            f"{k:>4} {report.mean_mae[i]:>10.5f} {report.mean_rmse[i]:>10.5f} "
            f"{report.mean_r2[i]:>10.5f} {report.composite[i]:>10.5f}{marker}"
        )
    return "\n".join(lines) + "\n"


def selection_dict(report: KSelectionReport) -> dict:
    """JSON-ready view of a :class:`KSelectionReport`."""
    return {
        "kind": "k_selection",
        "candidates": list(report.candidates),
        "mean_mae": [float(v) for v in report.mean_mae],
        "mean_rmse": [float(v) for v in report.mean_rmse],
        "mean_r2": [float(v) for v in report.mean_r2],
        "composite": [float(v) for v in report.composite],
        "chosen_k": report.chosen_k,
        "folds": report.folds,
        "fold_seed": report.fold_seed,
        "fold_metrics": [
            [[float(x) for x in triple] for triple in per_k]
            for per_k in report.fold_metrics
        ],
    }
