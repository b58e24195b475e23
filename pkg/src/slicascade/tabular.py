"""Labeled numeric tables: loading, validation, splitting, synthesis.

The central type is :class:`FeatureMatrix`, an immutable bundle of a float64
value matrix, an int64 {0, 1} label vector and per-column names.  Label 1 is
the positive (impaired) class throughout the package, label 0 the typically
developing class.  Every loader and generator funnels through the same
validation so downstream code can rely on finite values, matching shapes
and unique column names.
"""

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .seeding import make_rng


class DataValidationError(ValueError):
    """Raised when a table violates the contracts documented here."""


@dataclass(frozen=True)
class FeatureMatrix:
    """Immutable feature table with binary labels.

    Invariants enforced at construction: ``values`` is a finite float64
    matrix with at least 2 rows and 1 column, ``labels`` holds only 0 and 1
    with one entry per row, and ``names`` are unique non-empty strings, one
    per column.  Presence of both classes is deliberately not required
    here; fitting operations check it themselves.
    """

    values: np.ndarray
    labels: np.ndarray
    names: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels)
        if values.ndim != 2:
            raise DataValidationError(
                f"values must be 2-dimensional, got ndim={values.ndim}"
            )
        n, v = values.shape
        if n < 2:
            raise DataValidationError(f"need at least 2 rows, got {n}")
        if v < 1:
            raise DataValidationError("need at least 1 feature column")
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise DataValidationError(
                f"non-finite value at row {bad[0] + 1}, column index {bad[1]}"
            )
        if labels.ndim != 1 or labels.shape[0] != n:
            raise DataValidationError(
                f"labels must be a vector of length {n}, got shape {labels.shape}"
            )
        if labels.dtype.kind not in "iub" or not np.isin(labels, (0, 1)).all():
            raise DataValidationError("labels must contain only 0 and 1")
        names = tuple(str(s) for s in self.names)
        if len(names) != v:
            raise DataValidationError(
                f"expected {v} column names, got {len(names)}"
            )
        if any(not s for s in names):
            raise DataValidationError("column names must be non-empty")
        if len(set(names)) != v:
            dupes = sorted({s for s in names if names.count(s) > 1})
            raise DataValidationError(f"duplicate column names: {dupes}")
        values = values.copy()
        values.setflags(write=False)
        labels = labels.astype(np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "names", names)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def class_counts(self) -> tuple:
        ones = int(self.labels.sum())
        return self.n_rows - ones, ones

    def select(self, names) -> "FeatureMatrix":
        """Project onto the given columns, preserving their given order."""
        idx = []
        for name in names:
            if name not in self.names:
                raise DataValidationError(f"unknown column name: {name!r}")
            idx.append(self.names.index(name))
        if not idx:
            raise DataValidationError("at least one column must be selected")
        return FeatureMatrix(self.values[:, idx], self.labels, tuple(names))

    def take(self, rows) -> "FeatureMatrix":
        """Select rows by index array."""
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureMatrix(self.values[rows], self.labels[rows], self.names)


def require_both_classes(data: FeatureMatrix, context: str) -> None:
    """Fitting operations need at least one row of each class."""
    c0, c1 = data.class_counts()
    if c0 == 0 or c1 == 0:
        raise DataValidationError(
            f"{context} requires both classes; got {c0} rows of class 0 "
            f"and {c1} of class 1"
        )


def load_csv(path, label_column: str) -> FeatureMatrix:
    """Read a numeric CSV with a header row into a :class:`FeatureMatrix`.

    All columns except ``label_column`` must parse as finite floats; the
    label column must hold exactly 0 or 1.  Error messages point at the
    offending cell using 1-based data-row numbers (the header is row 0).
    """
    if not os.path.exists(path):
        raise DataValidationError(f"file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"empty file: {path}") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DataValidationError(f"duplicate header columns: {dupes}")
        if label_column not in header:
            raise DataValidationError(
                f"label column {label_column!r} not found in header"
            )
        label_idx = header.index(label_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)
        if not feature_names:
            raise DataValidationError("no feature columns besides the label")
        rows = []
        labels = []
        for rownum, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise DataValidationError(
                    f"row {rownum} has {len(record)} cells, expected {len(header)}"
                )
            feats = []
            for i, cell in enumerate(record):
                name = header[i]
                if i == label_idx:
                    try:
                        lab = float(cell)
                    except ValueError:
                        raise DataValidationError(
                            f"label outside {{0, 1}} at row {rownum}: {cell!r}"
                        ) from None
                    if lab not in (0.0, 1.0):
                        raise DataValidationError(
                            f"label outside {{0, 1}} at row {rownum}: {cell!r}"
                        )
                    labels.append(int(lab))
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise DataValidationError(
                        f"non-numeric value at row {rownum}, column {name!r}: {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataValidationError(
                        f"non-finite value at row {rownum}, column {name!r}: {cell!r}"
                    )
                feats.append(value)
            rows.append(feats)
    if len(rows) < 2:
        raise DataValidationError(f"need at least 2 data rows, got {len(rows)}")
    return FeatureMatrix(
        np.array(rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        feature_names,
    )


def write_csv(data: FeatureMatrix, path, label_column: str = "group") -> None:
    """Write features plus a trailing label column; round-trips exactly."""
    if label_column in data.names:
        raise DataValidationError(
            f"label column {label_column!r} collides with a feature name"
        )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.names) + [label_column])
        for i in range(data.n_rows):
            row = [repr(float(v)) for v in data.values[i]]
            row.append(str(int(data.labels[i])))
            writer.writerow(row)


@dataclass(frozen=True)
class SplitPair:
    """A seeded train/test partition of one table."""

    train: FeatureMatrix
    test: FeatureMatrix
    train_indices: np.ndarray
    test_indices: np.ndarray
    train_fraction: float
    seed: int


def split(data: FeatureMatrix, train_fraction: float, seed: int,
          stratify: bool = False) -> SplitPair:
    """Random train/test split.

    The train side gets ``floor(train_fraction * n_rows)`` rows (the floor
    of the double-precision product).  With ``stratify`` the same floor rule
    is applied per class, which keeps class balance within one row.  Row
    order inside each side follows the shuffled order, and the same seed
    always yields the same partition.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataValidationError(
            f"train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )
    n = data.n_rows
    rng = make_rng(seed)
    if stratify:
        train_parts = []
        test_parts = []
        for cls in (0, 1):
            members = np.flatnonzero(data.labels == cls)
            members = members[rng.permutation(members.size)]
            take = math.floor(train_fraction * members.size)
            train_parts.append(members[:take])
            test_parts.append(members[take:])
        train_idx = np.concatenate(train_parts)
        test_idx = np.concatenate(test_parts)
    else:
        perm = rng.permutation(n)
        n_train = math.floor(train_fraction * n)
        train_idx = perm[:n_train]
        test_idx = perm[n_train:]
    if train_idx.size < 1 or test_idx.size < 1:
        raise DataValidationError(
            f"degenerate split: {train_idx.size} train rows and "
            f"{test_idx.size} test rows"
        )
    return SplitPair(
        train=data.take(train_idx),
        test=data.take(test_idx),
        train_indices=train_idx,
        test_indices=test_idx,
        train_fraction=train_fraction,
        seed=seed,
    )


def synth_dataset(n: int, informative: int, noise: int, seed: int,
                  shift: float = 1.5) -> FeatureMatrix:
    """Generate a two-class Gaussian table with known signal structure.

    Labels are fair Bernoulli draws.  Informative columns are standard
    normal plus ``shift`` for class-1 rows; noise columns are standard
    normal regardless of class.  Draw order is fixed (labels first, then
    columns left to right) so one seed pins the whole table.
    """
    if n < 20:
        raise DataValidationError(f"need n >= 20 to get both classes reliably, got {n}")
    if informative < 1:
        raise DataValidationError(f"need at least 1 informative column, got {informative}")
    if noise < 0:
        raise DataValidationError(f"noise column count must be >= 0, got {noise}")
    rng = make_rng(seed)
    labels = rng.integers(0, 2, size=n).astype(np.int64)
    columns = []
    names = []
    width_i = max(2, len(str(informative)))
    width_n = max(2, len(str(noise)))
    for j in range(informative):
        columns.append(rng.standard_normal(n) + shift * labels)
        names.append(f"signal_{j + 1:0{width_i}d}")
    for j in range(noise):
        columns.append(rng.standard_normal(n))
        names.append(f"noise_{j + 1:0{width_n}d}")
    return FeatureMatrix(np.column_stack(columns), labels, tuple(names))
