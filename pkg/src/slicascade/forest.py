"""Random forest of CART trees with impurity-drop feature importance.

Trees are grown to purity (subject to ``min_leaf`` and ``max_depth``) on
bootstrap samples drawn with replacement at full sample size.  Splits
minimise the class-product form of Gini impurity; candidate thresholds sit
at midpoints between consecutive distinct sorted values, rows with value
<= threshold go left, and ties are broken toward the lowest feature index
and then the lowest threshold.

Feature importance is the sum over a tree's internal nodes of
``gain * n_node / n_total`` (node size counted with bootstrap
multiplicity), averaged over trees.  Out-of-bag error is the
misclassification rate of majority votes over the trees that did not see a
row, restricted to rows left out by at least one tree.

Each tree owns an independent PCG64 stream derived from the forest seed
and the tree index, so results do not depend on how many worker threads
grow the trees.
"""

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .seeding import make_rng
from .tabular import FeatureMatrix, require_both_classes


def gini_impurity(probs) -> float:
    """Gini impurity 1 - sum(p^2) of a discrete distribution."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"need a non-empty probability vector, got shape {p.shape}")
    if (p < 0.0).any():
        raise ValueError("probabilities must be non-negative")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities must sum to 1, got {total}")
    return float(1.0 - np.dot(p, p))


def split_gain(values, labels, feature: int, threshold: float) -> float:
    """Impurity drop of one candidate split, in the class-product form.

    With p0/p1 the class fractions of a node A and its children AL
    (value <= threshold) and AR:

        gain = p0(A) p1(A)
             - (NL / N) p0(AL) p1(AL)
             - (NR / N) p0(AR) p1(AR)

    Raises if the node has fewer than 2 rows or either child is empty.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if values.ndim != 2 or labels.shape != (values.shape[0],):
        raise ValueError("values must be (n, v) with one label per row")
    n = values.shape[0]
    if n < 2:
        raise ValueError(f"a split needs at least 2 rows, got {n}")
    if not 0 <= feature < values.shape[1]:
        raise ValueError(f"feature index {feature} out of range")
    go_left = values[:, feature] <= threshold
    nl = int(go_left.sum())
    nr = n - nl
    if nl == 0 or nr == 0:
        raise ValueError(
            f"threshold {threshold} leaves an empty child ({nl} left, {nr} right)"
        )
    n1 = int(labels.sum())
    n0 = n - n1
    l1 = int(labels[go_left].sum())
    l0 = nl - l1
    r1 = n1 - l1
    r0 = n0 - l0
    parent = (n0 / n) * (n1 / n)
    wl = nl / n
    wr = nr / n
    return float(parent - wl * ((l0 / nl) * (l1 / nl)) - wr * ((r0 / nr) * (r1 / nr)))


@dataclass(frozen=True)
class ForestParams:
    """Forest hyperparameters; ``mtry=None`` means floor(sqrt(n_features))."""

    n_trees: int = 500
    mtry: int | None = None
    min_leaf: int = 1
    max_depth: int | None = None
    seed: int = 0

    def resolve_mtry(self, n_features: int) -> int:
        if self.mtry is None:
            return max(1, math.floor(math.sqrt(n_features)))
        return self.mtry

    def validate(self, n_features: int) -> None:
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1 or None, got {self.max_depth}")
        mtry = self.resolve_mtry(n_features)
        if not 1 <= mtry <= n_features:
            raise ValueError(
                f"mtry must lie in [1, {n_features}], got {mtry}"
            )


@dataclass(frozen=True)
class Tree:
    """One CART tree in flat-array form.

    ``feature[i] == -1`` marks node ``i`` as a leaf; otherwise ``left[i]``
    and ``right[i]`` are child indices for the value <= threshold and
    value > threshold branches.  ``counts[i]`` holds the (class 0, class 1)
    row counts that reached node ``i``, with bootstrap multiplicity.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]


@dataclass(frozen=True)
class Forest:
    trees: tuple
    bootstrap_masks: np.ndarray
    importance: np.ndarray
    oob_error: float
    params: ForestParams
    n_features: int


def _grow_tree(X, y, boot_rows, mtry, min_leaf, max_depth, rng):
    """Grow one tree; returns the tree and its importance contribution."""
    n_total = X.shape[0]
    n_features = X.shape[1]
    all_feats = np.arange(n_features, dtype=np.int64)
    feature = []
    threshold = []
    left = []
    right = []
    counts = []
    importance = np.zeros(n_features, dtype=np.float64)

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((0, 0))
        return len(feature) - 1

    root = new_node()
    stack = [(root, boot_rows, 0)]
    while stack:
        nid, rows, depth = stack.pop()
        c1 = int(y[rows].sum())
        c0 = rows.size - c1
        counts[nid] = (c0, c1)
        if c0 == 0 or c1 == 0:
            continue
        if rows.size < 2 * min_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if mtry < n_features:
            feats = np.sort(rng.choice(n_features, size=mtry, replace=False))
        else:
            feats = all_feats
        f, thr, gain = kernels.best_split(X, y, rows, feats, min_leaf)
        if f < 0 and mtry < n_features:
            # the sampled subset offered no admissible split; retry with
            # every feature so distinct rows always end up separable
            f, thr, gain = kernels.best_split(X, y, rows, all_feats, min_leaf)
        if f < 0:
            continue
        importance[f] += gain * (rows.size / n_total)
        go_left = X[rows, f] <= thr
        lid = new_node()
        rid = new_node()
        feature[nid] = int(f)
        threshold[nid] = float(thr)
        left[nid] = lid
        right[nid] = rid
        stack.append((rid, rows[~go_left], depth + 1))
        stack.append((lid, rows[go_left], depth + 1))
    tree = Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.array(counts, dtype=np.int64),
    )
    return tree, importance


def _tree_predict(tree: Tree, X) -> np.ndarray:
    """Leaf class votes for a batch of rows (level-synchronous descent)."""
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.flatnonzero(tree.feature[node] >= 0)
    while active.size:
        cur = node[active]
        go_left = X[active, tree.feature[cur]] <= tree.threshold[cur]
        nxt = np.where(go_left, tree.left[cur], tree.right[cur])
        node[active] = nxt
        active = active[tree.feature[nxt] >= 0]
    leaf_counts = tree.counts[node]
    return (leaf_counts[:, 1] > leaf_counts[:, 0]).astype(np.int64)


def fit_forest(data: FeatureMatrix, params: ForestParams,
               threads: int = 1) -> Forest:
    """Fit a forest on the full table.

    ``threads`` caps worker threads for tree growing; per-tree seed streams
    and in-order merging make the result independent of the thread count.
    """
    require_both_classes(data, "fit_forest")
    params.validate(data.n_features)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    X = data.values
    y = data.labels
    n = data.n_rows
    mtry = params.resolve_mtry(data.n_features)

    def one_tree(t: int):
        rng = make_rng(params.seed, f"tree:{t}")
        boot = rng.integers(0, n, size=n)
        tree, importance = _grow_tree(
            X, y, boot, mtry, params.min_leaf, params.max_depth, rng
        )
        mask = np.zeros(n, dtype=bool)
        mask[boot] = True
        return tree, importance, mask

    indices = range(params.n_trees)
    if threads == 1:
        grown = [one_tree(t) for t in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            grown = list(pool.map(one_tree, indices))
    trees = tuple(g[0] for g in grown)
    importance = np.add.reduce(np.stack([g[1] for g in grown]), axis=0)
    importance /= params.n_trees
    masks = np.stack([g[2] for g in grown])
    model = Forest(
        trees=trees,
        bootstrap_masks=masks,
        importance=importance,
        oob_error=math.nan,
        params=params,
        n_features=data.n_features,
    )
    return dataclasses.replace(model, oob_error=oob_error(model, data))


def _check_query(model: Forest, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(
            f"expected a vector of {model.n_features} features, got shape {x.shape}"
        )
    if not np.isfinite(x).all():
        raise ValueError("query contains non-finite values")
    return x


def vote_fractions(model: Forest, X) -> np.ndarray:
    """Fraction of trees voting class 1 for each query row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected (m, {model.n_features}) queries, got shape {X.shape}"
        )
    if not np.isfinite(X).all():
        raise ValueError("queries contain non-finite values")
    ones = np.zeros(X.shape[0], dtype=np.int64)
    for tree in model.trees:
        ones += _tree_predict(tree, X)
    return ones / len(model.trees)


def vote_fraction(model: Forest, x) -> float:
    """Fraction of trees voting class 1 for one query row."""
    return float(vote_fractions(model, _check_query(model, x)[None, :])[0])


def predict_forest(model: Forest, x) -> int:
    """Strict majority vote over trees; an exact tie returns class 0."""
    return 1 if vote_fraction(model, x) > 0.5 else 0


def _oob_votes(model: Forest, data: FeatureMatrix):
    """Per-row OOB vote tallies, tree by tree (generator)."""
    ones = np.zeros(data.n_rows, dtype=np.int64)
    total = np.zeros(data.n_rows, dtype=np.int64)
    for tree, mask in zip(model.trees, model.bootstrap_masks):
        out = np.flatnonzero(~mask)
        if out.size:
            ones[out] += _tree_predict(tree, data.values[out])
            total[out] += 1
        yield ones, total


def _vote_error(ones, total, labels) -> float:
    covered = total > 0
    if not covered.any():
        raise ValueError("no out-of-bag rows: every tree saw every row")
    pred = (ones[covered] / total[covered]) > 0.5
    return float(np.mean(pred != (labels[covered] == 1)))


def oob_error(model: Forest, data: FeatureMatrix) -> float:
    """Out-of-bag misclassification rate over rows left out at least once."""
    if data.n_features != model.n_features:
        raise ValueError("data does not match the model's feature count")
    if model.bootstrap_masks.shape != (len(model.trees), data.n_rows):
        raise ValueError("bootstrap masks do not match the data's row count")
    for ones, total in _oob_votes(model, data):
        pass
    return _vote_error(ones, total, data.labels)


def oob_curve(model: Forest, data: FeatureMatrix):
    """OOB error after each tree count 1..n_trees.

    Returns a list of ``(n_trees_used, error)`` pairs; entries where no row
    is covered yet carry ``None`` for the error.
    """
    if data.n_features != model.n_features:
        raise ValueError("data does not match the model's feature count")
    curve = []
    for t, (ones, total) in enumerate(_oob_votes(model, data), start=1):
        if (total > 0).any():
            curve.append((t, _vote_error(ones, total, data.labels)))
        else:
            curve.append((t, None))
    return curve


def summary_dict(model: Forest, feature_names=None) -> dict:
    """JSON-ready forest summary.

    Per-node tree structure and bootstrap masks are deliberately left out;
    the summary carries hyperparameters, importances and the OOB error.
    """
    if feature_names is not None and len(feature_names) != model.n_features:
        raise ValueError("feature_names length does not match the model")
    return {
        "kind": "forest",
        "n_trees": model.params.n_trees,
        "mtry": model.params.resolve_mtry(model.n_features),
        "min_leaf": model.params.min_leaf,
        "max_depth": model.params.max_depth,
        "seed": model.params.seed,
        "n_features": model.n_features,
        "feature_names": list(feature_names) if feature_names is not None else None,
        "importance": [float(v) for v in model.importance],
        "oob_error": model.oob_error,
        "n_nodes_total": int(sum(t.n_nodes for t in model.trees)),
    }
