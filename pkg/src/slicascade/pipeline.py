"""The three-stage cascade: screen, refine, train, then evaluate.

Stage 1 fits a random forest on the training split and keeps a feature
only if its importance strictly exceeds a threshold (fixed, or derived
from the importance distribution as (median + upper quartile) / 2) and the
absolute Spearman correlation between the feature and the labels strictly
exceeds a floor.  Stage 2 runs logistic backward elimination on the
survivors.  Stage 3 picks the k-NN neighbourhood size by cross-validation
on the training split and fits the final classifier.  Evaluation happens
once, on the held-out test split.

Only training rows ever reach a fitting operation; the test split is
touched exclusively by the final evaluation.  All stage randomness comes
from seeds derived from one master seed under fixed labels ("split",
"forest", "folds"), so the cascade is reproducible end to end and stage
outputs can be regenerated independently.
"""

from dataclasses import dataclass

import numpy as np

from . import forest, logit, metrics, neighbors, stats, tabular
from .seeding import child_seed


class CascadeError(RuntimeError):
    """A stage failed; carries the report body assembled so far."""

    def __init__(self, stage, message, partial_body):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.partial_body = partial_body


@dataclass(frozen=True)
class StageOneCriteria:
    """Feature-keeping rule for the screening stage.

    Exactly one of ``importance_threshold`` (fixed cut) and
    ``threshold_rule`` (currently only ``"median-q3"``) must be set.  Both
    comparisons are strict.
    """

    importance_threshold: float | None = 6.0
    threshold_rule: str | None = None
    correlation_floor: float = 0.1

    def validate(self) -> None:
        fixed = self.importance_threshold is not None
        ruled = self.threshold_rule is not None
        if fixed == ruled:
            raise ValueError(
                "exactly one of importance_threshold and threshold_rule "
                "must be set"
            )
        if ruled and self.threshold_rule != "median-q3":
            raise ValueError(
                f"unknown threshold rule {self.threshold_rule!r}; "
                "expected 'median-q3'"
            )
        if self.correlation_floor < 0.0:
            raise ValueError(
                f"correlation_floor must be >= 0, got {self.correlation_floor}"
            )

    @property
    def mode(self) -> str:
        return "fixed" if self.importance_threshold is not None else self.threshold_rule


def resolve_threshold(criteria: StageOneCriteria, importances) -> float:
    """The numeric importance cut implied by the criteria."""
    criteria.validate()
    if criteria.importance_threshold is not None:
        return float(criteria.importance_threshold)
    imp = np.asarray(importances, dtype=np.float64)
    return 0.5 * (stats.median(imp) + stats.quartile(imp, 75))


def apply_stage1_rule(importances, correlations, criteria: StageOneCriteria):
    """Boolean keep mask and the resolved threshold."""
    imp = np.asarray(importances, dtype=np.float64)
    cor = np.asarray(correlations, dtype=np.float64)
    if imp.shape != cor.shape or imp.ndim != 1:
        raise ValueError("importances and correlations must be equally long vectors")
    threshold = resolve_threshold(criteria, imp)
    kept = (imp > threshold) & (np.abs(cor) > criteria.correlation_floor)
    return kept, threshold


@dataclass(frozen=True)
class Stage1Result:
    model: forest.Forest
    importances: np.ndarray
    correlations: np.ndarray
    kept_mask: np.ndarray
    threshold: float
    criteria: StageOneCriteria
    names: tuple

    @property
    def kept_names(self) -> tuple:
        return tuple(n for n, k in zip(self.names, self.kept_mask) if k)


def stage1_screen(train: tabular.FeatureMatrix, params: forest.ForestParams,
                  criteria: StageOneCriteria, threads: int = 1) -> Stage1Result:
    """Forest importances plus label correlations, filtered by the rule."""
    criteria.validate()
    model = forest.fit_forest(train, params, threads=threads)
    correlations = np.array([
        stats.spearman(train.values[:, j], train.labels)
        for j in range(train.n_features)
    ])
    kept, threshold = apply_stage1_rule(model.importance, correlations, criteria)
    return Stage1Result(
        model=model,
        importances=model.importance,
        correlations=correlations,
        kept_mask=kept,
        threshold=threshold,
        criteria=criteria,
        names=train.names,
    )


@dataclass(frozen=True)
class Stage2Result:
    model: logit.LogitModel
    trace: logit.EliminationTrace
    input_names: tuple
    table: tuple


def stage2_refine(train: tabular.FeatureMatrix, kept_names, alpha: float,
                  max_rounds: int | None = None) -> Stage2Result:
    """Backward elimination restricted to the stage-1 survivors."""
    if not kept_names:
        raise ValueError("no features survived stage 1")
    sub = train.select(kept_names)
    model, trace = logit.backward_eliminate(sub, alpha=alpha, max_rounds=max_rounds)
    return Stage2Result(
        model=model,
        trace=trace,
        input_names=tuple(kept_names),
        table=tuple(logit.wald_table(model)),
    )


@dataclass(frozen=True)
class Stage3Result:
    model: neighbors.KnnModel
    selection: neighbors.KSelectionReport
    features: tuple
    select_on_all: bool


def stage3_train(train: tabular.FeatureMatrix, surviving, seed: int,
                 k_max: int | None = None, folds: int = 5,
                 stratify: bool = False,
                 select_on_all: bool = False) -> Stage3Result:
    """Cross-validated k selection and the final k-NN fit.

    With ``select_on_all`` the classifier ignores the earlier stages and
    uses every column of the training table (an ablation switch); the
    default trains on the stage-2 survivors.
    """
    if select_on_all:
        features = tuple(train.names)
    else:
        features = tuple(surviving)
        if not features:
            raise ValueError("no surviving features to train on")
    sub = train.select(features)
    selection = neighbors.select_k(
        sub, k_max=k_max, folds=folds, seed=seed, stratify=stratify
    )
    model = neighbors.fit_knn(sub, selection.chosen_k)
    return Stage3Result(
        model=model,
        selection=selection,
        features=features,
        select_on_all=select_on_all,
    )


def evaluate_model(model: neighbors.KnnModel, test: tabular.FeatureMatrix):
    """Hard labels and probabilities on the test split, fully scored."""
    sub = test.select(model.feature_names)
    proba = neighbors.predict_proba(model, sub.values)
    pred = neighbors.predict(model, sub.values)
    report = metrics.evaluate(sub.labels, pred, scores=proba)
    points = metrics.roc_points(sub.labels, proba)
    return report, points


@dataclass(frozen=True)
class CascadeConfig:
    """Everything that defines one cascade run."""

    seed: int = 0
    train_fraction: float = 0.7
    stratify_split: bool = False
    n_trees: int = 500
    mtry: int | None = None
    min_leaf: int = 1
    max_depth: int | None = None
    importance_threshold: float | None = 6.0
    importance_rule: str | None = None
    correlation_floor: float = 0.1
    alpha: float = 0.05
    max_elimination_rounds: int | None = None
    k_max: int | None = None
    folds: int = 5
    stratify_cv: bool = False
    select_on_all: bool = False
    threads: int = 1

    def validate(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(
                f"train_fraction must lie strictly between 0 and 1, "
                f"got {self.train_fraction}"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(
                f"alpha must lie strictly between 0 and 1, got {self.alpha}"
            )
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        self.criteria().validate()

    def criteria(self) -> StageOneCriteria:
        return StageOneCriteria(
            importance_threshold=self.importance_threshold,
            threshold_rule=self.importance_rule,
            correlation_floor=self.correlation_floor,
        )

    def forest_params(self, forest_seed: int) -> forest.ForestParams:
        return forest.ForestParams(
            n_trees=self.n_trees,
            mtry=self.mtry,
            min_leaf=self.min_leaf,
            max_depth=self.max_depth,
            seed=forest_seed,
        )


@dataclass(frozen=True)
class CascadeReport:
    config: CascadeConfig
    seeds: dict
    split: tabular.SplitPair
    stage1: Stage1Result
    stage2: Stage2Result
    stage3: Stage3Result
    evaluation: metrics.EvaluationReport
    roc: tuple


def derive_seeds(master: int) -> dict:
    return {
        "split": child_seed(master, "split"),
        "forest": child_seed(master, "forest"),
        "folds": child_seed(master, "folds"),
    }


def split_section(pair: tabular.SplitPair, stratified: bool) -> dict:
    return {
        "n_total": pair.train.n_rows + pair.test.n_rows,
        "n_train": pair.train.n_rows,
        "n_test": pair.test.n_rows,
        "train_fraction": pair.train_fraction,
        "stratified": stratified,
    }


def stage1_section(result: Stage1Result) -> dict:
    return {
        "mode": result.criteria.mode,
        "importance_threshold": result.threshold,
        "correlation_floor": result.criteria.correlation_floor,
        "oob_error": result.model.oob_error,
        "features": [
            {
                "name": name,
                "importance": float(result.importances[j]),
                "spearman": float(result.correlations[j]),
                "kept": bool(result.kept_mask[j]),
            }
            for j, name in enumerate(result.names)
        ],
        "kept": list(result.kept_names),
    }


def stage2_section(result: Stage2Result) -> dict:
    return {
        "alpha": result.trace.alpha,
        "input_features": list(result.input_names),
        "rounds": [
            {"dropped": name, "p_value": p} for name, p in result.trace.rounds
        ],
        "surviving": list(result.trace.surviving),
        "stopped_early": result.trace.stopped_early,
        "iterations": result.model.iterations,
        "wald_table": [dict(row) for row in result.table],
    }


def stage3_section(result: Stage3Result) -> dict:
    return {
        "features": list(result.features),
        "select_on_all": result.select_on_all,
        "k_selection": neighbors.selection_dict(result.selection),
    }


def report_body(report: CascadeReport) -> dict:
    return {
        "seeds": report.seeds,
        "split": split_section(report.split, report.config.stratify_split),
        "stage1": stage1_section(report.stage1),
        "stage2": stage2_section(report.stage2),
        "stage3": stage3_section(report.stage3),
        "evaluation": metrics.report_dict(report.evaluation),
    }


def run_cascade(data: tabular.FeatureMatrix, config: CascadeConfig) -> CascadeReport:
    """Run screen, refine, train and evaluate in one deterministic pass.

    Any stage failure raises :class:`CascadeError` whose ``partial_body``
    holds the report sections completed before the failure.
    """
    config.validate()
    seeds = derive_seeds(config.seed)
    body = {"seeds": dict(seeds)}

    def fail(stage, exc):
        raise CascadeError(stage, str(exc), dict(body)) from exc

    try:
        pair = tabular.split(
            data, config.train_fraction, seeds["split"],
            stratify=config.stratify_split,
        )
    except Exception as exc:
        fail("split", exc)
    body["split"] = split_section(pair, config.stratify_split)

    try:
        s1 = stage1_screen(
            pair.train, config.forest_params(seeds["forest"]),
            config.criteria(), threads=config.threads,
        )
    except Exception as exc:
        fail("stage1", exc)
    body["stage1"] = stage1_section(s1)
    if not s1.kept_names:
        fail("stage1", ValueError("no features survived stage 1"))

    try:
        s2 = stage2_refine(
            pair.train, s1.kept_names, config.alpha,
            max_rounds=config.max_elimination_rounds,
        )
    except Exception as exc:
        fail("stage2", exc)
    body["stage2"] = stage2_section(s2)

    try:
        s3 = stage3_train(
            pair.train, s2.trace.surviving, seeds["folds"],
            k_max=config.k_max, folds=config.folds,
            stratify=config.stratify_cv, select_on_all=config.select_on_all,
        )
    except Exception as exc:
        fail("stage3", exc)
    body["stage3"] = stage3_section(s3)

    try:
        evaluation, roc = evaluate_model(s3.model, pair.test)
    except Exception as exc:
        fail("evaluation", exc)

    return CascadeReport(
        config=config,
        seeds=seeds,
        split=pair,
        stage1=s1,
        stage2=s2,
        stage3=s3,
        evaluation=evaluation,
        roc=tuple(roc),
    )
