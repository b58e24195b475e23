"""Three-stage cascade for binary screening of numeric transcript features.

Stage 1 screens features with random-forest importance and Spearman
correlation against the labels, stage 2 refines the survivors by logistic
backward elimination on Wald p-values, and stage 3 classifies with a
cross-validated k-nearest-neighbour model.  Class 1 is the positive
(impaired) class throughout.

The heavy kernels run through numba when available; set
``SLICASCADE_BACKEND=numpy`` to force the pure-numpy fallback (results
are bit-identical either way).
"""

__version__ = "0.1.0"

from . import forest, kernels, logit, metrics, neighbors, pipeline, stats, tabular
from .forest import ForestParams, fit_forest, gini_impurity, oob_error, predict_forest, split_gain
from .logit import backward_eliminate, fit_logit, wald_table
from .metrics import auc_roc, basic_metrics, confusion, evaluate, regression_metrics
from .neighbors import fit_knn, select_k
from .pipeline import CascadeConfig, StageOneCriteria, run_cascade
from .stats import median, quartile, spearman, std_normal_cdf, wald_p_value
from .tabular import FeatureMatrix, load_csv, split, synth_dataset, write_csv

__all__ = [
    "__version__",
    "forest", "kernels", "logit", "metrics", "neighbors", "pipeline",
    "stats", "tabular",
    "ForestParams", "fit_forest", "gini_impurity", "oob_error",
    "predict_forest", "split_gain",
    "backward_eliminate", "fit_logit", "wald_table",
    "auc_roc", "basic_metrics", "confusion", "evaluate", "regression_metrics",
    "fit_knn", "select_k",
    "CascadeConfig", "StageOneCriteria", "run_cascade",
    "median", "quartile", "spearman", "std_normal_cdf", "wald_p_value",
    "FeatureMatrix", "load_csv", "split", "synth_dataset", "write_csv",
]
