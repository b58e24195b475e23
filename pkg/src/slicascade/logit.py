"""Binary logistic regression with Wald statistics and backward elimination.

Fitting runs Newton iterations (iteratively reweighted least squares) on
z-scored features, which keeps the information matrix well conditioned,
then maps coefficients and their covariance back to the original scale:
with per-feature mean mu_v and standard deviation sigma_v,

    beta_v = beta_std_v / sigma_v
    beta_0 = beta_std_0 - sum_v beta_std_v * mu_v / sigma_v

and the covariance transforms through the same linear map.  Standard
errors come from the inverse observed information, z values are
coefficient / std_error, and p-values are two-sided normal tails.

Constant (zero-variance) columns cannot be standardised and carry no
signal, so they are excluded from the optimisation and reported with
coefficient 0, infinite standard error and p-value 1.

Backward elimination repeatedly refits, dropping the single worst feature
whose p-value exceeds the significance level, until every surviving
feature is significant.  The intercept is never a candidate for removal.
"""

from dataclasses import dataclass

import numpy as np

from .stats import wald_p_value
from .tabular import FeatureMatrix, require_both_classes


class NonConvergenceError(RuntimeError):
    """Newton iterations failed to converge (often perfect separation)."""


class SingularInformationError(RuntimeError):
    """The observed information matrix is singular (collinear features)."""


class AllFeaturesEliminatedError(RuntimeError):
    """Backward elimination removed every feature."""

    def __init__(self, message, rounds):
        super().__init__(message)
        self.rounds = rounds


@dataclass(frozen=True)
class LogitModel:
    """Fitted model; index 0 of each vector is the intercept.

    ``coefficients``, ``std_errors``, ``z_values`` and ``p_values`` all
    have length ``1 + len(feature_names)`` and live on the original
    feature scale.
    """

    feature_names: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    z_values: np.ndarray
    p_values: np.ndarray
    converged: bool
    iterations: int


def _sigmoid(eta):
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def class_probabilities(model: LogitModel, values) -> np.ndarray:
    """Per-row [P(class 0), P(class 1)] for rows on the original scale."""
    p1 = predict_proba(model, values)
    return np.column_stack([1.0 - p1, p1])


def predict_proba(model: LogitModel, values) -> np.ndarray:
    """P(class 1) for rows whose columns match ``model.feature_names``."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    if values.shape[1] != len(model.feature_names):
        raise ValueError(
            f"expected {len(model.feature_names)} columns, got {values.shape[1]}"
        )
    if not np.isfinite(values).all():
        raise ValueError("values contain non-finite entries")
    eta = model.coefficients[0] + values @ model.coefficients[1:]
    return _sigmoid(eta)


def fit_logit(data: FeatureMatrix, max_iter: int = 100,
              tol: float = 1e-8) -> LogitModel:
    """Maximum-likelihood fit by Newton iteration.

    Convergence is declared when the largest coefficient update drops
    below ``tol``.  If the iteration cap is reached first the model is
    returned with ``converged=False``.  Coefficients running past 1e3
    while the gradient is still large raise
    :class:`NonConvergenceError` (the classic perfect-separation
    signature); an exactly singular information matrix raises
    :class:`SingularInformationError` unless it follows that runaway
    growth, in which case separation is reported instead.
    """
    require_both_classes(data, "fit_logit")
    n = data.n_rows
    y = data.labels.astype(np.float64)
    mu = data.values.mean(axis=0)
    sigma = data.values.std(axis=0)
    if n <= data.n_features + 1:
        raise ValueError(
            f"need more rows than parameters: {n} rows for "
            f"{data.n_features + 1} parameters"
        )
    active = sigma > 0.0
    Z = (data.values[:, active] - mu[active]) / sigma[active]
    k = int(active.sum())
    design = np.column_stack([np.ones(n), Z])
    beta = np.zeros(k + 1)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = _sigmoid(design @ beta)
        grad = design.T @ (y - p)
        runaway = np.max(np.abs(beta)) > 1e3
        if runaway and np.max(np.abs(grad)) > 1e-6:
            raise NonConvergenceError(
                "coefficients diverged with a non-vanishing gradient; "
                "the classes are likely perfectly separated"
            )
        w = p * (1.0 - p)
        info = design.T @ (design * w[:, None])
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            # a weight of exactly zero means some fitted probability
            # saturated at 0 or 1, i.e. the coefficients ran off toward
            # infinity: that is separation, not collinearity
            if runaway or not w.all():
                raise NonConvergenceError(
                    "information matrix collapsed after coefficients "
                    "diverged; the classes are likely perfectly separated"
                ) from None
            raise SingularInformationError(
                "information matrix is singular; features are collinear"
            ) from None
        if not np.isfinite(step).all():
            raise SingularInformationError(
                "information matrix is numerically singular; "
                "features are collinear"
            )
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    p = _sigmoid(design @ beta)
    w = p * (1.0 - p)
    info = design.T @ (design * w[:, None])
    try:
        cov_std = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise SingularInformationError(
            "information matrix is singular at the optimum"
        ) from None

    # undo the z-scoring: an affine map on coefficients, a congruence on
    # the covariance
    transform = np.zeros((k + 1, k + 1))
    transform[0, 0] = 1.0
    sub = np.flatnonzero(active)
    for out_pos, col in enumerate(sub, start=1):
        transform[0, out_pos] = -mu[col] / sigma[col]
        transform[out_pos, out_pos] = 1.0 / sigma[col]
    beta_active = transform @ beta
    cov_orig = transform @ cov_std @ transform.T
    diag = np.diag(cov_orig)
    if not (np.isfinite(diag).all() and (diag > 0.0).all()):
        raise SingularInformationError(
            "covariance diagonal is not positive; features are collinear"
        )
    se_active = np.sqrt(diag)

    v = data.n_features
    coefficients = np.zeros(v + 1)
    std_errors = np.full(v + 1, np.inf)
    coefficients[0] = beta_active[0]
    std_errors[0] = se_active[0]
    for out_pos, col in enumerate(sub, start=1):
        coefficients[col + 1] = beta_active[out_pos]
        std_errors[col + 1] = se_active[out_pos]
    z_values = np.zeros(v + 1)
    p_values = np.ones(v + 1)
    for i in range(v + 1):
        if np.isfinite(std_errors[i]):
            z_values[i] = coefficients[i] / std_errors[i]
        p_values[i] = wald_p_value(coefficients[i], std_errors[i])
    return LogitModel(
        feature_names=data.names,
        coefficients=coefficients,
        std_errors=std_errors,
        z_values=z_values,
        p_values=p_values,
        converged=converged,
        iterations=iterations,
    )


def wald_table(model: LogitModel):
    """Rows of (name, estimate, std_error, z, p); intercept first.

    Raises on a model whose fit did not converge, since the standard
    errors would be meaningless.
    """
    if not model.converged:
        raise NonConvergenceError(
            "refusing to tabulate a fit that did not converge"
        )
    rows = []
    names = ("(intercept)",) + tuple(model.feature_names)
    for i, name in enumerate(names):
        rows.append({
            "name": name,
            "estimate": float(model.coefficients[i]),
            "std_error": float(model.std_errors[i]),
            "z": float(model.z_values[i]),
            "p": float(model.p_values[i]),
        })
    return rows


def format_wald_table(rows) -> str:
    """Fixed-width text rendering of :func:`wald_table` rows."""
    header = f"{'term':<28} {'estimate':>14} {'std_error':>14} {'z':>10} {'p':>12}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['name']:<28} {row['estimate']:>14.6f} "
            f"{row['std_error']:>14.6f} {row['z']:>10.3f} {row['p']:>12.3e}"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EliminationTrace:
    """What backward elimination did: one (name, p) pair per dropped round."""

    rounds: tuple
    surviving: tuple
    alpha: float
    stopped_early: bool


def backward_eliminate(data: FeatureMatrix, alpha: float = 0.05,
                       max_rounds: int | None = None,
                       max_iter: int = 100, tol: float = 1e-8):
    """Drop the worst insignificant feature per round until all survive.

    Each round refits on the remaining features; if the largest p-value
    exceeds ``alpha`` that single feature is removed (ties broken toward
    the earliest column) and the loop repeats.  Returns the final
    :class:`LogitModel` and an :class:`EliminationTrace`.  Removing the
    last feature raises :class:`AllFeaturesEliminatedError`;
    ``max_rounds`` stops early and flags the trace instead.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    if max_rounds is not None and max_rounds < 0:
        raise ValueError(f"max_rounds must be >= 0 or None, got {max_rounds}")
    current = list(data.names)
    rounds = []
    while True:
        model = fit_logit(data.select(current), max_iter=max_iter, tol=tol)
        if not model.converged:
            raise NonConvergenceError(
                f"fit on {len(current)} features did not converge within "
                f"{max_iter} iterations"
            )
        feature_p = model.p_values[1:]
        worst = int(np.argmax(feature_p))
        if feature_p[worst] <= alpha:
            trace = EliminationTrace(tuple(rounds), tuple(current), alpha, False)
            return model, trace
        if max_rounds is not None and len(rounds) >= max_rounds:
            trace = EliminationTrace(tuple(rounds), tuple(current), alpha, True)
            return model, trace
        rounds.append((current[worst], float(feature_p[worst])))
        del current[worst]
        if not current:
            raise AllFeaturesEliminatedError(
                "all features eliminated: every candidate exceeded the "
                f"significance level {alpha}",
                tuple(rounds),
            )
