"""Rank statistics, order statistics and normal-tail arithmetic.

Conventions that the rest of the package depends on:

* Ranks are 1-based; tied values share the average of the positions they
  occupy (fractional ranks).
* Spearman correlation is the Pearson correlation of those fractional
  ranks, which on tie-free data equals 1 - 6 * sum(d^2) / (n (n^2 - 1)).
* The median of an even-length sample is the mean of the two middle order
  statistics.
* Other quartiles use the nearest-rank rule: the p-th percentile is
  x(ceil(n * p / 100)) of the sorted sample.  Only p in {25, 50, 75} is
  accepted, and p = 50 delegates to the median so the two conventions
  cannot disagree.
* Wald p-values are two-sided: p = 2 * (1 - Phi(|coef| / se)).
"""

import math

import numpy as np


class ConstantInputError(ValueError):
    """Raised when a correlation is requested for a constant vector."""


def fractional_ranks(x) -> np.ndarray:
    """Average-tie 1-based ranks of a 1-D sample."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"need a non-empty 1-D sample, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("ranks are undefined for non-finite values")
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    bounds = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1], True])
    ranks_sorted = np.empty(n, dtype=np.float64)
    for a, b in zip(bounds[:-1], bounds[1:]):
        # positions a+1 .. b (1-based) share their average rank
        ranks_sorted[a:b] = 0.5 * (a + 1 + b)
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = ranks_sorted
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation of two equally long samples.

    Computed as the Pearson correlation of fractional ranks, so ties are
    handled by averaging.  Raises :class:`ConstantInputError` when either
    input has fewer than two distinct values, since the correlation is
    undefined there.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(
            f"need two 1-D samples of equal length, got {x.shape} and {y.shape}"
        )
    if x.size < 2:
        raise ValueError(f"need at least 2 observations, got {x.size}")
    for label, v in (("x", x), ("y", y)):
        if np.unique(v).size < 2:
            raise ConstantInputError(
                f"spearman is undefined: input {label} is constant"
            )
    rx = fractional_ranks(x)
    ry = fractional_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    return float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))


def median(x) -> float:
    """Middle order statistic; mean of the two middle ones for even n."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"median needs a non-empty 1-D sample, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("median is undefined for non-finite values")
    s = np.sort(x, kind="stable")
    n = x.size
    if n % 2 == 1:
        return float(s[(n - 1) // 2])
    return float(0.5 * (s[n // 2 - 1] + s[n // 2]))


def quartile(x, p: int) -> float:
    """Nearest-rank percentile for p in {25, 50, 75}.

    p = 50 returns :func:`median`; the other two return the order statistic
    at ceil(n * p / 100), computed in exact integer arithmetic.
    """
    if p not in (25, 50, 75):
        raise ValueError(f"p must be one of 25, 50, 75; got {p}")
    if p == 50:
        return median(x)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"quartile needs a non-empty 1-D sample, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("quartile is undefined for non-finite values")
    s = np.sort(x, kind="stable")
    rank = -((-x.size * p) // 100)
    return float(s[rank - 1])


def std_normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"z must be finite, got {z}")
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def wald_p_value(coefficient: float, std_error: float) -> float:
    """Two-sided normal-approximation p-value for coefficient / std_error.

    Evaluated as erfc(|z| / sqrt(2)), which equals 2 * (1 - Phi(|z|))
    without cancellation in the far tail.  A result that underflows to
    zero is clamped to the smallest positive float so the value stays in
    (0, 1].
    """
    coefficient = float(coefficient)
    std_error = float(std_error)
    if math.isnan(std_error) or std_error <= 0.0:
        raise ValueError(f"std_error must be positive, got {std_error}")
    if not math.isfinite(coefficient):
        raise ValueError(f"coefficient must be finite, got {coefficient}")
    z = abs(coefficient) / std_error
    p = math.erfc(z / math.sqrt(2.0))
    if p == 0.0:
        return math.ulp(0.0)
    return p
