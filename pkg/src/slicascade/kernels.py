"""Hot numeric kernels with switchable numba / numpy backends.

Two operations dominate runtime: the exhaustive split search inside tree
growing and the pairwise squared-distance matrix behind k-NN.  Both exist
here twice: a scalar-loop form compiled with numba, and a vectorised numpy
form used when numba is unavailable or explicitly disabled.

Backend selection is an import-time decision read from the environment
variable ``SLICASCADE_BACKEND``:

* ``auto`` (default): numba when importable, else numpy
* ``numba``: require numba, raise if it cannot be imported
* ``numpy``: force the vectorised fallback

The resolved choice is exposed as ``BACKEND``.

The two implementations are kept bit-identical, not merely close.  Each
floating-point quantity is produced by the same sequence of IEEE-754
operations in both: split gains come from exact integer prefix counts
pushed through a textually identical expression, candidate thresholds are
scanned in ascending order with a strictly-greater comparison (ties go to
the lowest threshold, then the lowest feature index as supplied by the
caller), and squared distances are accumulated feature by feature in
column order.  Tests assert exact equality of the outputs, which is what
makes the backend flag invisible to everything built on top.
"""

import os

import numpy as np

_ENV_VAR = "SLICASCADE_BACKEND"
_CHOICES = ("auto", "numba", "numpy")


def _resolve_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice not in _CHOICES:
        raise ValueError(
            f"{_ENV_VAR} must be one of {_CHOICES}, got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise RuntimeError(
                f"{_ENV_VAR}=numba but the numba package is not importable"
            ) from None
        return "numpy"
    return "numba"


def _best_split_scan(X, y, rows, feats, min_leaf):
    """Best binary split of one tree node, scalar-loop form.

    Returns ``(feature, threshold, gain)`` with ``feature == -1`` when no
    candidate satisfies the minimum-leaf constraint.  The gain is the
    class-product impurity drop: with p0/p1 the class fractions,

        gain = p0(A) p1(A)
             - (NL / N) p0(AL) p1(AL)
             - (NR / N) p0(AR) p1(AR)

    evaluated at the midpoint between consecutive distinct sorted values.
    Rows with value <= threshold go left.
    """
    n = rows.shape[0]
    labs_node = np.empty(n, dtype=np.int64)
    for i in range(n):
        labs_node[i] = y[rows[i]]
    n1 = 0
    for i in range(n):
        n1 += labs_node[i]
    n0 = n - n1
    best_f = np.int64(-1)
    best_thr = 0.0
    best_gain = -np.inf
    if n0 == 0 or n1 == 0:
        return best_f, best_thr, best_gain
    parent = (n0 / n) * (n1 / n)
    col = np.empty(n, dtype=np.float64)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for i in range(n):
            col[i] = X[rows[i], f]
        order = np.argsort(col, kind="mergesort")
        c1 = 0
        for i in range(n - 1):
            c1 += labs_node[order[i]]
            vi = col[order[i]]
            vj = col[order[i + 1]]
            if vi == vj:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            l1 = c1
            l0 = nl - l1
            r1 = n1 - l1
            r0 = n0 - l0
            wl = nl / n
            wr = nr / n
            gain = parent - wl * ((l0 / nl) * (l1 / nl)) - wr * ((r0 / nr) * (r1 / nr))
            if gain > best_gain:
                best_gain = gain
                best_thr = (vi + vj) * 0.5
                best_f = f
    return best_f, best_thr, best_gain


def _best_split_vec(X, y, rows, feats, min_leaf):
    """Vectorised twin of :func:`_best_split_scan`; identical outputs."""
    n = rows.shape[0]
    labs_node = y[rows]
    n1 = int(labs_node.sum())
    n0 = n - n1
    best_f = np.int64(-1)
    best_thr = 0.0
    best_gain = -np.inf
    if n0 == 0 or n1 == 0 or n < 2:
        return best_f, best_thr, best_gain
    parent = (n0 / n) * (n1 / n)
    sub = X[rows]
    nl = np.arange(1, n)
    nr = n - nl
    for f in feats:
        col = sub[:, f]
        order = np.argsort(col, kind="stable")
        vals = col[order]
        if vals[0] == vals[-1]:
            continue
        l1 = np.cumsum(labs_node[order])[:-1]
        l0 = nl - l1
        r1 = n1 - l1
        r0 = n0 - l0
        wl = nl / n
        wr = nr / n
        gain = parent - wl * ((l0 / nl) * (l1 / nl)) - wr * ((r0 / nr) * (r1 / nr))
        valid = (vals[:-1] != vals[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        gain = np.where(valid, gain, -np.inf)
        pos = int(np.argmax(gain))
        if gain[pos] > best_gain:
            best_gain = float(gain[pos])
            best_thr = (vals[pos] + vals[pos + 1]) * 0.5
            best_f = np.int64(f)
    return best_f, best_thr, best_gain


def _sq_dists_scan(Q, T):
    """All pairwise squared Euclidean distances, scalar-loop form."""
    nq = Q.shape[0]
    nt = T.shape[0]
    nv = Q.shape[1]
    out = np.zeros((nq, nt), dtype=np.float64)
    for v in range(nv):
        for i in range(nq):
            qv = Q[i, v]
            for j in range(nt):
                d = qv - T[j, v]
                out[i, j] = out[i, j] + d * d
    return out


def _sq_dists_vec(Q, T):
    """Vectorised twin of :func:`_sq_dists_scan`; identical outputs."""
    out = np.zeros((Q.shape[0], T.shape[0]), dtype=np.float64)
    for v in range(Q.shape[1]):
        d = Q[:, v][:, None] - T[:, v][None, :]
        out = out + d * d
    return out


BACKEND = _resolve_backend()

if BACKEND == "numba":
    import numba

    best_split = numba.njit(cache=True, nogil=True)(_best_split_scan)
    sq_dists = numba.njit(cache=True, nogil=True)(_sq_dists_scan)
else:
    best_split = _best_split_vec
    sq_dists = _sq_dists_vec


def warm_up() -> None:
    """Trigger JIT compilation so later calls run at full speed."""
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 1.0], [3.0, 0.0]])
    y = np.array([0, 0, 1, 1], dtype=np.int64)
    rows = np.arange(4, dtype=np.int64)
    feats = np.arange(2, dtype=np.int64)
    best_split(X, y, rows, feats, 1)
    sq_dists(X[:2], X)
