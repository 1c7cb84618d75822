"""Hot loops of the double CUSUM scan.

Every kernel exists twice: a jitted loop version (``*_nb``) and a vectorised
numpy version (``*_np``).  The public names at the bottom of the module are
bound to one or the other according to :data:`panelseg._accel.BACKEND`.
Both versions perform the same floating point operations in the same order,
so results agree to the last few ulps and argmax tie-breaks coincide.

Conventions: ``x`` is an ``(n, T)`` float64 array, window bounds ``s`` and
``e`` are 0-based and inclusive, and CUSUM column ``k - 1`` of a window holds
the statistic at split ``b = s + k - 1`` (``k = 1 .. N - 1``, ``N = e - s + 1``).
``W`` is a ``(K, n)`` matrix of per-cardinality weights, one row per
statistic evaluated in the same pass, so that ``D_m = W[k, m - 1] * diff_m``.
"""
import numpy as np

from ._accel import BACKEND, njit


@njit
def _cusum_block_nb(x, s, e):
    n = x.shape[0]
    N = e - s + 1
    out = np.empty((n, N - 1))
    for j in range(n):
        tot = 0.0
        for t in range(s, e + 1):
            tot += x[j, t]
        mean = tot / N
        acc = 0.0
        for k in range(1, N):
            acc += x[j, s + k - 1]
            out[j, k - 1] = np.sqrt(N / (k * (N - k))) * (acc - k * mean)
    return out


def _cusum_block_np(x, s, e):
    N = e - s + 1
    S = np.cumsum(x[:, s:e + 1], axis=1)
    mean = S[:, -1] / N
    k = np.arange(1, N, dtype=np.float64)
    return np.sqrt(N / (k * (N - k))) * (S[:, :-1] - k * mean[:, None])


@njit
def _scan_nb(C, W, lo, hi):
    n = C.shape[0]
    K = W.shape[0]
    best = np.full(K, -np.inf)
    best_b = np.full(K, -1, dtype=np.int64)
    best_m = np.full(K, -1, dtype=np.int64)
    neg = np.empty(n)
    cs = np.empty(n)
    for b in range(lo, hi):
        for j in range(n):
            neg[j] = -abs(C[j, b])
        idx = np.argsort(neg, kind="mergesort")
        acc = 0.0
        for i in range(n):
            acc += -neg[idx[i]]
            cs[i] = acc
        tot = cs[n - 1]
        for m in range(1, n + 1):
            top = cs[m - 1]
            diff = top / m - (tot - top) / (2 * n - m)
            for k in range(K):
                v = W[k, m - 1] * diff
                if v > best[k]:
                    best[k] = v
                    best_b[k] = b
                    best_m[k] = m
    return best, best_b, best_m


def _scan_np(C, W, lo, hi):
    n = C.shape[0]
    A = np.abs(C[:, lo:hi])
    order = np.argsort(-A, axis=0, kind="stable")
    cs = np.cumsum(np.take_along_axis(A, order, axis=0), axis=0)
    tot = cs[-1]
    m = np.arange(1, n + 1, dtype=np.float64)[:, None]
    diff = cs / m - (tot - cs) / (2 * n - m)
    K = W.shape[0]
    best = np.empty(K)
    best_b = np.empty(K, dtype=np.int64)
    best_m = np.empty(K, dtype=np.int64)
    for k in range(K):
        D = (W[k][:, None] * diff).T  # (b, m): flat argmax -> smallest b, then m
        flat = int(np.argmax(D))
        ib, im = divmod(flat, n)
        best[k] = D[ib, im]
        best_b[k] = lo + ib
        best_m[k] = im + 1
    return best, best_b, best_m


def _prefix_sums(x):
    """``(T + 1, n)`` running sums, time-major so a window column is contiguous."""
    n, T = x.shape
    P = np.zeros((T + 1, n))
    for t in range(T):
        for j in range(n):
            P[t + 1, j] = P[t, j] + x[j, t]
    return P


_prefix_sums_nb = njit(_prefix_sums)


@njit
def _window_stats_nb(x, w, lo, hi, W):
    # CUSUMs come from global prefix sums; the descending order of |CUSUM| is
    # carried over from the previous split and repaired by insertion sort,
    # which is close to linear because neighbouring splits are nearly sorted.
    n, T = x.shape
    K = W.shape[0]
    P = _prefix_sums_nb(x)
    coef = np.empty(w)
    for k in range(1, w):
        coef[k] = np.sqrt(w / (k * (w - k)))
    out = np.full((K, T - w + 1), -np.inf)
    a = np.empty(n)
    v = np.empty(n)
    idx = np.arange(n)
    for s in range(T - w + 1):
        for b in range(lo, hi):
            k = b + 1
            c = coef[k]
            for j in range(n):
                mean = (P[s + w, j] - P[s, j]) / w
                v[j] = abs(c * ((P[s + k, j] - P[s, j]) - k * mean))
            for i in range(n):
                a[i] = v[idx[i]]
            for i in range(1, n):
                key = a[i]
                ki = idx[i]
                j = i - 1
                while j >= 0 and a[j] < key:
                    a[j + 1] = a[j]
                    idx[j + 1] = idx[j]
                    j -= 1
                a[j + 1] = key
                idx[j + 1] = ki
            tot = 0.0
            for i in range(n):
                tot += a[i]
            acc = 0.0
            for m in range(1, n + 1):
                acc += a[m - 1]
                diff = acc / m - (tot - acc) / (2 * n - m)
                for r in range(K):
                    val = W[r, m - 1] * diff
                    if val > out[r, s]:
                        out[r, s] = val
    return out


def _window_stats_np(x, w, lo, hi, W):
    n, T = x.shape
    P = np.concatenate([np.zeros((1, n)), np.cumsum(x.T, axis=0)])
    k = np.arange(lo + 1, hi + 1)
    coef = np.sqrt(w / (k * (w - k)))
    m = np.arange(1, n + 1, dtype=np.float64)
    out = np.empty((W.shape[0], T - w + 1))
    for s in range(T - w + 1):
        mean = (P[s + w] - P[s]) / w
        A = np.abs(coef[:, None] * ((P[s + k] - P[s]) - k[:, None] * mean))  # (splits, n)
        A = -np.sort(-A, axis=1)
        cs = np.cumsum(A, axis=1)
        tot = cs[:, -1:]
        diff = cs / m - (tot - cs) / (2 * n - m)
        out[:, s] = (diff[:, None, :] * W[None]).max(axis=(0, 2))
    return out


@njit
def _window_stats_batch_nb(X, w, lo, hi, W):
    B, T = X.shape[0], X.shape[2]
    out = np.empty((B, W.shape[0], T - w + 1))
    for i in range(B):
        out[i] = _window_stats_nb(X[i], w, lo, hi, W)
    return out


def _window_stats_batch_np(X, w, lo, hi, W):
    return np.stack([_window_stats_np(X[i], w, lo, hi, W) for i in range(X.shape[0])])


if BACKEND == "numba":
    cusum_block = _cusum_block_nb
    scan = _scan_nb
    window_stats = _window_stats_nb
    window_stats_batch = _window_stats_batch_nb
else:
    cusum_block = _cusum_block_np
    scan = _scan_np
    window_stats = _window_stats_np
    window_stats_batch = _window_stats_batch_np
