"""Independent brute-force evaluations used as test oracles.

Nothing here imports the package's kernels: every quantity is recomputed
from its definition with plain Python loops over (b, m).
"""
import math

import numpy as np


def cusum_direct(x, s, b, e):
    """sqrt((b-s+1)(e-b)/(e-s+1)) * (mean of x[s..b] - mean of x[b+1..e]), 1-based."""
    x = [float(v) for v in x]
    left = x[s - 1:b]
    right = x[b:e]
    nl, nr = len(left), len(right)
    return math.sqrt(nl * nr / (nl + nr)) * (sum(left) / nl - sum(right) / nr)


def cusum_definition(x, s, b, e):
    """sqrt(N/(k(N-k))) * (S_k - k/N S_N) on the window [s, e]."""
    w = [float(v) for v in x[s - 1:e]]
    N = len(w)
    k = b - s + 1
    return math.sqrt(N / (k * (N - k))) * (sum(w[:k]) - k / N * sum(w))


def dc_value(sorted_abs, m, weight):
    n = len(sorted_abs)
    top = sum(sorted_abs[:m])
    rest = sum(sorted_abs[m:])
    return weight * (top / m - rest / (2 * n - m))


def dc_weight(n, m, kind, phi=0.5, gamma=None):
    base = m * (2 * n - m) / (2 * n)
    if kind == "exponent":
        return base ** phi
    g = math.log(n) if gamma is None else gamma
    return g + math.sqrt(base)


def dc_scan_brute(X, s, e, kind, phi=0.5, gamma=None, bmin=None, bmax=None):
    """Returns (stat, b, m) maximising over b then m with first-hit ties."""
    n = len(X)
    bmin = s if bmin is None else bmin
    bmax = e - 1 if bmax is None else bmax
    best = (-math.inf, None, None)
    for b in range(bmin, bmax + 1):
        a = sorted((abs(cusum_direct(X[j], s, b, e)) for j in range(n)), reverse=True)
        for m in range(1, n + 1):
            v = dc_value(a, m, dc_weight(n, m, kind, phi, gamma))
            if v > best[0]:
                best = (v, b, m)
    return best


def sbs_brute(X, pi_T):
    n, T = len(X), len(X[0])
    best, bb = -math.inf, None
    for b in range(1, T):
        tot = 0.0
        for j in range(n):
            c = abs(cusum_direct(X[j], 1, b, T))
            if c > pi_T:
                tot += c
        if tot > best:
            best, bb = tot, b
    return best, bb


def jirak_brute(X):
    n, T = len(X), len(X[0])
    best, bb = -math.inf, None
    for b in range(1, T):
        for j in range(n):
            v = math.sqrt(b * (T - b) / T) * abs(cusum_direct(X[j], 1, b, T))
            if v > best:
                best, bb = v, b
    return best, bb


def eh_brute(X, alpha, H):
    n, T = len(X), len(X[0])
    lin = -math.inf
    scan = -math.inf
    for b in range(1, T):
        sq = [cusum_direct(X[j], 1, b, T) ** 2 - 1.0 for j in range(n)]
        lin = max(lin, sum(sq) / (H * math.sqrt(2 * n)))
        sq.sort(reverse=True)
        for m in range(1, n + 1):
            Tm = 2.0 / math.sqrt(2 * m) * (m * math.log(n * math.e / m) + math.log(n * T / alpha))
            scan = max(scan, sum(sq[:m]) / (Tm * math.sqrt(2 * m)))
    return lin, scan


def noiseless_panel(rng, n, T, etas, min_m=1):
    """Piecewise-constant panel whose every change-point is shared by >= min_m series."""
    X = np.zeros((n, T))
    for eta in etas:
        m = int(rng.integers(min_m, n + 1))
        idx = rng.choice(n, size=m, replace=False)
        jumps = rng.uniform(0.5, 2.0, size=m) * rng.choice([-1.0, 1.0], size=m)
        X[idx, eta:] += jumps[:, None]
    return X
