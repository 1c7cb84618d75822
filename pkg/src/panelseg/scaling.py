"""Per-series long-run variance used to scale the CUSUMs.

Each series is first segmented by a plain-CUSUM binary tree of limited depth
and demeaned within the leaves; the flat-top kernel estimator with automatic
bandwidth is then applied to the residuals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cusum import cusum_series
from .errors import DegenerateError, DimensionError, DomainError
from .panel_core import PanelData

#: Multiplier of the bandwidth stopping bound ``sqrt(log10(T) / T)``.
BANDWIDTH_CONSTANT = 1.4
_MIN_SPLIT = 4


@dataclass(frozen=True, eq=False)
class ScalingEstimate:
    sigma2: np.ndarray
    tau: np.ndarray
    residuals: np.ndarray

    @property
    def scales(self) -> np.ndarray:
        return np.sqrt(self.sigma2)


def default_depth(T: int) -> int:
    """``floor(log2(log T + 1))``, at least 1."""
    return max(1, int(math.floor(math.log2(math.log(T) + 1))))


def segment_tree(x, depth: int) -> tuple[list[tuple[int, int]], list[int]]:
    """Grow a plain-CUSUM binary segmentation of ``depth`` levels.

    Returns the leaf intervals (1-based, inclusive) in time order and the
    split points in the order they were found.  Intervals shorter than four
    points are not split further.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    level = [(1, x.size)]
    leaves, splits = [], []
    for _ in range(depth):
        nxt = []
        for s, e in level:
            if e - s + 1 < _MIN_SPLIT:
                leaves.append((s, e))
                continue
            b = s + int(np.argmax(np.abs(cusum_series(x[s - 1:e]))))
            splits.append(b)
            nxt += [(s, b), (b + 1, e)]
        level = nxt
    leaves += level
    return sorted(leaves), splits


def estimate_residuals(x, depth: int) -> np.ndarray:
    """Series minus the sample mean of its segment-tree leaf."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < _MIN_SPLIT:
        raise DimensionError(f"residual tree needs T >= 4, got {x.size}")
    if depth < 1:
        raise DomainError(f"tree depth must be >= 1, got {depth}")
    leaves, _ = segment_tree(x, depth)
    out = np.empty_like(x)
    for s, e in leaves:
        seg = x[s - 1:e]
        out[s - 1:e] = seg - seg.mean()
    return out


def flat_top_weight(t):
    """Trapezoidal flat-top lag window: 1 on ``|t| <= 1/2``, 0 beyond 1."""
    a = np.abs(np.asarray(t, dtype=np.float64))
    w = np.where(a <= 0.5, 1.0, np.where(a < 1.0, 2.0 * (1.0 - a), 0.0))
    return float(w) if w.ndim == 0 else w


def autocovariances(e, max_lag: int) -> np.ndarray:
    """``c(k) = T^{-1} sum_{t <= T-k} e_t e_{t+k}`` for ``k = 0 .. max_lag``."""
    e = np.asarray(e, dtype=np.float64).ravel()
    T = e.size
    c = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        c[k] = np.dot(e[: T - k], e[k:]) / T
    return c


def select_bandwidth(acov, T: int) -> int:
    """Smallest ``tau >= 1`` with ``|c(tau+k)/c(0)|`` below the bound for k = 1, 2, 3.

    ``acov`` must hold lags ``0 .. cap + 3`` where ``cap = max(1, T//4 - 3)``;
    the cap is returned when the rule never fires.
    """
    acov = np.asarray(acov, dtype=np.float64)
    cap = max(1, T // 4 - 3)
    bound = BANDWIDTH_CONSTANT * math.sqrt(math.log10(T) / T)
    ratio = np.abs(acov / acov[0])
    for tau in range(1, cap + 1):
        if tau + 3 >= ratio.size:
            break
        if np.all(ratio[tau + 1:tau + 4] < bound):
            return tau
    return cap


def long_run_variance(residuals, atol: float = 0.0) -> tuple[float, int]:
    """Flat-top kernel long-run variance, floored at half the variance.

    Raises:
        DegenerateError: the residuals are (numerically) identically zero.
    """
    e = np.asarray(residuals, dtype=np.float64).ravel()
    T = e.size
    if T < 8:
        raise DimensionError(f"long-run variance needs T >= 8, got {T}")
    cap = max(1, T // 4 - 3)
    acov = autocovariances(e, min(T - 1, max(cap + 3, 2 * cap)))
    c0 = acov[0]
    if c0 <= 0.0 or math.sqrt(c0) <= atol:
        raise DegenerateError("residuals are identically zero; no scale can be estimated")
    tau = select_bandwidth(acov, T)
    k = np.arange(1, 2 * tau + 1)
    kernel_sum = c0 + 2.0 * np.sum(flat_top_weight(k / (2 * tau)) * acov[1:2 * tau + 1])
    return float(max(kernel_sum, c0 / 2.0)), tau


def estimate_scales(panel: PanelData, depth: int | None = None) -> ScalingEstimate:
    """Residual tree followed by the long-run variance, series by series."""
    x = panel.values if hasattr(panel, "values") else np.asarray(panel, dtype=np.float64)
    n, T = x.shape
    depth = default_depth(T) if depth is None else depth
    sigma2 = np.empty(n)
    tau = np.empty(n, dtype=np.int64)
    resid = np.empty((n, T))
    for j in range(n):
        resid[j] = estimate_residuals(x[j], depth)
        atol = 1e-10 * float(np.max(np.abs(x[j])))
        try:
            sigma2[j], tau[j] = long_run_variance(resid[j], atol=atol)
        except DegenerateError:
            raise DegenerateError(
                f"series {j + 1}: residuals vanish after removing segment means "
                "(noise-free or constant series); supply scales explicitly"
            ) from None
    return ScalingEstimate(sigma2, tau, resid)
