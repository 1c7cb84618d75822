"""Competing single change-point statistics used in the benchmark harness.

All statistics work on already-scaled panels and scan the full window
``[1, T]``; ``d_T`` optionally restricts the splits exactly as in
:func:`panelseg.cusum.candidate_bounds`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .bootstrap import empirical_quantile, replicate_rng
from .cusum import candidate_bounds, cusum_matrix
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class CompetitorResult:
    name: str
    stat: float
    b_hat: int | None
    rejected: bool
    threshold_used: float
    score: float  # monotone test statistic used for size correction

    def to_dict(self) -> dict:
        return {
            "name": self.name, "stat": self.stat, "b_hat": self.b_hat,
            "rejected": self.rejected, "threshold": self.threshold_used, "score": self.score,
        }


def _values(panel) -> np.ndarray:
    return np.asarray(panel.values if hasattr(panel, "values") else panel, dtype=np.float64)


def _cusums(panel, s: int, e: int | None, d_T: int | None) -> tuple[np.ndarray, int]:
    """CUSUM matrix restricted to admissible splits and the first split."""
    v = _values(panel)
    e = v.shape[1] if e is None else e
    first, last = candidate_bounds(s, e, d_T)
    C = cusum_matrix(v, s, e)
    return C[:, first - s:last - s + 1], first


def sbs_statistic(panel, s: int = 1, e: int | None = None, pi_T: float = 0.0,
                  d_T: int | None = None) -> tuple[float, int]:
    """Thresholded sum ``max_b sum_j |X^j_b| 1(|X^j_b| > pi_T)``."""
    if not pi_T >= 0:
        raise DomainError(f"pi_T must be non-negative, got {pi_T}")
    C, first = _cusums(panel, s, e, d_T)
    A = np.abs(C)
    sums = np.where(A > pi_T, A, 0.0).sum(axis=0)
    b = int(np.argmax(sums))
    return float(sums[b]), first + b


def max_abs_cusum(panel, d_T: int | None = None) -> float:
    """``max_{b, j} |X^j_{1,b,T}|``, the quantity thresholded by SBS."""
    C, _ = _cusums(panel, 1, None, d_T)
    return float(np.max(np.abs(C)))


def jirak_statistic(panel, d_T: int | None = None) -> tuple[float, int]:
    """Pointwise maximum ``max_b max_j sqrt(b(T-b)/T) |X^j_{1,b,T}|``."""
    v = _values(panel)
    T = v.shape[1]
    if T < 4:
        raise DomainError(f"Jirak statistic needs T >= 4, got {T}")
    C, first = _cusums(v, 1, None, d_T)
    b = np.arange(first, first + C.shape[1], dtype=np.float64)
    per_b = np.sqrt(b * (T - b) / T) * np.max(np.abs(C), axis=0)
    k = int(np.argmax(per_b))
    return float(per_b[k]), first + k


def chi2_quantile(p: float, df: int) -> float:
    """``p``-quantile of chi-squared with ``df`` degrees of freedom."""
    return float(chi2.ppf(p, df))


def eh_scan_penalty(m, n: int, T: int, alpha: float, tm_variant: str = "m"):
    """``T_m = 2 / sqrt(2 k) * {m log(n e / m) + log(n T / alpha)}``.

    ``tm_variant="m"`` uses ``k = m``; ``"n"`` uses ``k = n``.
    """
    m = np.asarray(m, dtype=np.float64)
    if tm_variant == "m":
        k = m
    elif tm_variant == "n":
        k = np.full_like(m, float(n))
    else:
        raise DomainError(f"tm_variant must be 'm' or 'n', got {tm_variant!r}")
    return 2.0 / np.sqrt(2.0 * k) * (m * np.log(n * math.e / m) + math.log(n * T / alpha))


@dataclass(frozen=True)
class EhStatistics:
    linear: float
    scan: float
    combined_reject: bool
    b_linear: int
    b_scan: int
    m_scan: int


def eh_statistics(panel, alpha: float, tm_variant: str = "m", d_T: int | None = None) -> EhStatistics:
    """Linear and scan statistics; the combined test rejects when either exceeds one."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    v = _values(panel)
    n, T = v.shape
    C, first = _cusums(v, 1, None, d_T)
    sq = C * C - 1.0
    H = chi2_quantile(1.0 - alpha / 2.0, n)
    lin = sq.sum(axis=0) / (H * math.sqrt(2 * n))
    bl = int(np.argmax(lin))
    m = np.arange(1, n + 1, dtype=np.float64)
    scale = 1.0 / (eh_scan_penalty(m, n, T, alpha, tm_variant) * np.sqrt(2.0 * m))
    partial = np.cumsum(-np.sort(-sq, axis=0), axis=0) * scale[:, None]  # (m, b)
    flat = int(np.argmax(partial.T))
    bs, ms = divmod(flat, n)
    scan = float(partial[ms, bs])
    linear = float(lin[bl])
    return EhStatistics(linear, scan, bool(linear > 1.0 or scan > 1.0), first + bl, first + bs, ms + 1)


def sbs_oracle_threshold(noise_panels, alpha: float, d_T: int | None = None) -> float:
    """``(1 - alpha)`` empirical quantile of the per-panel maximum ``|CUSUM|``."""
    maxima = [max_abs_cusum(p, d_T) for p in noise_panels]
    if not maxima:
        raise ConfigError("sbs_oracle_threshold needs at least one noise panel")
    return empirical_quantile(maxima, alpha)


def circular_block_bootstrap(E, block: int, rng: np.random.Generator) -> np.ndarray:
    """Circular block resample of the columns of ``E``; blocks are shared by all rows."""
    E = np.asarray(E, dtype=np.float64)
    T = E.shape[1]
    starts = rng.integers(0, T, size=-(-T // block))
    idx = (starts[:, None] + np.arange(block)[None, :]).ravel()[:T] % T
    return E[:, idx]


def jirak_threshold(E, alpha: float, B: int = 100, seed: int = 0, block: int = 4,
                    d_T: int | None = None) -> float:
    """Block-bootstrap ``(1 - alpha)`` quantile of the Jirak statistic of residuals ``E``."""
    if B < 1:
        raise ConfigError(f"bootstrap size B must be >= 1, got {B}")
    stats = [jirak_statistic(circular_block_bootstrap(E, block, replicate_rng(seed, l)), d_T)[0] for l in range(B)]
    return empirical_quantile(stats, alpha)
