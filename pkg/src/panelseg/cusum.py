"""CUSUM operator, ordered CUSUMs and the double CUSUM scan.

Time indices in this module's public API are 1-based: a window ``[s, e]``
covers observations ``s .. e`` and a split at ``b`` separates ``s .. b`` from
``b + 1 .. e``.  Series indices (``order``) are 0-based array positions.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionError, DomainError, WindowTooShortError


@dataclass(frozen=True)
class DcMode:
    """Which double CUSUM is evaluated.

    ``exponent`` uses ``{m(2n-m)/(2n)}^phi`` as cardinality weight;
    ``combined`` is ``gamma * D^0 + D^{1/2}`` (``gamma=None`` means ``log n``).
    """

    kind: str = "combined"
    phi: float = 0.5
    gamma: float | None = None

    def __post_init__(self):
        if self.kind == "exponent":
            if not 0.0 <= self.phi <= 1.0:
                raise DomainError(f"phi must lie in [0, 1], got {self.phi}")
        elif self.kind == "combined":
            if self.gamma is not None and not self.gamma > 0:
                raise DomainError(f"gamma must be positive, got {self.gamma}")
        else:
            raise DomainError(f"unknown mode kind {self.kind!r}")

    @classmethod
    def exponent(cls, phi: float) -> "DcMode":
        return cls("exponent", float(phi), None)

    @classmethod
    def combined(cls, gamma: float | None = None) -> "DcMode":
        return cls("combined", 0.5, None if gamma is None else float(gamma))

    @classmethod
    def parse(cls, text: str) -> "DcMode":
        """Parse ``phi=<v>``, ``combined`` or ``combined,gamma=<v>``."""
        t = text.strip().lower()
        m = re.fullmatch(r"phi=([^,]+)", t)
        if m:
            try:
                return cls.exponent(float(m.group(1)))
            except ValueError:
                raise DomainError(f"bad phi value in mode {text!r}") from None
        m = re.fullmatch(r"combined(?:,gamma=([^,]+))?", t)
        if m:
            if m.group(1) is None:
                return cls.combined()
            try:
                return cls.combined(float(m.group(1)))
            except ValueError:
                raise DomainError(f"bad gamma value in mode {text!r}") from None
        raise DomainError(f"unrecognised mode {text!r}; use phi=<v> or combined[,gamma=<v>]")

    def resolved_gamma(self, n: int) -> float:
        return math.log(n) if self.gamma is None else self.gamma

    def weights(self, n: int) -> np.ndarray:
        """Per-cardinality multipliers ``w_m`` with ``D_m = w_m * diff_m``."""
        m = np.arange(1, n + 1, dtype=np.float64)
        base = m * (2 * n - m) / (2 * n)
        if self.kind == "exponent":
            return base ** self.phi
        return self.resolved_gamma(n) + np.sqrt(base)

    @property
    def label(self) -> str:
        if self.kind == "exponent":
            return f"phi={self.phi:g}"
        return "combined" if self.gamma is None else f"combined,gamma={self.gamma:g}"


@dataclass(frozen=True, eq=False)
class CusumScanResult:
    stat: float
    b_hat: int
    m_hat: int
    order: np.ndarray
    signs: np.ndarray
    s: int
    e: int

    @property
    def contributors(self) -> np.ndarray:
        """Series with the ``m_hat`` largest ``|CUSUM|`` at ``b_hat`` (0-based)."""
        return np.sort(self.order[: self.m_hat])


def _values(panel) -> np.ndarray:
    v = panel.values if hasattr(panel, "values") else np.asarray(panel, dtype=np.float64)
    return np.ascontiguousarray(v, dtype=np.float64)


def _check_window(T: int, s: int, e: int) -> None:
    if not (1 <= s < e <= T):
        raise DimensionError(f"window [{s}, {e}] must satisfy 1 <= s < e <= T={T}")


def cusum_series(x) -> np.ndarray:
    """CUSUMs of an already-scaled segment at every split ``b = s .. e-1``.

    One prefix-sum pass; the segment mean is removed first, which keeps the
    result invariant to level shifts up to rounding.
    """
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    if x.size < 2:
        raise DimensionError(f"CUSUM needs a window of at least 2 points, got {x.size}")
    return _kernels.cusum_block(x[None, :], 0, x.size - 1)[0]


def cusum_matrix(panel, s: int = 1, e: int | None = None) -> np.ndarray:
    """``(n, e - s)`` array of CUSUMs on ``[s, e]``; column ``b - s`` holds split ``b``."""
    v = _values(panel)
    e = v.shape[1] if e is None else e
    _check_window(v.shape[1], s, e)
    return _kernels.cusum_block(v, s - 1, e - 1)


def candidate_bounds(s: int, e: int, d_T: int | None) -> tuple[int, int]:
    """First and last admissible split of ``[s, e]`` after trimming.

    The trimmed set removes ``[s, s + d_T]`` and ``[e - d_T, e]``; ``d_T=None``
    disables trimming and leaves every ``b`` in ``[s, e)``.
    """
    if d_T is None:
        first, last = s, e - 1
    else:
        if d_T < 0:
            raise DomainError(f"trim width must be non-negative, got {d_T}")
        first, last = s + d_T + 1, e - d_T - 1
    if first > last:
        raise WindowTooShortError(f"window [{s}, {e}] has no split left after trimming d_T={d_T}")
    return first, last


def min_window_length(d_T: int | None) -> int:
    """Shortest window with a non-empty trimmed candidate set."""
    return 2 if d_T is None else 2 * d_T + 3


def ordered_abs_cusums(panel, s: int, b: int, e: int):
    """Sorted ``|X^j_{s,b,e}|`` (descending), the ordering and CUSUM signs.

    Ties keep the smaller series index first.
    """
    v = _values(panel)
    _check_window(v.shape[1], s, e)
    if not s <= b < e:
        raise DimensionError(f"split b={b} outside [{s}, {e})")
    col = cusum_matrix(v, s, e)[:, b - s]
    return _order_column(col)


def _order_column(col: np.ndarray):
    order = np.argsort(-np.abs(col), kind="stable")
    signs = np.where(col[order] >= 0, 1, -1).astype(np.int64)
    signs_by_series = np.empty_like(signs)
    signs_by_series[order] = signs
    return np.abs(col)[order], order, signs_by_series


def double_cusum(sorted_abs, m: int, mode: DcMode) -> float:
    """Double CUSUM of descending values at cardinality ``m`` (1-based)."""
    a = np.asarray(sorted_abs, dtype=np.float64).ravel()
    n = a.size
    if not 1 <= m <= n:
        raise DomainError(f"cardinality m={m} outside 1..{n}")
    if np.any(a[1:] > a[:-1]):
        raise DomainError("double_cusum input must be sorted in descending order")
    cs = np.cumsum(a)
    top = cs[m - 1]
    diff = top / m - (cs[-1] - top) / (2 * n - m)
    return float(mode.weights(n)[m - 1] * diff)


def dc_scan(panel, s: int = 1, e: int | None = None, mode: DcMode = DcMode(), d_T: int | None = 5) -> CusumScanResult:
    """Maximise the double CUSUM over admissible splits ``b`` and cardinalities ``m``.

    Ties resolve to the smallest ``b``, then the smallest ``m``.
    """
    return dc_scan_many(panel, s, e, [mode], d_T)[0]


def dc_scan_many(panel, s: int, e: int | None, modes, d_T: int | None) -> list[CusumScanResult]:
    """:func:`dc_scan` for several modes sharing one CUSUM and sort pass."""
    v = _values(panel)
    n, T = v.shape
    e = T if e is None else e
    _check_window(T, s, e)
    first, last = candidate_bounds(s, e, d_T)
    C = _kernels.cusum_block(v, s - 1, e - 1)
    W = np.ascontiguousarray(np.stack([md.weights(n) for md in modes]))
    stats, bs, ms = _kernels.scan(C, W, first - s, last - s + 1)
    out = []
    for k in range(len(modes)):
        col = int(bs[k])
        _, order, signs = _order_column(C[:, col])
        out.append(CusumScanResult(float(stats[k]), s + col, int(ms[k]), order, signs, s, e))
    return out


def projection_vector(order, signs, m: int, scales, mode: DcMode) -> np.ndarray:
    """Projection ``p`` whose CUSUM of ``<x_t, p>`` equals the double CUSUM at (b, m).

    ``order`` and ``signs`` come from the same ``(s, b, e)``; ``signs`` is
    indexed by series.  Only the exponent mode admits such a projection.
    """
    if mode.kind != "exponent":
        raise DomainError("projection vectors exist for the exponent mode only")
    order = np.asarray(order)
    n = order.size
    if not 1 <= m <= n:
        raise DomainError(f"cardinality m={m} outside 1..{n}")
    w = (m * (2 * n - m) / (2 * n)) ** mode.phi
    coef = np.full(n, -w / (2 * n - m))
    coef[order[:m]] = w / m
    return np.asarray(signs, dtype=np.float64) * coef / np.asarray(scales, dtype=np.float64)
