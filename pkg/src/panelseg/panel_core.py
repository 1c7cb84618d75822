"""Panel containers, CSV ingestion and per-series standardisation.

Panels are stored series-per-row: ``values[j, t]`` is series ``j + 1`` at
time ``t + 1``.  Error messages always use 1-based row/column numbers.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, DomainError, ParseError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PanelData:
    """An ``n x T`` matrix of observations, immutable after construction."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionError(f"panel must be 2-dimensional, got shape {v.shape}")
        if v.shape[0] < 1:
            raise DimensionError("panel needs at least one series")
        if v.shape[1] < 2:
            raise DimensionError(f"panel needs T >= 2, got T={v.shape[1]}")
        bad = np.argwhere(~np.isfinite(v))
        if bad.size:
            j, t = bad[0]
            raise DomainError(f"non-finite value at (series {j + 1}, time {t + 1})")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class ScaledPanel:
    """Panel divided row-wise by strictly positive scales."""

    values: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        s = _frozen(np.atleast_1d(self.scales))
        if v.ndim != 2 or s.shape != (v.shape[0],):
            raise DimensionError(f"scales of shape {s.shape} do not match panel of shape {v.shape}")
        if np.any(~(s > 0)):
            j = int(np.flatnonzero(~(s > 0))[0])
            raise DomainError(f"scale of series {j + 1} must be positive, got {s[j]!r}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "scales", s)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    @classmethod
    def unit(cls, values) -> "ScaledPanel":
        """Wrap already-scaled values with unit scales."""
        v = np.asarray(values, dtype=np.float64)
        return cls(v, np.ones(v.shape[0]))


def standardize(panel: PanelData | ScaledPanel, scales) -> ScaledPanel:
    """Divide series ``j`` by ``scales[j]``.

    Standardising a :class:`ScaledPanel` composes the scales, so that
    ``standardize(standardize(p, s), ones)`` equals ``standardize(p, s)``.
    """
    s = np.asarray(scales, dtype=np.float64).ravel()
    if s.shape != (panel.n,):
        raise DimensionError(f"expected {panel.n} scales, got {s.shape[0]}")
    for j, v in enumerate(s):
        if not v > 0:
            raise DomainError(f"scale of series {j + 1} must be positive, got {v!r}")
    base = panel.scales if isinstance(panel, ScaledPanel) else np.ones(panel.n)
    return ScaledPanel(panel.values / s[:, None], base * s)


def load_csv(path, has_header: bool = False) -> PanelData:
    """Read a series-per-row CSV file into a :class:`PanelData`.

    Raises:
        ParseError: empty file, ragged rows or a non-numeric cell; the
            message names the 1-based data row (and column).
        DimensionError: fewer than two columns.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path}: no rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ParseError(f"{path}: row {i} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row, start=1):
            try:
                data[i - 1, j - 1] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {cell.strip()!r} at ({i},{j})") from None
    if width < 2:
        raise DimensionError(f"{path}: need T >= 2 columns, got {width}")
    return PanelData(data)


def write_csv(path, panel: PanelData | ScaledPanel | np.ndarray, header: list[str] | None = None) -> None:
    """Write a panel with 17 significant digits (round-trips exactly)."""
    values = panel.values if hasattr(panel, "values") else np.asarray(panel, dtype=np.float64)
    with open(Path(path), "w", newline="") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in values:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
