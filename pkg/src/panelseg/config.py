"""Detector configuration shared by the pipeline and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field

from .cusum import DcMode
from .errors import ConfigError
from .scaling import default_depth


@dataclass(frozen=True)
class DetectorConfig:
    """Tuning knobs of :func:`panelseg.dcbs.detect`.

    ``L_T=None`` resolves to ``floor(log2(log T + 1))``.  With ``bonferroni``
    the bootstrap level is ``alpha_star / (2**L_T - 1)``.  ``threads`` never
    changes results.
    ``window_rule`` selects how sub-window thresholds are drawn from the
    moving-window bootstrap statistics: ``max`` takes each replicate's
    maximum over window positions, ``pooled`` pools all positions.
    """

    mode: DcMode = field(default_factory=DcMode.combined)
    alpha_star: float = 0.05
    B: int = 100
    d_T: int = 5
    L_T: int | None = None
    seed: int = 0
    bonferroni: bool = True
    threads: int | None = None
    window_rule: str = "max"

    def __post_init__(self):
        if self.window_rule not in ("max", "pooled"):
            raise ConfigError(f"window rule must be 'max' or 'pooled', got {self.window_rule!r}")
        if not 0.0 < self.alpha_star < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha_star}")
        if self.B < 1:
            raise ConfigError(f"bootstrap size B must be >= 1, got {self.B}")
        if self.d_T < 0:
            raise ConfigError(f"trim width d_T must be >= 0, got {self.d_T}")
        if self.L_T is not None and self.L_T < 1:
            raise ConfigError(f"tree depth L_T must be >= 1, got {self.L_T}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def depth_for(self, T: int) -> int:
        return default_depth(T) if self.L_T is None else self.L_T

    def alpha_for(self, T: int) -> float:
        if not self.bonferroni:
            return self.alpha_star
        return self.alpha_star / (2 ** self.depth_for(T) - 1)

    def to_dict(self, T: int | None = None) -> dict:
        d = {
            "mode": self.mode.label,
            "alpha_star": self.alpha_star,
            "B": self.B,
            "d_T": self.d_T,
            "L_T": self.L_T,
            "seed": self.seed,
            "bonferroni": self.bonferroni,
            "window_rule": self.window_rule,
        }
        if T is not None:
            d["L_T"] = self.depth_for(T)
            d["alpha"] = self.alpha_for(T)
        return d
