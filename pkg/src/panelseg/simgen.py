"""Noise models, piecewise-constant signals and evaluation metrics for Monte Carlo work."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError
from .panel_core import PanelData

MA_LAGS = 100
AR = (1.0, -0.2, 0.3)
MA = (1.0, 0.2)


@dataclass(frozen=True)
class NoiseModelSpec:
    """Cross-correlated ARMA(2, 2) noise (``n1``) or the same plus a common factor (``n2``).

    For ``n1`` the spatial weights are ``rho / (i + 1)`` and ``sigma_v = 0.1 / rho``;
    ``n2`` fixes ``rho = 0.2`` and uses ``sigma_v = 0.5 sqrt(1 - rho_h^2)`` with a
    shared factor ``rho_h * h_t``, ``h_t ~ N(0, sigma_h^2)``.
    """

    model: str = "n1"
    rho: float = 0.2
    n: int = 50
    T: int = 100
    burn_in: int = 100
    sigma_v: float | None = None
    sigma_h: float = 0.1

    def __post_init__(self):
        if self.model not in ("n1", "n2"):
            raise DomainError(f"noise model must be 'n1' or 'n2', got {self.model!r}")
        if self.model == "n1" and not self.rho > 0:
            raise DomainError(f"n1 needs rho > 0, got {self.rho}")
        if self.model == "n2" and not 0 < self.rho < 1:
            raise DomainError(f"n2 needs 0 < rho_h < 1, got {self.rho}")
        if self.n < 1 or self.T < 2:
            raise DomainError(f"need n >= 1 and T >= 2, got n={self.n}, T={self.T}")
        if self.burn_in < 0:
            raise DomainError(f"burn_in must be non-negative, got {self.burn_in}")
        if self.sigma_v is not None and self.sigma_v < 0:
            raise DomainError(f"sigma_v must be non-negative, got {self.sigma_v}")

    @property
    def spatial_rho(self) -> float:
        return self.rho if self.model == "n1" else 0.2

    @property
    def innovation_sd(self) -> float:
        if self.sigma_v is not None:
            return self.sigma_v
        if self.model == "n1":
            return 0.1 / self.rho
        return 0.5 * math.sqrt(1.0 - self.rho ** 2)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_noise(spec: NoiseModelSpec, seed=0) -> PanelData:
    """Draw an ``n x T`` noise panel; the first ``burn_in`` steps are discarded."""
    rng = _rng(seed)
    n, L = spec.n, spec.T + spec.burn_in
    v = rng.standard_normal((n + MA_LAGS - 1, L)) * spec.innovation_sd  # rows j = -98 .. n
    weights = spec.spatial_rho / np.arange(1, MA_LAGS + 1)
    # u_j = sum_i weights[i] v_{j-i}; row r of v holds coordinate r - 98
    u = np.empty((n, L))
    for j in range(n):
        u[j] = weights @ v[j + MA_LAGS - 1::-1][:MA_LAGS]
    forcing = lfilter(MA, [1.0], u, axis=1)
    if spec.model == "n2":
        h = rng.standard_normal(L) * spec.sigma_h
        forcing = forcing + spec.rho * h[None, :]
    eps = lfilter([1.0], AR, forcing, axis=1)
    return PanelData(eps[:, spec.burn_in:])


@dataclass(frozen=True)
class ChangeSpec:
    eta: int
    m: int
    delta: float
    pi: tuple[int, ...] | None = None  # 0-based series, drawn at random when None
    width: float = 0.25  # jump magnitudes ~ U((1 - width) delta, (1 + width) delta)


@dataclass(frozen=True)
class SignalSpec:
    change_points: tuple[ChangeSpec, ...] = field(default_factory=tuple)

    @classmethod
    def fractions(cls, T: int, n: int, triples, width: float = 0.25) -> "SignalSpec":
        """Build from ``(eta / T, m / n, delta)`` triples, rounding down."""
        return cls(tuple(ChangeSpec(int(math.floor(f * T)), max(1, int(math.floor(g * n))), d, None, width)
                         for f, g, d in triples))

    def validate(self, n: int, T: int) -> None:
        prev = 1
        for cp in self.change_points:
            if not prev < cp.eta < T:
                raise DomainError(f"change-points must satisfy 1 < eta_1 < ... < T={T}; got eta={cp.eta}")
            if not 1 <= cp.m <= n:
                raise DomainError(f"cardinality m={cp.m} outside 1..{n}")
            if cp.pi is not None and (len(cp.pi) != cp.m or len(set(cp.pi)) != cp.m
                                      or min(cp.pi) < 0 or max(cp.pi) >= n):
                raise DomainError(f"explicit index set for eta={cp.eta} must hold {cp.m} distinct series in 0..{n - 1}")
            prev = cp.eta


@dataclass(frozen=True, eq=False)
class SignalTruth:
    etas: tuple[int, ...]
    sets: tuple[tuple[int, ...], ...]  # 0-based, sorted
    jumps: tuple[np.ndarray, ...]  # signed jump per series in the matching set


def gen_signal(spec: SignalSpec, n: int, T: int, seed=0) -> tuple[np.ndarray, SignalTruth]:
    """Piecewise-constant ``n x T`` mean; jump ``r`` applies from ``eta_r + 1`` on."""
    spec.validate(n, T)
    rng = _rng(seed)
    f = np.zeros((n, T))
    sets, jumps = [], []
    for cp in spec.change_points:
        pi = np.sort(rng.choice(n, size=cp.m, replace=False)) if cp.pi is None else np.sort(np.asarray(cp.pi))
        mag = rng.uniform((1 - cp.width) * cp.delta, (1 + cp.width) * cp.delta, size=cp.m)
        sign = np.where(rng.random(cp.m) < 0.5, -1.0, 1.0)
        d = sign * mag
        f[pi, cp.eta:] += d[:, None]
        sets.append(tuple(int(j) for j in pi))
        jumps.append(d)
    return f, SignalTruth(tuple(cp.eta for cp in spec.change_points), tuple(sets), tuple(jumps))


def rand_index(true_set, est_set, n: int) -> float:
    """Share of the ``n`` series classified alike (changed or unchanged) by both sets."""
    a = np.zeros(n, dtype=bool)
    b = np.zeros(n, dtype=bool)
    a[list(true_set)] = True
    b[list(est_set)] = True
    return float(np.mean(a == b))


_HARNESS = {"ExperimentPlan", "ExperimentResult", "parse_plan", "preset", "run_experiment"}


def __getattr__(name):
    # The Monte Carlo harness lives in ``experiment``, which itself imports this module.
    if name in _HARNESS:
        from . import experiment
        return getattr(experiment, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
