"""GDFM-based bootstrap of the null distribution of the scan statistic.

The standardised residual panel is split into a common component driven by
``q`` dynamic principal components and an idiosyncratic remainder.  Bootstrap
panels recombine i.i.d. redraws of the shocks pushed through the estimated
filters with a Local Bootstrap of the idiosyncratic Fourier coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import chunks, pmap, resolve_threads
from .cusum import DcMode, candidate_bounds
from .errors import ConfigError, DegenerateError, DimensionError, DomainError


@dataclass(frozen=True, eq=False)
class GdfmDecomposition:
    q: int
    shocks: np.ndarray  # (q, T)
    filter: np.ndarray  # (n, q, 2M + 1), lags -M .. M
    common: np.ndarray  # (n, T)
    idio: np.ndarray  # (n, T)

    @property
    def M(self) -> int:
        return (self.filter.shape[2] - 1) // 2


@dataclass(frozen=True, eq=False)
class BootstrapThreshold:
    window_len: int
    alpha: float
    B: int
    quantile: float
    replicate_stats: np.ndarray
    mode: str = ""


def empirical_quantile(stats, alpha: float) -> float:
    """Order statistic of rank ``ceil((1 - alpha) B)``."""
    a = np.sort(np.asarray(stats, dtype=np.float64).ravel())
    if a.size == 0:
        raise ConfigError("cannot take a quantile of zero replicates")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    rank = math.ceil((1.0 - alpha) * a.size - 1e-9)
    return float(a[min(max(rank, 1), a.size) - 1])


def max_factors(n: int, T: int) -> int:
    """``Q = floor(C / log C)`` with ``C = min(n, T)``."""
    C = min(n, T)
    return int(math.floor(C / math.log(C))) if C > 1 else 0


def information_criteria(E) -> np.ndarray:
    """Bai-Ng type criterion ``IC(k)`` for ``k = 0 .. Q``."""
    E = np.asarray(E, dtype=np.float64)
    n, T = E.shape
    lam = np.linalg.eigvalsh(E @ E.T / T)[::-1]
    total = float(np.sum(E * E) / T)
    if not total > 0:
        raise DegenerateError("residual panel is identically zero")
    C = min(n, T)
    Q = max_factors(n, T)
    remaining = total - np.concatenate([[0.0], np.cumsum(lam[:Q])])
    remaining = np.maximum(remaining, np.finfo(float).tiny)
    k = np.arange(Q + 1)
    return np.log(remaining) + k * math.log(C) / C


def estimate_factor_number(E) -> int:
    """Number of common shocks minimising the information criterion (ties to smaller k)."""
    E = np.asarray(E, dtype=np.float64)
    if E.shape[0] < 2:
        return 0
    return int(np.argmin(information_criteria(E)))


def _lag_covariances(E: np.ndarray, M: int) -> np.ndarray:
    n, T = E.shape
    return np.stack([E[:, k:] @ E[:, : T - k].T / T for k in range(M + 1)])


def _spectral_eigvecs(E: np.ndarray, q: int, M: int) -> np.ndarray:
    """Leading eigenvectors of the Bartlett lag-window spectrum at ``2 pi h / (2M + 1)``, h = 0..M.

    Phases are aligned from one frequency to the next so the eigenvectors vary
    smoothly; the zero-frequency vectors are real with non-negative sum.
    """
    n = E.shape[0]
    G = _lag_covariances(E, M)
    w = 1.0 - np.arange(M + 1) / (M + 1.0)
    P = np.empty((M + 1, n, q), dtype=np.complex128)
    for h in range(M + 1):
        theta = 2.0 * math.pi * h / (2 * M + 1)
        S = G[0].astype(np.complex128)
        for k in range(1, M + 1):
            z = np.exp(-1j * k * theta)
            S = S + w[k] * (G[k] * z + G[k].T * np.conj(z))
        _, vec = np.linalg.eigh(S)
        P[h] = vec[:, ::-1][:, :q]
    P[0] = P[0].real
    for l in range(q):
        if P[0, :, l].real.sum() < 0:
            P[0, :, l] *= -1
    for h in range(1, M + 1):
        for l in range(q):
            inner = np.vdot(P[h, :, l], P[h - 1, :, l])
            if abs(inner) > 0:
                P[h, :, l] *= inner / abs(inner)
    return P


def _lag_filters(P: np.ndarray) -> np.ndarray:
    """Inverse DFT over the symmetric frequency grid: real ``(n, q, 2M + 1)`` lags -M..M."""
    M = P.shape[0] - 1
    L = 2 * M + 1
    full = np.concatenate([np.conj(P[:0:-1]), P])  # h = -M .. M
    h = np.arange(-M, M + 1)
    ks = np.arange(-M, M + 1)
    phase = np.exp(1j * 2.0 * math.pi * np.outer(ks, h) / L)  # (k, h)
    b = np.einsum("kh,hnq->nqk", phase, full) / L
    return np.ascontiguousarray(b.real)


def _filter_response(filt: np.ndarray, T: int) -> np.ndarray:
    n, q, L = filt.shape
    M = (L - 1) // 2
    g = np.zeros((n, q, T))
    for i, k in enumerate(range(-M, M + 1)):
        g[:, :, k % T] += filt[:, :, i]
    return np.fft.fft(g, axis=2)


def apply_filter(filt: np.ndarray, shocks: np.ndarray) -> np.ndarray:
    """Circular convolution ``sum_k b_k u_{t-k}`` of ``(n, q, 2M+1)`` filters with ``(q, T)`` shocks."""
    shocks = np.asarray(shocks, dtype=np.float64)
    n, q, _ = filt.shape
    T = shocks.shape[1]
    if q == 0:
        return np.zeros((n, T))
    resp = _filter_response(filt, T)
    return np.fft.ifft(np.einsum("jlw,lw->jw", resp, np.fft.fft(shocks, axis=1)), axis=1).real


def decompose_gdfm(E, q: int, M: int | None = None) -> GdfmDecomposition:
    """Split ``E`` into common and idiosyncratic components with ``q`` dynamic factors.

    ``M`` is the Bartlett truncation of the spectral estimator and also the
    lag reach of the two-sided filters (default ``floor(sqrt(T))``).
    """
    E = np.asarray(E, dtype=np.float64)
    n, T = E.shape
    M = int(math.floor(math.sqrt(T))) if M is None else int(M)
    if M < 0 or 2 * M + 1 > T:
        raise DimensionError(f"spectral bandwidth M={M} needs 2M+1 <= T={T}")
    Q = max_factors(n, T)
    if q < 0 or q > Q:
        raise DomainError(f"number of factors q={q} outside 0..{Q}")
    if q == 0:
        return GdfmDecomposition(0, np.zeros((0, T)), np.zeros((n, 0, 2 * M + 1)), np.zeros((n, T)), E.copy())
    filt = _lag_filters(_spectral_eigvecs(E, q, M))
    resp = _filter_response(filt, T)
    shocks = np.fft.ifft(np.einsum("jlw,jw->lw", np.conj(resp), np.fft.fft(E, axis=1)), axis=1).real
    common = apply_filter(filt, shocks)
    return GdfmDecomposition(q, shocks, filt, common, E - common)


def resample_common(decomp: GdfmDecomposition, rng: np.random.Generator) -> np.ndarray:
    """Redraw every shock series i.i.d. from its own values and re-apply the filters."""
    n, T = decomp.common.shape
    if decomp.q == 0:
        return np.zeros((n, T))
    idx = rng.integers(0, T, size=(decomp.q, T))
    drawn = np.take_along_axis(decomp.shocks, idx, axis=1)
    return apply_filter(decomp.filter, drawn)


def default_kernel_window(T: int) -> int:
    return max(1, int(math.floor(0.05 * T)))


def _mirror(f: np.ndarray, K: int) -> np.ndarray:
    i = np.mod(f - 1, 2 * K)
    return np.where(i >= K, 2 * K - 1 - i, i) + 1


def local_bootstrap_idio(idio, kernel_window: int | None, rng: np.random.Generator) -> np.ndarray:
    """Local Bootstrap of Fourier coefficients with a Daniell kernel.

    For each frequency ``f = 1 .. T//2`` a replacement frequency is drawn
    uniformly from ``f - h .. f + h`` (reflected at the ends) and shared by
    all series; the mean coefficient is kept.  ``h = 0`` returns the input.
    """
    idio = np.asarray(idio, dtype=np.float64)
    n, T = idio.shape
    if T < 8:
        raise DimensionError(f"Local Bootstrap needs T >= 8, got {T}")
    h = default_kernel_window(T) if kernel_window is None else int(kernel_window)
    if h == 0:
        return idio.copy()
    K = T // 2
    F = np.fft.rfft(idio, axis=1)
    f = np.arange(1, K + 1)
    src = _mirror(f + rng.integers(-h, h + 1, size=K), K)
    G = F.copy()
    G[:, 1:] = F[:, src]
    if T % 2 == 0:
        z = F[:, src[-1]]
        G[:, K] = np.sign(z.real) * np.abs(z)
    return np.fft.irfft(G, n=T, axis=1)


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for replicate ``index`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


class GdfmBootstrap:
    """Bootstrap panels for one standardised residual panel, reused across windows.

    Replicate ``l`` depends only on ``(seed, l)``, so the replicate set is the
    same whatever the thread count or evaluation order.
    """

    def __init__(self, E, B: int = 100, seed: int = 0, *, q: int | None = None, M: int | None = None,
                 kernel_window: int | None = None, threads: int | None = None):
        E = np.asarray(E, dtype=np.float64)
        if B < 1:
            raise ConfigError(f"bootstrap size B must be >= 1, got {B}")
        if seed < 0:
            raise ConfigError(f"seed must be non-negative, got {seed}")
        self.n, self.T = E.shape
        self.B = int(B)
        self.seed = int(seed)
        self.threads = resolve_threads(threads)
        self.q = estimate_factor_number(E) if q is None else int(q)
        self.decomp = decompose_gdfm(E, self.q, M)
        self.kernel_window = default_kernel_window(self.T) if kernel_window is None else int(kernel_window)
        self.replicates = np.stack(pmap(self._replicate, range(self.B), self.threads))
        self._stats: dict = {}
        self._shared: tuple = ()

    def _replicate(self, l: int) -> np.ndarray:
        rng = replicate_rng(self.seed, l)
        common = resample_common(self.decomp, rng)
        return common + local_bootstrap_idio(self.decomp.idio, self.kernel_window, rng)

    def share_modes(self, modes) -> None:
        """Evaluate ``modes`` alongside any later request so the sorts are shared."""
        self._shared = tuple(dict.fromkeys(list(self._shared) + list(modes)))

    def window_statistics(self, modes, window_len: int, d_T: int | None) -> np.ndarray:
        """``(B, len(modes), T - window_len + 1)`` scan statistics of every moving window."""
        modes = list(modes)
        if not 2 <= window_len <= self.T:
            raise DimensionError(f"window length {window_len} outside 2..{self.T}")
        missing = [md for md in dict.fromkeys(modes + list(self._shared)) if (window_len, d_T, md) not in self._stats]
        if any(md in modes for md in missing):
            first, last = candidate_bounds(1, window_len, d_T)
            W = np.ascontiguousarray(np.stack([md.weights(self.n) for md in missing]))
            X = self.replicates

            def run(rows):
                return _kernels.window_stats_batch(X[rows.start:rows.stop], window_len, first - 1, last, W)

            stats = np.concatenate(pmap(run, chunks(self.B, self.threads), self.threads), axis=0)
            for k, md in enumerate(missing):
                self._stats[(window_len, d_T, md)] = stats[:, k]
        return np.stack([self._stats[(window_len, d_T, md)] for md in modes], axis=1)

    def statistics(self, modes, window_len: int, d_T: int | None, rule: str = "max") -> np.ndarray:
        """Replicate statistics behind a threshold, one column per mode.

        ``rule="max"`` gives the ``(B, K)`` maxima over all moving windows;
        ``rule="pooled"`` gives every window statistic of every replicate,
        shape ``(B * (T - window_len + 1), K)``.
        """
        S = self.window_statistics(modes, window_len, d_T)
        if rule == "max":
            return S.max(axis=2)
        if rule == "pooled":
            return np.ascontiguousarray(S.transpose(0, 2, 1).reshape(-1, S.shape[1]))
        raise ConfigError(f"window rule must be 'max' or 'pooled', got {rule!r}")

    def threshold(self, mode: DcMode, window_len: int, alpha: float, d_T: int | None = 5,
                  rule: str = "max") -> BootstrapThreshold:
        stats = self.statistics([mode], window_len, d_T, rule)[:, 0]
        return BootstrapThreshold(window_len, alpha, self.B, empirical_quantile(stats, alpha), stats.copy(), mode.label)


def bootstrap_threshold(panel, config, window_len: int | None = None) -> BootstrapThreshold:
    """Scale, decompose and resample ``panel``; return the (1 - alpha) threshold.

    ``config`` is a :class:`panelseg.config.DetectorConfig`; its ``alpha_star``
    is used as is (no multiplicity correction).
    """
    from .scaling import estimate_scales

    if config.B < 1:
        raise ConfigError(f"bootstrap size B must be >= 1, got {config.B}")
    T = panel.T
    window_len = T if window_len is None else window_len
    if window_len > T:
        raise DimensionError(f"window length {window_len} exceeds T={T}")
    est = estimate_scales(panel, config.depth_for(T))
    E = est.residuals / est.scales[:, None]
    boot = GdfmBootstrap(E, config.B, config.seed, threads=config.threads)
    return boot.threshold(config.mode, window_len, config.alpha_star, config.d_T, config.window_rule)
