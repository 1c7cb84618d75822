"""Double CUSUM Binary Segmentation, post-processing and the detection pipeline."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import __version__
from .bootstrap import GdfmBootstrap
from .config import DetectorConfig
from .cusum import CusumScanResult, DcMode, dc_scan
from .errors import DegenerateError, ThresholdError, WindowTooShortError
from .panel_core import PanelData, ScaledPanel, standardize
from .scaling import ScalingEstimate, estimate_scales

ThresholdFn = Callable[[int], float]


@dataclass(eq=False)
class SegmentNode:
    """Node ``(level, position)`` of the segmentation tree on window ``[s, e]``."""

    level: int
    position: int
    s: int
    e: int
    verdict: str = "pending"
    stat: float | None = None
    threshold: float | None = None
    scan: CusumScanResult | None = None
    children: list["SegmentNode"] = field(default_factory=list)

    def leaves(self) -> list["SegmentNode"]:
        if not self.children:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]

    def to_dict(self) -> dict:
        d = {"level": self.level, "position": self.position, "s": self.s, "e": self.e, "verdict": self.verdict}
        if self.stat is not None:
            d["stat"] = self.stat
            d["threshold"] = self.threshold
        if self.scan is not None and self.verdict == "split":
            d["eta"] = self.scan.b_hat
            d["m"] = self.scan.m_hat
        if self.children:
            d["children"] = [c.to_dict() for c in self.children]
        return d


@dataclass(frozen=True)
class ChangePoint:
    eta: int
    m_hat: int
    contributors: tuple[int, ...]  # 0-based series indices
    stat: float
    threshold: float
    survived: bool = True
    recheck: tuple[int, int, float, float] | None = None  # (s, e, stat, threshold)

    def to_dict(self) -> dict:
        d = {
            "eta": self.eta,
            "m": self.m_hat,
            "contributors": [j + 1 for j in self.contributors],
            "stat": self.stat,
            "threshold": self.threshold,
            "survived": self.survived,
        }
        if self.recheck is not None:
            s, e, st, thr = self.recheck
            d["recheck"] = {"s": s, "e": e, "stat": st, "threshold": thr}
        return d


@dataclass(eq=False)
class ChangePointReport:
    change_points: list[ChangePoint]
    tree: SegmentNode
    n: int
    T: int
    config: dict = field(default_factory=dict)

    @property
    def survivors(self) -> list[ChangePoint]:
        return [cp for cp in self.change_points if cp.survived]

    @property
    def etas(self) -> list[int]:
        """Locations of the change-points that survived post-processing."""
        return [cp.eta for cp in self.survivors]

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "n": self.n,
            "T": self.T,
            "config": self.config,
            "change_points": [cp.to_dict() for cp in self.change_points],
            "tree": self.tree.to_dict(),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _min_scan_length(d_T: int | None) -> int:
    return 2 if d_T is None else 2 * d_T + 4


def _threshold(fn: ThresholdFn, node_desc: str, length: int) -> float:
    try:
        return float(fn(length))
    except Exception as exc:
        raise ThresholdError(f"threshold for {node_desc} (length {length}) failed: {exc}") from exc


def dcbs_run(panel: ScaledPanel, mode: DcMode, threshold_fn: ThresholdFn, d_T: int | None = 5) -> ChangePointReport:
    """Breadth-first binary segmentation driven by the double CUSUM scan.

    A node is split at the scan argmax when its statistic exceeds
    ``threshold_fn(e - s + 1)``; windows shorter than ``2 d_T + 4`` are
    marked ``too_short`` and never scanned.
    """
    v = np.ascontiguousarray(panel.values)
    n, T = v.shape
    if T < _min_scan_length(d_T):
        raise WindowTooShortError(f"T={T} is shorter than 2*d_T+4={_min_scan_length(d_T)}")
    root = SegmentNode(1, 1, 1, T)
    level, found = [root], []
    while level:
        nxt = []
        for node in level:
            length = node.e - node.s + 1
            if length < _min_scan_length(d_T):
                node.verdict = "too_short"
                continue
            scan = dc_scan(v, node.s, node.e, mode, d_T)
            thr = _threshold(threshold_fn, f"node (p={node.level}, q={node.position}) [{node.s}, {node.e}]", length)
            node.stat, node.threshold, node.scan = scan.stat, thr, scan
            if scan.stat > thr:
                node.verdict = "split"
                b = scan.b_hat
                node.children = [
                    SegmentNode(node.level + 1, 2 * node.position - 1, node.s, b),
                    SegmentNode(node.level + 1, 2 * node.position, b + 1, node.e),
                ]
                nxt += node.children
                found.append(ChangePoint(b, scan.m_hat, tuple(int(j) for j in scan.contributors), scan.stat, thr))
            else:
                node.verdict = "stop"
        level = nxt
    found.sort(key=lambda cp: cp.eta)
    return ChangePointReport(found, root, n, T)


def post_process(panel: ScaledPanel, report: ChangePointReport, mode: DcMode, threshold_fn: ThresholdFn,
                 d_T: int | None = 5) -> ChangePointReport:
    """Re-test every estimate on the window halfway to its neighbours.

    The half-width is ``min(gap_left, gap_right) // 2`` over all estimates
    (removed ones included, so repeated application is idempotent), floored
    at ``d_T + 2``.  Estimates whose re-test does not exceed the threshold are
    flagged ``survived=False`` and kept in the report.
    """
    v = np.ascontiguousarray(panel.values)
    T = v.shape[1]
    etas = [cp.eta for cp in report.change_points]
    bounds = [0] + etas + [T]
    floor = (d_T if d_T is not None else 0) + 2
    out = []
    for r, cp in enumerate(report.change_points, start=1):
        half = max(min(bounds[r] - bounds[r - 1], bounds[r + 1] - bounds[r]) // 2, floor)
        s, e = max(1, cp.eta - half), min(T, cp.eta + half)
        scan = dc_scan(v, s, e, mode, d_T)
        thr = _threshold(threshold_fn, f"post-processing of eta={cp.eta} [{s}, {e}]", e - s + 1)
        out.append(replace(cp, survived=scan.stat > thr, recheck=(s, e, scan.stat, thr)))
    return ChangePointReport(out, report.tree, report.n, report.T, dict(report.config))


def _prepare_scales(panel: PanelData, depth: int) -> tuple[ScalingEstimate, np.ndarray]:
    """Scale estimate with exactly constant series mapped to unit scale.

    Constant series carry zero CUSUMs whatever their scale; any other series
    whose residuals vanish is an error.
    """
    x = panel.values
    constant = np.ptp(x, axis=1) == 0
    if np.all(constant):
        n, T = x.shape
        return ScalingEstimate(np.ones(n), np.ones(n, dtype=np.int64), np.zeros((n, T))), constant
    if not np.any(constant):
        return estimate_scales(panel, depth), constant
    idx = np.flatnonzero(~constant)
    try:
        sub = estimate_scales(PanelData(x[idx]), depth)
    except DegenerateError as exc:
        j = int(str(exc).split()[1].rstrip(":")) - 1
        raise DegenerateError(str(exc).replace(f"series {j + 1}", f"series {idx[j] + 1}", 1)) from None
    sigma2 = np.ones(x.shape[0])
    tau = np.ones(x.shape[0], dtype=np.int64)
    resid = np.zeros(x.shape)
    sigma2[idx], tau[idx], resid[idx] = sub.sigma2, sub.tau, sub.residuals
    return ScalingEstimate(sigma2, tau, resid), constant


@dataclass(eq=False)
class DetectionContext:
    """Everything shared by detectors run on the same panel: scales and bootstrap."""

    scaled: ScaledPanel
    scaling: ScalingEstimate
    boot: GdfmBootstrap | None
    d_T: int
    window_rule: str = "max"

    @classmethod
    def build(cls, panel: PanelData, config: DetectorConfig) -> "DetectionContext":
        est, constant = _prepare_scales(panel, config.depth_for(panel.T))
        scaled = standardize(panel, est.scales)
        boot = None
        if not np.all(constant):
            E = est.residuals / est.scales[:, None]
            boot = GdfmBootstrap(E, config.B, config.seed, threads=config.threads)
        return cls(scaled, est, boot, config.d_T, config.window_rule)

    def threshold_fn(self, mode: DcMode, alpha: float) -> ThresholdFn:
        if self.boot is None:
            return lambda length: 0.0
        return lambda length: self.boot.threshold(mode, length, alpha, self.d_T, self.window_rule).quantile

    def segment(self, mode: DcMode, alpha: float) -> ChangePointReport:
        fn = self.threshold_fn(mode, alpha)
        report = dcbs_run(self.scaled, mode, fn, self.d_T)
        return post_process(self.scaled, report, mode, fn, self.d_T)


def run_detection(panel: PanelData, config: DetectorConfig) -> tuple[ChangePointReport, DetectionContext]:
    """:func:`detect` that also returns the scales and bootstrap it used."""
    ctx = DetectionContext.build(panel, config)
    report = ctx.segment(config.mode, config.alpha_for(panel.T))
    report.config = config.to_dict(panel.T)
    report.config["q"] = None if ctx.boot is None else ctx.boot.q
    report.config["scales"] = [float(s) for s in ctx.scaled.scales]
    return report, ctx


def detect(panel: PanelData, config: DetectorConfig = DetectorConfig()) -> ChangePointReport:
    """Scale, bootstrap thresholds, segment and post-process ``panel``.

    Deterministic given ``config.seed``.

    Raises:
        DegenerateError: a non-constant series has vanishing residuals.
    """
    return run_detection(panel, config)[0]
