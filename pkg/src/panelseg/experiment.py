"""Monte Carlo harness: plans, presets, detectors and the metrics tables.

A plan fixes a noise model, an optional signal, a list of detectors and the
number of replications.  Null runs (noise only) give the Type I error and the
critical values for size correction; alternative runs (signal plus noise)
give power, location accuracy, Rand index and, for multiple change-points,
the distribution of the estimated number of change-points.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Union

import numpy as np

from . import __version__
from ._parallel import pmap
from .bootstrap import GdfmBootstrap, empirical_quantile
from .reference_detectors import (
    eh_statistics, jirak_statistic, jirak_threshold, max_abs_cusum, sbs_oracle_threshold, sbs_statistic,
)
from .config import DetectorConfig
from .cusum import DcMode, cusum_matrix, dc_scan
from .dcbs import DetectionContext
from .errors import ConfigError, DomainError
from .panel_core import PanelData
from .simgen import ChangeSpec, NoiseModelSpec, SignalSpec, SignalTruth, gen_noise, gen_signal, rand_index

COMPETITORS = ("sbs", "jirak", "eh")
NULL, ALT, ORACLE = 0, 1, 2


@dataclass(frozen=True)
class Outcome:
    """What a detector reports on one panel.

    ``score`` is a statistic whose exceedance of a critical value is the
    detector's decision; it is what size correction thresholds.
    """

    score: float
    rejected: bool
    etas: tuple[int, ...] = ()
    contributors: tuple[tuple[int, ...], ...] = ()


DetectorFn = Callable[[PanelData, int], Outcome]
Detector = Union[str, DetectorFn]


@dataclass(frozen=True)
class ExperimentPlan:
    name: str = "custom"
    kind: str = "single"
    noise: NoiseModelSpec = field(default_factory=NoiseModelSpec)
    signal: SignalSpec = field(default_factory=SignalSpec)
    detectors: tuple = ("phi=0", "phi=0.5", "combined")
    reps: int = 100
    null_reps: int | None = None
    alpha: float = 0.05
    B: int = 100
    d_T: int = 5
    seed: int = 0
    threads: int | None = None
    window_rule: str = "max"

    def __post_init__(self):
        if self.window_rule not in ("max", "pooled"):
            raise ConfigError(f"window rule must be 'max' or 'pooled', got {self.window_rule!r}")
        if self.kind not in ("single", "multi"):
            raise ConfigError(f"kind must be 'single' or 'multi', got {self.kind!r}")
        if self.reps < 1:
            raise ConfigError(f"replication count must be >= 1, got {self.reps}")
        if self.null_reps is not None and self.null_reps < 0:
            raise ConfigError(f"null replication count must be >= 0, got {self.null_reps}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.B < 1:
            raise ConfigError(f"bootstrap size B must be >= 1, got {self.B}")
        for d in self.detectors:
            if isinstance(d, str):
                if self.kind == "multi" and d in COMPETITORS:
                    raise ConfigError(f"detector {d!r} has no multiple change-point driver; use DC modes")
                if d not in COMPETITORS:
                    DcMode.parse(d)
        self.signal.validate(self.noise.n, self.noise.T)

    @property
    def has_alternative(self) -> bool:
        return bool(self.signal.change_points)

    @property
    def n_null(self) -> int:
        if self.null_reps is not None:
            return self.null_reps
        if self.kind == "multi" and self.has_alternative:
            return 0
        return self.reps

    @property
    def n_alt(self) -> int:
        return self.reps if self.has_alternative else 0

    def detector_names(self) -> list[str]:
        return [d if isinstance(d, str) else getattr(d, "__name__", "custom") for d in self.detectors]

    def to_dict(self) -> dict:
        return {
            "name": self.name, "kind": self.kind, "noise": asdict(self.noise),
            "signal": [{"eta": c.eta, "m": c.m, "delta": c.delta} for c in self.signal.change_points],
            "detectors": self.detector_names(), "reps": self.reps, "null_reps": self.n_null,
            "alpha": self.alpha, "B": self.B, "d_T": self.d_T, "seed": self.seed,
            "window_rule": self.window_rule,
        }


def preset(name: str, n: int | None = None, T: int | None = None) -> ExperimentPlan:
    """Desk-scale versions of the paper's simulation settings."""
    if name == "type1-n1":
        n, T = n or 50, T or 100
        return ExperimentPlan(name, "single", NoiseModelSpec("n1", 0.2, n, T),
                              detectors=("phi=0", "phi=0.5", "combined") + COMPETITORS)
    if name == "single":
        n, T = n or 100, T or 100
        return ExperimentPlan(name, "single", NoiseModelSpec("n1", 0.2, n, T),
                              SignalSpec.fractions(T, n, [(0.5, 0.4, 0.1)]),
                              detectors=("phi=0", "phi=0.5", "combined") + COMPETITORS)
    if name == "strong-factor":
        n, T = n or 100, T or 100
        sig = SignalSpec((ChangeSpec(int(math.floor(0.5 * T)), math.isqrt(n), 0.1),))
        return ExperimentPlan(name, "single", NoiseModelSpec("n2", 0.9, n, T), sig,
                              detectors=("phi=0", "phi=0.5", "combined") + COMPETITORS)
    if name == "multi":
        n, T = n or 100, T or 250
        sig = SignalSpec.fractions(T, n, [(0.3, 0.75, 0.05), (0.6, 0.25, 0.087), (0.8, 0.1, 0.14)])
        return ExperimentPlan(name, "multi", NoiseModelSpec("n1", 0.2, n, T), sig,
                              detectors=("phi=0", "phi=0.5", "combined"), reps=50)
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


PRESETS = ("type1-n1", "single", "strong-factor", "multi")

_INT_KEYS = {"n", "T", "burn_in", "reps", "null_reps", "B", "d_T", "seed"}
_FLOAT_KEYS = {"rho", "alpha", "sigma_v"}


def parse_plan(text: str) -> ExperimentPlan:
    """Parse a ``key = value`` plan; ``#`` starts a comment.

    Keys: ``preset``, ``name``, ``kind``, ``model``, ``rho``, ``n``, ``T``,
    ``burn_in``, ``sigma_v``, ``reps``, ``null_reps``, ``alpha``, ``B``,
    ``d_T``, ``seed``, ``detectors`` (``;``-separated) and repeatable
    ``change = eta_frac, m_frac, delta``.
    """
    fields: dict = {}
    changes: list[tuple[int, tuple[float, float, float]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"plan line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                fields[key] = int(value)
            elif key in _FLOAT_KEYS:
                fields[key] = float(value)
            elif key in ("preset", "name", "kind", "model", "window_rule"):
                fields[key] = value
            elif key == "detectors":
                fields[key] = tuple(d.strip() for d in value.split(";") if d.strip())
            elif key == "change":
                parts = [float(p) for p in value.split(",")]
                if len(parts) != 3:
                    raise ValueError("change needs 'eta_frac, m_frac, delta'")
                changes.append((lineno, tuple(parts)))
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"plan line {lineno}: {exc}") from None
    try:
        base = preset(fields["preset"], fields.get("n"), fields.get("T")) if "preset" in fields else ExperimentPlan()
        noise = base.noise
        noise_kw = {k: fields[k] for k in ("rho", "n", "T", "burn_in", "sigma_v") if k in fields}
        if "model" in fields:
            noise_kw["model"] = fields["model"]
        noise = replace(noise, **noise_kw)
        signal = base.signal
        if changes:
            signal = SignalSpec.fractions(noise.T, noise.n, [c for _, c in changes])
        plan_kw = {k: fields[k] for k in ("name", "kind", "detectors", "reps", "null_reps", "alpha", "B", "d_T", "seed",
                                          "window_rule")
                   if k in fields}
        return replace(base, noise=noise, signal=signal, **plan_kw)
    except (ConfigError, DomainError) as exc:
        where = f" (change on line {changes[-1][0]})" if changes and "eta" in str(exc) else ""
        raise ConfigError(f"invalid plan{where}: {exc}") from None


def _stream(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=tuple(key))


def _subseed(seed: int, *key: int) -> int:
    return int(_stream(seed, *key).generate_state(1, np.uint64)[0])


def simulate_run(plan: ExperimentPlan, phase: int, r: int) -> tuple[PanelData, PanelData, SignalTruth | None]:
    """Observed panel, its noise and the truth of replication ``r`` (``phase`` is ``NULL`` or ``ALT``)."""
    noise = gen_noise(plan.noise, np.random.default_rng(_stream(plan.seed, phase, r, 0)))
    if phase == NULL:
        return noise, noise, None
    f, truth = gen_signal(plan.signal, plan.noise.n, plan.noise.T, np.random.default_rng(_stream(plan.seed, phase, r, 1)))
    return PanelData(noise.values + f), noise, truth


class _Runner:
    """Evaluates every string detector of a plan on one panel, sharing scales and bootstrap."""

    def __init__(self, plan: ExperimentPlan):
        self.plan = plan
        self.modes = {d: DcMode.parse(d) for d in plan.detectors if isinstance(d, str) and d not in COMPETITORS}
        # single change-point tests scale with one split per series, DCBS with the full tree
        depth = 1 if plan.kind == "single" else None
        self.config = DetectorConfig(alpha_star=plan.alpha, B=plan.B, d_T=plan.d_T, L_T=depth, threads=1,
                                     window_rule=plan.window_rule)

    def __call__(self, panel: PanelData, noise: PanelData, boot_seed: int) -> dict[str, Outcome]:
        plan = self.plan
        T = panel.T
        needs_ctx = any(isinstance(d, str) for d in plan.detectors)
        ctx = DetectionContext.build(panel, replace(self.config, seed=boot_seed)) if needs_ctx else None
        if ctx is not None and ctx.boot is not None:
            ctx.boot.share_modes(list(self.modes.values()))
        out: dict[str, Outcome] = {}
        for d in plan.detectors:
            if not isinstance(d, str):
                out[getattr(d, "__name__", "custom")] = d(panel, boot_seed)
            elif d in self.modes:
                out[d] = self._dc(ctx, self.modes[d], T)
            elif d == "sbs":
                out[d] = self._sbs(ctx, noise, boot_seed)
            elif d == "jirak":
                out[d] = self._jirak(ctx, boot_seed)
            else:
                eh = eh_statistics(ctx.scaled, plan.alpha, d_T=plan.d_T)
                out[d] = Outcome(max(eh.linear, eh.scan), eh.combined_reject)
        return out

    def _dc(self, ctx: DetectionContext, mode: DcMode, T: int) -> Outcome:
        if self.plan.kind == "multi":
            report = ctx.segment(mode, self.config.alpha_for(T))
            root = report.tree.stat if report.tree.stat is not None else 0.0
            keep = report.survivors
            return Outcome(root, bool(keep), tuple(c.eta for c in keep), tuple(c.contributors for c in keep))
        scan = dc_scan(ctx.scaled, 1, T, mode, self.plan.d_T)
        thr = ctx.threshold_fn(mode, self.plan.alpha)(T)
        return Outcome(scan.stat, scan.stat > thr, (scan.b_hat,), (tuple(int(j) for j in scan.contributors),))

    def _sbs(self, ctx: DetectionContext, noise: PanelData, boot_seed: int) -> Outcome:
        # oracle threshold: the bootstrap run on the true (unobservable) noise
        d_T = self.plan.d_T
        E = noise.values / ctx.scaled.scales[:, None]
        boot = GdfmBootstrap(E, self.plan.B, _subseed(boot_seed, ORACLE), threads=1)
        pi = sbs_oracle_threshold(list(boot.replicates), self.plan.alpha, d_T)
        score = max_abs_cusum(ctx.scaled, d_T)
        _, b = sbs_statistic(ctx.scaled, pi_T=pi, d_T=d_T)
        col = np.abs(cusum_matrix(ctx.scaled)[:, b - 1])
        return Outcome(score, score > pi, (b,), (tuple(int(j) for j in np.flatnonzero(col > pi)),))

    def _jirak(self, ctx: DetectionContext, boot_seed: int) -> Outcome:
        stat, b = jirak_statistic(ctx.scaled, self.plan.d_T)
        E = ctx.scaling.residuals / ctx.scaled.scales[:, None]
        thr = jirak_threshold(E, self.plan.alpha, self.plan.B, _subseed(boot_seed, ORACLE), d_T=self.plan.d_T)
        return Outcome(stat, stat > thr, (b,), ())


@dataclass
class DetectorMetrics:
    detector: str
    type1: float | None = None
    critical_value: float | None = None
    power: float | None = None
    size_corrected_power: float | None = None
    location_accuracy: float | None = None
    rand_index: float | None = None
    nhat_histogram: dict | None = None
    eta_accuracy: list | None = None


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    metrics: list[DetectorMetrics]
    null_outcomes: dict[str, list[Outcome]]
    alt_outcomes: dict[str, list[Outcome]]

    def by_name(self, name: str) -> DetectorMetrics:
        for m in self.metrics:
            if m.detector == name:
                return m
        raise KeyError(name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        nhat_keys = ["0", "1", "2", "3", "4", ">=5"]
        cols = ["detector", "type1", "critical_value", "power", "size_corrected_power", "location_accuracy",
                "rand_index"]
        if self.plan.kind == "multi":
            cols += [f"nhat_{k}" for k in nhat_keys] + [f"eta{r + 1}_accuracy"
                                                         for r in range(len(self.plan.signal.change_points))]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for m in self.metrics:
            row = [m.detector] + [_fmt(getattr(m, c)) for c in cols[1:7]]
            if self.plan.kind == "multi":
                hist = m.nhat_histogram or {}
                row += [_fmt(hist.get(k)) for k in nhat_keys] + [_fmt(a) for a in (m.eta_accuracy or [])]
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"version": __version__, "plan": self.plan.to_dict(), "metrics": [asdict(m) for m in self.metrics]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(round(x, 10))
    return str(x)


def _accurate(etas, eta: int, T: int) -> bool:
    return any(abs(e - eta) < math.log(T) for e in etas)


def summarize(plan: ExperimentPlan, name: str, null: list[Outcome], alt: list[Outcome],
              truths: list[SignalTruth]) -> DetectorMetrics:
    m = DetectorMetrics(name)
    T, n = plan.noise.T, plan.noise.n
    if null:
        m.type1 = float(np.mean([o.rejected for o in null]))
        m.critical_value = empirical_quantile([o.score for o in null], plan.alpha)
    if not alt:
        return m
    m.power = float(np.mean([o.rejected for o in alt]))
    if m.critical_value is not None:
        m.size_corrected_power = float(np.mean([o.score > m.critical_value for o in alt]))
    if plan.kind == "single":
        eta = truths[0].etas[0]
        m.location_accuracy = float(np.mean([o.rejected and _accurate(o.etas, eta, T) for o in alt]))
        ri = [rand_index(t.sets[0], o.contributors[0], n) for o, t in zip(alt, truths) if o.rejected and o.contributors]
        m.rand_index = float(np.mean(ri)) if ri else float("nan")
    else:
        counts = [len(o.etas) for o in alt]
        hist = {str(k): 0 for k in range(5)}
        hist[">=5"] = 0
        for c in counts:
            hist[str(c) if c < 5 else ">=5"] += 1
        m.nhat_histogram = {k: v / len(alt) for k, v in hist.items()}
        m.eta_accuracy = [float(np.mean([_accurate(o.etas, e, T) for o in alt])) for e in truths[0].etas]
    return m


def run_experiment(plan: ExperimentPlan) -> ExperimentResult:
    """Run every replication of ``plan``; results depend only on ``plan.seed``."""
    names = plan.detector_names()
    if len(set(names)) != len(names):
        raise ConfigError(f"detector names must be unique, got {names}")
    runner = _Runner(plan)

    def one(job):
        phase, r = job
        panel, noise, truth = simulate_run(plan, phase, r)
        return runner(panel, noise, _subseed(plan.seed, phase, r, 2)), truth

    jobs = [(NULL, r) for r in range(plan.n_null)] + [(ALT, r) for r in range(plan.n_alt)]
    results = pmap(one, jobs, plan.threads)
    null = results[:plan.n_null]
    alt = results[plan.n_null:]
    truths = [t for _, t in alt]
    null_out = {k: [o[k] for o, _ in null] for k in names}
    alt_out = {k: [o[k] for o, _ in alt] for k in names}
    metrics = [summarize(plan, k, null_out[k], alt_out[k], truths) for k in names]
    return ExperimentResult(plan, metrics, null_out, alt_out)
