"""Command-line front end: ``detect``, ``threshold``, ``simulate`` and ``benchmark``.

Exit codes: 0 on success, 1 when the numerical pipeline fails (degenerate
scaling, failing thresholds), 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import GdfmBootstrap
from .config import DetectorConfig
from .cusum import DcMode
from .dcbs import DetectionContext, run_detection
from .errors import DegenerateError, PanelsegError, ThresholdError
from .experiment import PRESETS, parse_plan, preset, run_experiment
from .panel_core import PanelData, load_csv, write_csv
from .simgen import NoiseModelSpec, SignalSpec, gen_noise, gen_signal

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


def _mode(text: str) -> DcMode:
    try:
        return DcMode.parse(text)
    except PanelsegError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV panel, one series per row")
    p.add_argument("--header", action="store_true", help="skip the first CSV row")
    p.add_argument("--mode", type=_mode, default=DcMode.combined(), help="phi=<v> or combined[,gamma=<v>]")
    p.add_argument("--alpha", type=float, default=0.05, help="overall significance level")
    p.add_argument("--boot-reps", type=_positive_int, default=100, help="bootstrap replications B")
    p.add_argument("--trim", type=int, default=5, help="trim width d_T")
    p.add_argument("--depth", type=_positive_int, default=None, help="tree depth L_T (default log2(log T + 1))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=None, help="worker threads (env PANELSEG_THREADS)")
    p.add_argument("--window-rule", choices=("max", "pooled"), default="max",
                   help="sub-window thresholds from per-replicate maxima or pooled window statistics")
    p.add_argument("--dump-boot", default=None, help="write bootstrap replicate statistics to this CSV")


def _config(args, bonferroni: bool = True) -> DetectorConfig:
    return DetectorConfig(mode=args.mode, alpha_star=args.alpha, B=args.boot_reps, d_T=args.trim, L_T=args.depth,
                          seed=args.seed, bonferroni=bonferroni, threads=args.threads, window_rule=args.window_rule)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump_boot(path: str, boot: GdfmBootstrap | None, mode: DcMode, d_T: int, rule: str, lengths) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window_len", "replicate", "stat"])
    if boot is not None:
        for length in sorted(set(lengths)):
            stats = boot.statistics([mode], length, d_T, rule)[:, 0]
            for l, v in enumerate(stats, start=1):
                w.writerow([length, l, repr(float(v))])
    Path(path).write_text(buf.getvalue())


def cmd_detect(args) -> int:
    panel = load_csv(args.input, args.header)
    config = _config(args, bonferroni=not args.no_bonferroni)
    report, ctx = run_detection(panel, config)
    _emit(report.to_json() + "\n", args.output)
    if args.dump_boot:
        lengths = [cp.recheck[1] - cp.recheck[0] + 1 for cp in report.change_points]
        stack = [report.tree]
        while stack:
            node = stack.pop()
            if node.threshold is not None:
                lengths.append(node.e - node.s + 1)
            stack += node.children
        _dump_boot(args.dump_boot, ctx.boot, config.mode, config.d_T, config.window_rule, lengths)
    return EXIT_OK


def cmd_threshold(args) -> int:
    panel = load_csv(args.input, args.header)
    config = _config(args, bonferroni=False)
    length = panel.T if args.window_len is None else args.window_len
    ctx = DetectionContext.build(panel, config)
    if ctx.boot is None:
        quantile = 0.0
    else:
        quantile = ctx.boot.threshold(config.mode, length, config.alpha_star, config.d_T, config.window_rule).quantile
    out = {"version": __version__, "config": config.to_dict(panel.T), "window_len": length,
           "q": None if ctx.boot is None else ctx.boot.q, "threshold": quantile}
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    if args.dump_boot:
        _dump_boot(args.dump_boot, ctx.boot, config.mode, config.d_T, config.window_rule, [length])
    return EXIT_OK


def _change(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        parts = ()
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected eta_frac,m_frac,delta; got {text!r}")
    return parts


def cmd_simulate(args) -> int:
    spec = NoiseModelSpec(args.model, args.rho, args.n, args.T, args.burn_in)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    values = gen_noise(spec, rng).values
    if args.change:
        f, _ = gen_signal(SignalSpec.fractions(args.T, args.n, args.change), args.n, args.T, rng)
        values = values + f
    write_csv(args.out, PanelData(values))
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.plan:
        try:
            text = Path(args.plan).read_text()
        except OSError as exc:
            raise _UsageError(f"--plan: cannot read {args.plan}: {exc.strerror}") from None
        plans = [parse_plan(text)]
    elif args.preset:
        plans = [preset(args.preset)]
    elif args.paper_table:
        plans = [preset(p) for p in PRESETS]
    else:
        raise _UsageError("benchmark needs --preset, --plan or --paper-table")
    overrides = {"threads": args.threads}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.boot_reps is not None:
        overrides["B"] = args.boot_reps
    if args.detectors:
        overrides["detectors"] = tuple(d.strip() for d in args.detectors.split(";") if d.strip())
    if args.window_rule is not None:
        overrides["window_rule"] = args.window_rule
    tables, summaries = [], []
    for plan in plans:
        plan = replace(plan, **overrides)
        result = run_experiment(plan)
        tables.append((f"# {plan.name}\n" if len(plans) > 1 else "") + result.to_csv())
        summaries.append(result.to_dict())
    text = "\n".join(tables)
    if args.out:
        Path(args.out).write_text(text)
        summary = summaries[0] if len(summaries) == 1 else {"version": __version__, "experiments": summaries}
        Path(args.out).with_suffix(".json").write_text(json.dumps(summary, indent=2) + "\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="panelseg", description="Change-point detection in high-dimensional panels.")
    parser.add_argument("--version", action="version", version=f"panelseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="segment a panel and report change-points as JSON")
    _add_detector_flags(p)
    p.add_argument("--output", default=None, help="JSON report path (default stdout)")
    p.add_argument("--no-bonferroni", action="store_true", help="use --alpha at every node")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("threshold", help="bootstrap test criterion for one window length")
    _add_detector_flags(p)
    p.add_argument("--window-len", type=_positive_int, default=None, help="window length (default T)")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("simulate", help="draw a panel from a noise model, optionally with change-points")
    p.add_argument("--model", choices=("n1", "n2"), default="n1")
    p.add_argument("--rho", type=float, default=0.2, help="spatial weight (n1) or factor loading (n2)")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--T", type=_positive_int, required=True)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--change", type=_change, action="append", default=[],
                   help="eta_frac,m_frac,delta (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=None, help="accepted for uniformity; drawing is serial")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="Monte Carlo metrics for a preset or plan file")
    p.add_argument("--preset", choices=PRESETS, default=None)
    p.add_argument("--plan", default=None, help="key = value plan file")
    p.add_argument("--paper-table", action="store_true", help="run every preset (desk-scale paper tables)")
    p.add_argument("--reps", type=_positive_int, default=None)
    p.add_argument("--boot-reps", type=_positive_int, default=None)
    p.add_argument("--detectors", default=None, help="';'-separated detector list")
    p.add_argument("--window-rule", choices=("max", "pooled"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=_positive_int, default=None)
    p.add_argument("--out", default=None, help="CSV path; a JSON summary is written next to it")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DegenerateError, ThresholdError) as exc:
        print(f"panelseg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PanelsegError, _UsageError) as exc:
        print(f"panelseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"panelseg: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
