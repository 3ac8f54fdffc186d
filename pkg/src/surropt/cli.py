"""Command-line entry point.

Subcommands mirror the campaign stages:

    surropt gen-data  --out data/samples.csv [--count N] [--seed S] ...
    surropt train     --data data/samples.csv --out models/ [--specs 3,4]
    surropt optimize  --models models/ --out traces/ [--budget N] ...
    surropt compare   --traces traces/ --out compare/
    surropt report    --bundle out/

Options may also come from a JSON config file (`--config`); explicit flags
win over the file, which wins over built-in defaults. Exit codes: 0 on
success, 1 on usage errors, 2 on runtime failures. The worker pool size
for training/optimization is read from the SURROPT_WORKERS environment
variable (default 1).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from .experiment import (
    ExperimentConfig,
    Manifest,
    MissingModelError,
    compare_campaign,
    generate_data,
    optimize_campaign,
    train_surrogates,
)
from .report import build_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise UsageError(message)


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="surropt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON config file with ExperimentConfig fields")
        p.add_argument("--seed", type=int, help="base seed (overrides config)")

    g = sub.add_parser("gen-data", help="generate a labeled synthetic dataset")
    common(g)
    g.add_argument("--out", type=Path, required=True, help="output CSV path")
    g.add_argument("--count", type=int, help="number of samples")
    g.add_argument("--couplings", type=int, help="pairwise interaction terms per inductance metric")
    g.add_argument("--noise", type=float, help="label noise standard deviation")
    g.add_argument("--dim", type=int, help="layout vector dimension")

    t = sub.add_parser("train", help="train surrogate networks on a dataset")
    common(t)
    t.add_argument("--data", type=Path, required=True, help="input dataset CSV")
    t.add_argument("--out", type=Path, required=True, help="model output directory")
    t.add_argument("--specs", type=str, help="comma-separated catalog indices, e.g. 1,3,10")

    o = sub.add_parser("optimize", help="run the optimizer campaign against trained surrogates")
    common(o)
    o.add_argument("--models", type=Path, required=True, help="directory with trained models")
    o.add_argument("--out", type=Path, required=True, help="trace output directory")
    o.add_argument("--budget", type=int, help="objective evaluations per run")
    o.add_argument("--runs", type=int, help="independent runs per variant and scenario")
    o.add_argument("--variants", type=str, help="comma-separated variant names (default: all ten)")
    o.add_argument("--scenarios", type=str, help="comma-separated scenario ids (default: 1,2)")

    c = sub.add_parser("compare", help="pairwise statistical comparison of the campaign traces")
    common(c)
    c.add_argument("--traces", type=Path, required=True, help="directory with trace CSV files")
    c.add_argument("--out", type=Path, required=True, help="comparison output directory")

    r = sub.add_parser("report", help="summarize a campaign bundle and render figures")
    common(r)
    r.add_argument("--bundle", type=Path, required=True, help="campaign root directory")

    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["base_seed"] = args.seed
    for attr, field_name in (
        ("count", "sample_count"),
        ("couplings", "coupling_count"),
        ("noise", "noise_stddev"),
        ("dim", "dim"),
        ("budget", "budget"),
        ("runs", "runs_per_variant"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            updates[field_name] = value
    if getattr(args, "specs", None):
        updates["spec_indices"] = _parse_int_list(args.specs)
    if getattr(args, "variants", None):
        updates["variants"] = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    if getattr(args, "scenarios", None):
        updates["scenario_ids"] = _parse_int_list(args.scenarios)
    try:
        return dataclasses.replace(cfg, **updates)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _seed_summary(cfg: ExperimentConfig) -> dict:
    return {"base_seed": cfg.base_seed}


def _cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    start = time.perf_counter()
    files = generate_data(cfg, args.out)
    Manifest(args.out.parent).record("gen-data", files, _seed_summary(cfg), time.perf_counter() - start)
    print(f"wrote {cfg.sample_count} samples to {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    start = time.perf_counter()
    files = train_surrogates(cfg, args.data, args.out)
    Manifest(args.out).record("train", files, _seed_summary(cfg), time.perf_counter() - start)
    print(f"trained specs {list(cfg.spec_indices)}; artifacts in {args.out}")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    cfg = _load_config(args)
    start = time.perf_counter()
    files = optimize_campaign(cfg, args.models, args.out)
    Manifest(args.out).record("optimize", files, _seed_summary(cfg), time.perf_counter() - start)
    n_traces = len(cfg.variants) * len(cfg.scenario_ids) * cfg.runs_per_variant
    print(f"wrote {n_traces} traces to {args.out}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    start = time.perf_counter()
    files = compare_campaign(args.traces, args.out)
    Manifest(args.out).record("compare", files, {}, time.perf_counter() - start)
    print(f"comparison artifacts in {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    start = time.perf_counter()
    files, warnings = build_report(args.bundle)
    Manifest(args.bundle).record("report", files, {}, time.perf_counter() - start)
    for message in warnings:
        print(f"warning: {message}", file=sys.stderr)
    print(f"report written under {args.bundle / 'report'} ({len(warnings)} warnings)")
    return EXIT_OK


_HANDLERS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "optimize": _cmd_optimize,
    "compare": _cmd_compare,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except MissingModelError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
