"""Command-line entry points.

    ligs train --config cfg.txt [--seed N] [--out DIR] [--trace]
    ligs verify [--tol X] [--seed N] [--fixtures DIR]
    ligs compare --dir DIR --a ALG --b ALG --metric M [--window W]
    ligs heatmap --run DIR
    ligs validate-metrics PATH

Exit codes: 0 success, 1 validation error, 2 property failure, 3 runtime
abort during training.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import ConfigError, load_config, validate_config
from .harness import (ExperimentSpec, HarnessError, aggregate_heatmaps,
                      compare_runs, format_suite_report, run_experiment,
                      run_theory_suite)
from .metrics import MetricsError, read_metrics
from .theory import GameError, PropertyError
from .trainer import TrainAbort

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PROPERTY = 2
EXIT_ABORT = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ligs",
                                description="switching intrinsic-reward experiments")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run one seeded training run")
    t.add_argument("--config", required=True, help="key=value config file")
    t.add_argument("--seed", type=int, default=None, help="override the config seed")
    t.add_argument("--out", default="runs", help="output root directory")
    t.add_argument("--trace", action="store_true",
                   help="dump a per-tick JSONL trace for actor 0")

    v = sub.add_parser("verify", help="run the operator property suite")
    v.add_argument("--tol", type=float, default=1e-12,
                   help="contraction slack tolerance")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--fixtures", default=None,
                   help="directory of JSON game fixtures to include")

    c = sub.add_parser("compare", help="median final-window ordering of two algorithms")
    c.add_argument("--dir", required=True)
    c.add_argument("--a", required=True, help="baseline algorithm")
    c.add_argument("--b", required=True, help="test algorithm")
    c.add_argument("--metric", required=True,
                   help="ret_ext | ret_int | switches | success")
    c.add_argument("--window", type=float, default=0.1)

    h = sub.add_parser("heatmap", help="aggregate switch-activation heatmaps")
    h.add_argument("--run", required=True, help="run directory (searched recursively)")

    m = sub.add_parser("validate-metrics", help="check a metrics CSV against the format")
    m.add_argument("path")
    return p


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    validate_config(cfg)
    out_dir = os.path.join(args.out, cfg.algorithm, f"seed{cfg.seed}")
    spec = ExperimentSpec(config=cfg, out_dir=out_dir, trace=args.trace)
    summary = run_experiment(spec)
    for k in ("experiment_id", "algorithm", "seed", "env_steps", "episodes",
              "switch_on_steps", "switch_fraction", "out_dir"):
        print(f"{k}: {summary[k]}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = run_theory_suite(seed=args.seed, contraction_tol=args.tol,
                              fixtures_dir=args.fixtures)
    print(format_suite_report(report))
    return EXIT_OK if report["ok"] else EXIT_PROPERTY


def _cmd_compare(args) -> int:
    report = compare_runs(args.dir, args.a, args.b, args.metric,
                          window=args.window)
    for side in ("baseline", "test"):
        r = report[side]
        print(f"{side} {r['algorithm']}: median {r['median']!r} "
              f"over {len(r['runs'])} runs")
    print(f"difference (test - baseline): {report['difference']!r}")
    print(f"ordering: {report['ordering']}")
    return EXIT_OK


def _cmd_heatmap(args) -> int:
    grid = aggregate_heatmaps(args.run)
    for row in grid:
        print(",".join(str(int(v)) for v in row))
    return EXIT_OK


def _cmd_validate_metrics(args) -> int:
    rows = read_metrics(args.path)
    print(f"{args.path}: valid, {len(rows)} rows")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"train": _cmd_train, "verify": _cmd_verify,
               "compare": _cmd_compare, "heatmap": _cmd_heatmap,
               "validate-metrics": _cmd_validate_metrics}[args.command]
    try:
        return handler(args)
    except (ConfigError, MetricsError, HarnessError, GameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PropertyError as exc:
        print(f"property failure: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except TrainAbort as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
