"""Command-line entry point: scenario presets or config files in, campaign
CSVs (or a feasibility report) out."""

from __future__ import annotations

import argparse
import sys

from .campaign import (
    DEFAULT_SEEDS,
    CampaignSpec,
    load_config,
    preset,
    run_campaign,
)
from .model import ConfigError, compute_targets
from .policies import POLICIES

DEFAULT_POLICIES = ("mdvf", "ldf", "mw-aoi")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locsim",
        description="Slotted-time scheduling campaigns for credibility-aware "
        "real-time wireless flows.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", choices=("high", "low"),
                        help="named preset scenario")
    source.add_argument("--config", metavar="PATH",
                        help="key=value config file (see README for the schema)")
    parser.add_argument("--policy", action="append", choices=POLICIES, metavar="NAME",
                        help=f"policy to run; repeatable (default: {', '.join(DEFAULT_POLICIES)})")
    parser.add_argument("--epsilon", action="append", type=float, metavar="X",
                        help="epsilon value for the deficit policies; repeatable for sweeps "
                             "(default: the config's epsilon)")
    parser.add_argument("--seeds", type=int, default=DEFAULT_SEEDS, metavar="K",
                        help="number of seeds, run as 1..K (default: %(default)s)")
    parser.add_argument("--intervals", type=int, metavar="H",
                        help="override the simulation horizon (intervals)")
    parser.add_argument("--window", type=int, metavar="T",
                        help="override the credibility window length (intervals)")
    parser.add_argument("--out", metavar="DIR", help="output directory for the CSVs")
    parser.add_argument("--per-interval", action="store_true",
                        help="also write per_interval.csv")
    parser.add_argument("--check-feasibility", action="store_true",
                        help="print the capacity/feasibility report and exit")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="concurrent runs (default: %(default)s)")
    return parser


def _print_feasibility(config) -> int:
    targets = compute_targets(config)
    report = targets.report
    cap = config.tau - targets.idle_full
    print(f"clients: {config.n}  tau: {config.tau}  window_T: {config.window_T}")
    print(f"idle_full: {targets.idle_full:.6g}  capacity tau - I: {cap:.6g}")
    print(f"required load sum(q/p): {float((config.q / config.p).sum()):.6g}")
    print("targets xbar_star:")
    for client, x in zip(config.clients, targets.xbar_star):
        flag = "" if 0.0 <= x <= 1.0 else "  <-- outside [0, 1]"
        print(f"  client {client.id:2d}: p={client.p:.2f} q={client.q:.2f} "
              f"xbar*={x:.6f}{flag}")
    checked = "all subsets" if report.exhaustive else "full set, singletons, pairs"
    print(f"subset checks: {report.checked_subsets} ({checked})")
    if report.violations:
        print(f"violated subsets ({len(report.violations)}):")
        for ids, slack in report.violations[:10]:
            print(f"  {ids}: shortfall {-slack:.6g}")
        if len(report.violations) > 10:
            print(f"  ... and {len(report.violations) - 10} more")
    if report.pooling_flags:
        print(f"pooling-tight subsets at targets: {len(report.pooling_flags)}")
    print(f"feasible: {'yes' if targets.feasible else 'no'}")
    return 0 if targets.feasible else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = preset(args.scenario) if args.scenario else load_config(args.config)
        if args.intervals is not None or args.window is not None:
            from dataclasses import replace

            horizon = args.intervals if args.intervals is not None else config.horizon
            window = args.window if args.window is not None else config.window_T
            config = replace(config, horizon=horizon, window_T=window)

        if args.check_feasibility:
            return _print_feasibility(config)

        if not args.out:
            parser.error("--out is required unless --check-feasibility is given")
        if args.seeds < 1:
            parser.error("--seeds must be >= 1")
        spec = CampaignSpec(
            config=config,
            policies=tuple(args.policy) if args.policy else DEFAULT_POLICIES,
            seeds=tuple(range(1, args.seeds + 1)),
            output_dir=args.out,
            epsilon_grid=tuple(args.epsilon) if args.epsilon else None,
            per_interval=args.per_interval,
            jobs=args.jobs,
        )
        total = len(spec.run_grid())
        done = {"count": 0}

        def progress(key):
            done["count"] += 1
            pol, eps, seed = key
            print(f"[{done['count']}/{total}] {pol} eps={eps:g} seed={seed}", file=sys.stderr)

        summary_path, interval_path = run_campaign(spec, progress=progress)
        print(summary_path)
        if interval_path is not None:
            print(interval_path)
        return 0
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
