"""Command line entry point: run, sweep, oracle, check."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from partagree.analysis import brute_force_worst_rounds
from partagree.harness import (
    ScenarioError,
    check_trace,
    format_sweep,
    load_scenario,
    parse_range,
    read_config,
    run,
    sweep,
)
from partagree.protocol import budget_p_agreement


def cmd_run(args) -> int:
    overrides = {"seed": args.seed, "horizon": args.horizon}
    scenario = load_scenario(Path(args.config), overrides)
    trace = run(scenario)
    text = trace.text()
    if args.trace_out:
        Path(args.trace_out).write_text(text)
    if not args.quiet:
        sys.stdout.write(text)
    return 0 if trace.succeeded() else 1


def cmd_sweep(args) -> int:
    sections = read_config(Path(args.config))
    spec = dict(sections["sweep"])
    trials = int(spec.pop("trials", 1))
    workers = int(spec.pop("workers", args.workers))
    top = dict(sections["top"])
    if args.seed is not None:
        top["seed"] = str(args.seed)
    if args.horizon is not None:
        top["horizon"] = str(args.horizon)
    vary = {key: parse_range(value) for key, value in spec.items()}
    rows = sweep({"top": top, "adversary": sections["adversary"]}, vary, trials, workers)
    table = format_sweep(rows)
    if args.trace_out:
        Path(args.trace_out).write_text(table)
    if not args.quiet:
        sys.stdout.write(table)
        for row in rows:
            for failure in row.failures:
                print(f"# point {row.point}: {failure}", file=sys.stderr)
    return 0 if all(r.all_ok for r in rows) else 1


def cmd_oracle(args) -> int:
    worst = brute_force_worst_rounds(args.n, args.p, horizon=args.horizon)
    budget = budget_p_agreement(args.n, args.p)
    if not args.quiet:
        print(f"oracle n={args.n} p={args.p} worst_rounds={worst} budget={budget} ok={'true' if worst <= budget else 'false'}")
    return 0 if worst <= budget else 1


def cmd_check(args) -> int:
    problems = check_trace(Path(args.trace).read_text())
    if not args.quiet:
        for msg in problems:
            print(msg)
        print("check ok" if not problems else f"check failed: {len(problems)} problem(s)")
    return 0 if not problems else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partagree", description="k-agreement in p-partitioned dynamic networks")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--horizon", type=int, default=None, help="override the round horizon")
    common.add_argument("--trace-out", default=None, help="write the trace (or sweep table) here")
    common.add_argument("--quiet", action="store_true", help="print nothing; rely on the exit code")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="execute one scenario")
    p_run.add_argument("config")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_oracle = sub.add_parser("oracle", parents=[common], help="exhaustive worst case for n <= 4")
    p_oracle.add_argument("n", type=int)
    p_oracle.add_argument("p", type=int)
    p_oracle.set_defaults(func=cmd_oracle)

    p_check = sub.add_parser("check", parents=[common], help="re-verify a saved trace")
    p_check.add_argument("trace")
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
