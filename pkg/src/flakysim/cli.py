"""Command line entry point: run scenarios, check traces, fuzz over seeds.

Exit codes: 0 when every check passes (inconclusive counts as passing), 1 on
any violation, 2 on usage, schema or trace-format errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .checkers import run_checks
from .fuzz import FAMILIES, fuzz_family, fuzz_template, summarize, vary
from .runner import run_scenario
from .scenario import ScenarioError, bundled_scenarios, load_scenario
from .trace import Trace, TraceFormatError

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def _checks(arg: str | None) -> list[str] | None:
    if not arg:
        return None
    return [c.strip() for c in arg.split(",") if c.strip()]


def _print_report(report, stream=sys.stdout) -> None:
    for v in report.verdicts:
        line = f"{v.check:18} {v.status}"
        if v.detail:
            line += f"  ({v.detail})"
        print(line, file=stream)


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    trace = run_scenario(sc, seed=args.seed, horizon=args.horizon)
    out = args.out or f"{sc.name}-{trace.header['seed']}.trace.jsonl"
    if out == "-":
        sys.stdout.write(trace.dumps())
        return EXIT_OK
    trace.dump(out)
    print(f"wrote {len(trace.events)} events to {out} (end time {trace.end_time})")
    checks = _checks(args.checks) or (sc.checks or None)
    if args.check or args.checks:
        report = run_checks(trace, checks)
        _print_report(report)
        return EXIT_OK if report.ok else EXIT_VIOLATION
    return EXIT_OK


def cmd_check(args) -> int:
    trace = Trace.load(args.trace)
    checks = _checks(args.checks) or (trace.scenario.get("checks") or None)
    report = run_checks(trace, checks)
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        _print_report(report)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_fuzz(args) -> int:
    seeds = range(args.start, args.start + args.seeds)
    checks = _checks(args.checks)
    if args.family:
        if args.family not in FAMILIES:
            raise ScenarioError(f"family: unknown {args.family!r}; known: {sorted(FAMILIES)}")
        results = fuzz_family(args.family, seeds, checks, args.jobs)
        rebuild = FAMILIES[args.family]
    elif args.scenario:
        template = load_scenario(args.scenario, check_horizon=False)
        checks = checks or (template.checks or None)
        results = fuzz_template(template, seeds, checks, args.jobs)
        rebuild = lambda s: vary(template, s)  # noqa: E731
    else:
        raise ScenarioError("fuzz needs --scenario or --family")
    summary = summarize(results)
    first = summary["first_failing_seed"]
    if first is not None:
        # Replay the first failure from scratch to confirm it reproduces.
        sc = rebuild(first)
        trace = run_scenario(sc)
        summary["reproduced"] = not run_checks(trace, checks or list(sc.checks) or None).ok
        if args.out:
            trace_path = Path(args.out).with_suffix(f".seed{first}.trace.jsonl")
            trace.dump(trace_path)
            summary["first_failing_trace"] = str(trace_path)
    summary["per_seed"] = {r.seed: {"ok": r.ok, **r.statuses} for r in results}
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n")
    brief = {k: summary[k] for k in ("runs", "first_failing_seed", "counts")}
    if "reproduced" in summary:
        brief["reproduced"] = summary["reproduced"]
    print(json.dumps(brief, indent=2))
    return EXIT_OK if first is None else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flakysim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write its trace")
    run.add_argument("--scenario", required=True,
                     help=f"YAML file or bundled name ({', '.join(bundled_scenarios())})")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--horizon", type=int, help="override the scenario horizon")
    run.add_argument("--out", help="trace path; '-' writes to stdout")
    run.add_argument("--checks", help="comma-separated checks to run on the new trace")
    run.add_argument("--check", action="store_true", help="also run the default checks")
    run.set_defaults(func=cmd_run)

    chk = sub.add_parser("check", help="run checkers over a saved trace")
    chk.add_argument("trace", help="trace file written by 'run'")
    chk.add_argument("--checks", help="comma-separated checks (default: all for the protocol)")
    chk.add_argument("--out", help="write the JSON report here")
    chk.add_argument("--json", action="store_true", help="print the report as JSON")
    chk.set_defaults(func=cmd_check)

    fz = sub.add_parser("fuzz", help="run many seeds and summarise verdicts")
    src = fz.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="template scenario to vary")
    src.add_argument("--family", help=f"built-in family ({', '.join(FAMILIES)})")
    fz.add_argument("--seeds", type=int, default=100, help="number of seeds")
    fz.add_argument("--start", type=int, default=0, help="first seed")
    fz.add_argument("--checks", help="comma-separated checks")
    fz.add_argument("--jobs", type=int, default=1, help="worker processes")
    fz.add_argument("--out", help="write the full JSON summary here")
    fz.set_defaults(func=cmd_fuzz)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except (ScenarioError, TraceFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:    # unknown check names
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
