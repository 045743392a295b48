"""Command line: ``run`` a grid of seeded simulations, ``summarize`` stored
records, ``list-plugins``.

Exit codes: 0 ok, 1 config error, 2 invariant violation or failed check.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import checks as checks_mod
from .adversary import ADVERSARIES, BEHAVIORS, DELAY_POLICIES
from .experiment import Experiment, invariant_violations, load_config, run_experiment, summarize
from .metrics import read_jsonl, write_jsonl
from .simnet import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2


def _f_value(s: str):
    return s if s == "t" else int(s)


def _gst_value(s: str):
    return int(s) if s.isdigit() else s


def _seeds(s: str):
    if "," in s:
        return [int(x) for x in s.split(",") if x]
    if ":" in s:
        a, b = s.split(":")
        return list(range(int(a), int(b)))
    return int(s)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optimistic-ba", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run seeded simulations over a parameter grid")
    r.add_argument("--config", help="flat JSON object with experiment keys; flags override it")
    r.add_argument("--mode", nargs="+", help="synchronous|sync, eventually_synchronous|es, asynchronous|async")
    r.add_argument("--n", nargs="+", type=int)
    r.add_argument("--t", type=int)
    r.add_argument("--f", nargs="+", type=_f_value, help="corrupted count per grid point, or 't'")
    r.add_argument("--delta", nargs="+", type=int)
    r.add_argument("--gst", nargs="+", type=_gst_value, help="ticks, or mid / late / fallback")
    r.add_argument("--adversary", nargs="+")
    r.add_argument("--behavior", help="override the byzantine behavior of every adversary")
    r.add_argument("--seeds", type=_seeds, help="count N (seeds 0..N-1), a:b range, or a,b,c list")
    r.add_argument("--max-time", type=int, dest="max_time")
    r.add_argument("--max-waves", type=int, dest="max_waves")
    r.add_argument("--out", help="JSON-lines output path (default stdout)")
    r.add_argument("--check", nargs="*", dest="checks", help=f"checks: {', '.join(checks_mod.CHECKS)}")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--table", action="store_true", help="write the flat table instead of JSON lines")

    s = sub.add_parser("summarize", help="summarize stored run records")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--check", nargs="*", dest="checks", default=[])

    sub.add_parser("list-plugins", help="list adversaries, behaviors and delay policies")
    return p


def _experiment_from_args(args) -> Experiment:
    d = load_config(args.config) if args.config else {}
    for key in ("mode", "n", "t", "f", "delta", "gst", "adversary", "behavior",
                "seeds", "max_time", "max_waves", "out", "checks"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    return Experiment.from_dict(d)


def _print_summary(summary: dict, stream) -> None:
    for k, v in summary.items():
        if k == "checks":
            continue
        print(f"{k}: {json.dumps(v, sort_keys=True)}", file=stream)
    for name, c in summary["checks"].items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}: {c['detail']}", file=stream)


def cmd_run(args) -> int:
    try:
        exp = _experiment_from_args(args)
    except (ConfigError, OSError, ValueError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    reports = run_experiment(exp, jobs=args.jobs)
    if exp.out:
        with open(exp.out, "w") as fh:
            _write(reports, fh, args.table)
    else:
        _write(reports, sys.stdout, args.table)
    summary = summarize(reports, exp.checks)
    _print_summary(summary, sys.stderr)
    if summary["capped"]:
        print(f"warning: {summary['capped']} runs hit the time or wave cap", file=sys.stderr)
    failed = any(not c["passed"] for c in summary["checks"].values())
    return EXIT_INVARIANT if invariant_violations(reports) or failed else EXIT_OK


def _write(reports, fh, table: bool) -> None:
    if table:
        from .metrics import to_table
        fh.write(to_table(reports))
    else:
        write_jsonl(reports, fh)


def cmd_summarize(args) -> int:
    for c in args.checks:
        if c not in checks_mod.CHECKS:
            print(f"config error: unknown check {c!r}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        with open(args.inp) as fh:
            reports = read_jsonl(fh)
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    summary = summarize(reports, args.checks)
    _print_summary(summary, sys.stdout)
    failed = any(not c["passed"] for c in summary["checks"].values())
    return EXIT_INVARIANT if invariant_violations(reports) or failed else EXIT_OK


def cmd_list_plugins(args) -> int:
    print("adversaries (behavior, delay policy):")
    for name, (beh, pol) in ADVERSARIES.items():
        print(f"  {name:18s} {beh}, {pol}")
    print("behaviors: " + ", ".join(BEHAVIORS))
    print("delay policies: " + ", ".join(DELAY_POLICIES))
    print("checks: " + ", ".join(checks_mod.CHECKS))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {"run": cmd_run, "summarize": cmd_summarize, "list-plugins": cmd_list_plugins}[args.cmd](args)


if __name__ == "__main__":
    sys.exit(main())
