"""Command-line entry point: ``pnfv bench``, ``pnfv sweep`` and ``pnfv scenario``."""
from __future__ import annotations

import argparse
import sys

from .bench import (PHASES, REFERENCE_MS, SCHEMES, BenchConfig, BenchConfigError,
                    default_backend, run_benchmark, sweep, trend_summary, write_csv)
from .crypto.group import BACKENDS


def _int_list(text: str) -> list:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b,c' or 'lo..hi', got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=SCHEMES, default="bgn")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=BACKENDS, default=default_backend(),
                   help="group backend (default from $PNFV_BACKEND, else exponent)")
    p.add_argument("--packets", type=int, default=1, help="packets per trial")
    p.add_argument("--match-rate", type=float, default=0.0,
                   help="share of packets that match a policy (default 0)")
    p.add_argument("--policy-kind", choices=("equality", "range"), default="equality")
    p.add_argument("--parallel", action="store_true", help="run trials concurrently")
    p.add_argument("--out", help="CSV output path")


def _print_rows(rows) -> None:
    print(f"{'scheme':<6} {'n':>3} {'N':>3} {'phase':<15} {'median ms':>10}  "
          "enc  dec  tests  pairings  dlogs")
    for r in rows:
        c = r.op_counts
        print(f"{r.scheme:<6} {r.n_fields:>3} {r.n_policies:>3} {r.phase:<15} {r.median_ms:>10.3f}  "
              f"{c.encryptions:>4} {c.decryptions:>4} {c.tests:>6} {c.pairings:>9} {c.dlogs:>6}")


def _print_reference(scheme: str) -> None:
    ref = REFERENCE_MS.get(scheme)
    if ref:
        parts = ", ".join(f"{p} {ref[p]} ms" for p in PHASES if p in ref)
        print(f"reference at n=5, N=10 on other hardware with a real pairing library "
              f"(context only, not a target): {parts}")


def _config(args, **over) -> BenchConfig:
    return BenchConfig(scheme=args.scheme, trials=args.trials, seed=args.seed,
                       backend=args.backend, out=None, packets=args.packets,
                       match_rate=args.match_rate, policy_kind=args.policy_kind,
                       parallel=args.parallel, **over)


def cmd_bench(args) -> int:
    rows = run_benchmark(_config(args, n_fields=args.fields, n_policies=args.policies))
    _print_rows(rows)
    _print_reference(args.scheme)
    if args.out:
        write_csv(rows, args.out)
    return 0


def cmd_sweep(args) -> int:
    fixed = args.fixed
    if fixed is None:
        fixed = 10 if args.axis == "fields" else 5
    rows = sweep(args.axis, fixed, args.values, _config(args))
    _print_rows(rows)
    for line in trend_summary(rows, args.axis):
        print(line)
    _print_reference(args.scheme)
    if args.out:
        write_csv(rows, args.out)
    return 0


def cmd_scenario(args) -> int:
    from .sim.scenario import run_scenario_file
    trace = run_scenario_file(args.script)
    sys.stdout.write(trace.to_text())
    return 0 if trace.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnfv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="time one configuration")
    _common(b)
    b.add_argument("--fields", type=int, default=5)
    b.add_argument("--policies", type=int, default=10)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("sweep", help="time a range of field or policy counts")
    _common(s)
    s.add_argument("--axis", choices=("fields", "policies"), required=True)
    s.add_argument("--fixed", type=int, help="value of the other axis (10 policies or 5 fields)")
    s.add_argument("--values", type=_int_list, required=True, help="'5,10,15' or '1..30'")
    s.set_defaults(func=cmd_sweep)

    sc = sub.add_parser("scenario", help="run a simulator script and print its trace")
    sc.add_argument("script")
    sc.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BenchConfigError, NotImplementedError, ValueError, OSError) as exc:
        print(f"pnfv: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
