"""Command-line front end.

Exit codes: 0 verified, 1 inconclusive, 2 usage or environment error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .engine import EngineConfig
from .parser import ParseError, parse_spec
from .smt import SolverConfig, SolverError
from .verifier import Config, format_table, run_suite, verify


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="forex-lite",
                                 description="Verify forall-exists Hoare tuples (.feht files).")
    ap.add_argument("spec", help="spec file, or a directory with --suite")
    ap.add_argument("--suite", action="store_true", help="verify every .feht file in a directory")
    ap.add_argument("--solver-path", help="SMT solver executable (default: $FOREX_SOLVER or z3)")
    ap.add_argument("--smt-timeout-ms", type=int, default=10_000)
    ap.add_argument("--max-unroll", type=int, default=2, choices=(1, 2, 3))
    ap.add_argument("--candidate-budget", type=int, default=500)
    ap.add_argument("--dump-smt", metavar="DIR", help="write every query as query_<n>.smt2")
    ap.add_argument("--json", metavar="PATH", help="write a JSON report")
    ap.add_argument("--oracle", action="store_true", help="also run the bounded oracle (advisory)")
    ap.add_argument("--oracle-domain", type=int, default=2)
    ap.add_argument("--oracle-steps", type=int, default=64)
    ap.add_argument("--trace", action="store_true", help="print rule and candidate traces")
    return ap


def _config(args) -> Config:
    if args.smt_timeout_ms <= 0:
        raise ValueError("--smt-timeout-ms must be positive")
    if args.candidate_budget <= 0:
        raise ValueError("--candidate-budget must be positive")
    return Config(SolverConfig(args.solver_path, args.smt_timeout_ms, dump_dir=args.dump_smt),
                  EngineConfig(max_unroll=args.max_unroll, candidate_budget=args.candidate_budget))


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        config = _config(args)
        if args.suite:
            suite = run_suite(args.spec, config)
            print(format_table(suite))
            if args.json:
                with open(args.json, "w") as fh:
                    json.dump(suite, fh, indent=2)
            return 0 if suite["all_ok"] else 1
        with open(args.spec, encoding="utf-8") as fh:
            feht = parse_spec(fh.read())
        report = verify(feht, config)
    except ParseError as e:
        print(f"{args.spec}:{e.line}:{e.col}: parse error: {e.msg}", file=sys.stderr)
        return 2
    except (OSError, SolverError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    print(report.verdict + (f": {report.reason}" if report.reason else ""))
    if report.xi is not None:
        print(f"  xi: {report.xi}")
        print(f"  c:  {report.c}")
    for g, inv, cs in report.loops:
        print(f"  loop group {g}: invariant {inv}, counters {tuple(cs)}")
    print(f"  candidates tried: {report.candidates_tried}, solver queries: "
          f"{report.solver_stats.get('queries', 0)}, time: {report.wall_time:.3f}s")
    if args.trace:
        for ev in report.rule_trace:
            print(f"  rule {ev[0]} copy={ev[1]}")
        for ev in report.candidate_trace:
            print(f"  candidate group={ev[0]} source={ev[1]} inv={ev[2]} counters={ev[3]} -> {ev[4]}")
    data = report.to_json()
    if args.oracle:
        from .oracle import feht_check_bounded
        o = feht_check_bounded(feht, args.oracle_domain, args.oracle_steps)
        print(f"  oracle (d={args.oracle_domain}, S={args.oracle_steps}): {o.status}")
        if o.witness:
            print(f"  oracle witness: {o.witness}")
        data["oracle"] = {"verdict": o.status, "domain": args.oracle_domain,
                          "steps": args.oracle_steps, "witness": o.witness}
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(data, fh, indent=2)
    return 0 if report.verified else 1


def main() -> None:
    sys.exit(run_cli())


__all__ = ["run_cli", "main"]
