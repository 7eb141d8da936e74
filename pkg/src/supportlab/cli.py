"""Command-line entry point.

Exit codes: 0 completed, 1 usage error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .adversary import FAMILIES, ConstructionFailed, ParameterRange, generate, verify
from .bitdist import DistributionSpec
from .oracle import BudgetExceeded, QueryLog, open_session
from .testers import TESTERS
from .witness import GraphScaleExceeded, search_witness, verify_witness

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_instance(path: str) -> DistributionSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read instance {path}: {exc}") from None
    return DistributionSpec.from_json(doc.get("distribution", doc))


def cmd_gen(args) -> int:
    inst = generate(args.family, m=args.m, eps=args.eps, n=args.n, seed=args.seed, t=args.t)
    if args.verify:
        inst = verify(inst, args.m, args.eps)
    body = inst.distribution.dumps()
    if args.out:
        out = Path(args.out)
        out.write_text(body + "\n")
        out.with_suffix(".meta.json").write_text(json.dumps(inst.metadata(), indent=2) + "\n")
    else:
        print(body)
    return EXIT_OK


def cmd_test(args) -> int:
    if args.instance:
        P = _read_instance(args.instance)
    elif args.family:
        if args.n is None:
            raise UsageError("--n is required with --family")
        P = generate(args.family, m=args.m, eps=args.eps, n=args.n, seed=args.gen_seed, t=args.t).distribution
    else:
        raise UsageError("give an instance JSON file or --family")
    session = open_session(P, args.seed, max_queries=args.max_queries)
    try:
        v = TESTERS[args.tester](session, args.m, args.eps)
    except BudgetExceeded as exc:
        print(json.dumps({"verdict": "budget-exceeded", "queries": session.queries_used,
                          "samples": session.samples_used, "error": str(exc)}))
        return EXIT_OK
    out = v.to_json()
    if v.rejected:
        check = verify_witness(session.log, v.witness.clique, args.m)
        out["witness_check"] = check.as_dict()
        if not check.valid:
            print(json.dumps(out))
            print("rejection without a valid witness", file=sys.stderr)
            return EXIT_INVARIANT
    if args.transcript:
        with open(args.transcript, "w") as fh:
            session.log.dump_jsonl(fh)
    print(json.dumps(out))
    return EXIT_OK


def cmd_campaign(args) -> int:
    from .harness import ConfigError, ExperimentConfig, run_campaign, table_to_csv, scaling_table, write_rows

    try:
        cfg = ExperimentConfig.load(args.config)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    except (ConfigError, TypeError) as exc:
        raise UsageError(f"bad config: {exc}") from None
    if args.workers:
        cfg.workers = args.workers
    out = args.out or cfg.out
    figures = args.figures_dir or cfg.figures_dir
    rows = run_campaign(cfg)
    if out:
        with open(out, "w", newline="") as fh:
            write_rows(rows, fh)
    else:
        write_rows(rows, sys.stdout)
    if args.table:
        keys = args.table.split(",")
        usable = [r for r in rows if not r.error]
        if usable:
            text = table_to_csv(scaling_table(usable, keys), keys)
            if out:
                Path(out).with_suffix(".table.csv").write_text(text)
            else:
                sys.stdout.write(text)
    if figures:
        from .harness.figures import render_figures

        for p in render_figures([r for r in rows if not r.error], figures):
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


def cmd_verify_witness(args) -> int:
    try:
        with open(args.transcript) as fh:
            log = QueryLog.load_jsonl(fh)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    except (ValueError, KeyError) as exc:
        raise UsageError(f"malformed transcript: {exc}") from None
    if args.clique:
        clique = [int(x) for x in args.clique.split(",")]
    else:
        clique = search_witness(log, args.m)
        if clique is None:
            print(json.dumps({"m": args.m, "clique": None, "valid": False}))
            return EXIT_OK
    print(json.dumps(verify_witness(log, clique, args.m).as_dict()))
    return EXIT_OK


def cmd_validate_bounds(args) -> int:
    from .probbounds import validation_suite

    reports = validation_suite(seed=args.seed, trials=args.trials, configs=args.configs)
    rows = [r.row() for r in reports]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    bad = sum(r.violated for r in reports)
    print(f"{len(reports)} checks, {bad} violations", file=sys.stderr)
    return EXIT_INVARIANT if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="supportlab", description="Support-size testing in the huge object model.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="emit an instance JSON")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--eps", required=True, help="e.g. 1/16")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--t", type=int)
    g.add_argument("--verify", action="store_true", help="attach the exact distance to S_m")
    g.add_argument("--out", help="instance path; metadata goes to <stem>.meta.json")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("test", help="run one tester on one instance")
    t.add_argument("instance", nargs="?")
    t.add_argument("--m", type=int, required=True)
    t.add_argument("--eps", required=True)
    t.add_argument("--tester", choices=sorted(TESTERS), default="nonadaptive")
    t.add_argument("--seed", type=int, default=0, help="sample and algorithm seed")
    t.add_argument("--max-queries", type=int)
    t.add_argument("--family", choices=FAMILIES, help="generate instead of reading a file")
    t.add_argument("--n", type=int)
    t.add_argument("--t", type=int)
    t.add_argument("--gen-seed", type=int, default=0)
    t.add_argument("--transcript", help="write the query transcript as JSONL")
    t.set_defaults(func=cmd_test)

    c = sub.add_parser("campaign", help="run a config grid and write CSV")
    c.add_argument("config")
    c.add_argument("--out")
    c.add_argument("--figures-dir", help="also render PNG figures here")
    c.add_argument("--table", help="comma-separated group-by keys for an aggregate table")
    c.add_argument("--workers", type=int)
    c.set_defaults(func=cmd_campaign)

    v = sub.add_parser("verify-witness", help="check a transcript for an explicit witness")
    v.add_argument("transcript")
    v.add_argument("--m", type=int, required=True)
    v.add_argument("--clique", help="comma-separated sample ids; searched for when omitted")
    v.set_defaults(func=cmd_verify_witness)

    b = sub.add_parser("validate-bounds", help="Monte-Carlo checks of the tail bounds")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--trials", type=int, default=100_000)
    b.add_argument("--configs", type=int, default=20)
    b.add_argument("--out")
    b.set_defaults(func=cmd_validate_bounds)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .harness import ConfigError, InvariantViolation

    try:
        return args.func(args)
    except (UsageError, ParameterRange, ConfigError, ConstructionFailed, GraphScaleExceeded) as exc:
        print(f"supportlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"supportlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantViolation, AssertionError) as exc:
        print(f"supportlab: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
