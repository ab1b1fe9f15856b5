"""fuscat command-line interface.

Exit codes: 0 all enabled checks pass, 1 some check failed, 2 usage or IO error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import charvec, hidata, pipeline, scalars
from .catalog import Catalog, CatalogError, DuplicateRecord, validate_record
from .groups import GroupSpec

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--precision-bits", type=int, default=256, help="working precision (default 256)")
    p.add_argument("--tol-zero", type=float, default=None, help="pruning tolerance (default 1e-30)")
    p.add_argument("--tol-report", type=float, default=None, help="pass/fail tolerance (default 1e-15)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised checks")
    p.add_argument("--parallel", type=int, default=1, help="worker processes for the structure table")
    p.add_argument("--output", default=None, help="directory for JSON reports")
    p.add_argument("--catalog", default=None, help="catalog file (default: the bundled one)")
    return p


def _datum_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", default=None, help="datum JSON file, or - for stdin")
    p.add_argument("--id", dest="ids", action="append", default=[], help="catalog id (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="fuscat", description="Haagerup-Izumi categories: "
                                     "solve, verify, tube algebra, modular data and character vectors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="produce datums as JSON")
    p.add_argument("--group", help="group such as Z1, Z3, Z5")
    p.add_argument("--sign", choices=["+", "-", "both"], default="both")
    p.add_argument("--qsystem", help="Q-system id (QS-j7, ...) built from its j-vector")
    p.add_argument("--newton", action="store_true", help="run the Newton search instead of the printed tables")
    p.add_argument("--restarts", type=int, default=200)

    p = sub.add_parser("verify", parents=[common], help="equations, Cuntz relations, simplicity, fusion ring")
    _datum_source(p)

    p = sub.add_parser("tube", parents=[common], help="tube algebra checks and half-braidings")
    _datum_source(p)
    p.add_argument("--samples", type=int, default=500, help="random triples for associativity")
    p.add_argument("--literal", action="store_true", help="gate on the literal printed products")
    p.add_argument("--dense", dest="dense", action="store_true", default=None)
    p.add_argument("--no-dense", dest="dense", action="store_false")
    p.add_argument("--corner", choices=["auto", "engine", "printed"], default="auto")

    p = sub.add_parser("modular", parents=[common], help="S and T, axioms and the form fit")
    _datum_source(p)
    p.add_argument("--fit", action="store_true", help="fit the d-block to a bilinear form")
    p.add_argument("--crosscheck", dest="crosscheck", action="store_true", default=None)
    p.add_argument("--no-crosscheck", dest="crosscheck", action="store_false")
    p.add_argument("--corner", choices=["auto", "engine", "printed"], default="auto")

    p = sub.add_parser("charvec", parents=[common], help="character-vector admissibility")
    p.add_argument("--dataset", required=True, choices=sorted(charvec.DATASETS))
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--bound", type=int, default=20)
    p.add_argument("--fix", action="append", default=[], help="name=value, e.g. alpha=1")

    p = sub.add_parser("catalog", parents=[common], help="list, show or extend the catalog")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--list", action="store_true")
    g.add_argument("--show", metavar="ID")
    g.add_argument("--datum", metavar="ID", help="print the datum JSON (for piping)")
    g.add_argument("--add", metavar="FILE", help="append records from a JSON file")
    return parser


def _configure(args) -> None:
    scalars.set_precision(args.precision_bits)
    scalars.set_tolerances(tol_zero=args.tol_zero, tol_report=args.tol_report)


def _read_json(source: str):
    text = sys.stdin.read() if source == "-" else Path(source).read_text()
    return json.loads(text)


def _load_datums(args) -> list:
    cat = Catalog.load(args.catalog)
    datums = [cat.datum(rid) for rid in args.ids]
    source = args.input
    if source is None and not args.ids and not sys.stdin.isatty():
        source = "-"
    if source is not None:
        datums += pipeline.datums_from_json(_read_json(source))
    if not datums:
        raise UsageError("no datum given: use --input FILE, --id ID or pipe JSON on stdin")
    return datums


def _emit(obj, args, name: str) -> None:
    text = json.dumps(obj, indent=1, default=str)
    print(text)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text + "\n")


def cmd_solve(args) -> int:
    if args.qsystem:
        spec = next((q for q in hidata.QSYSTEM_J if q.name == args.qsystem), None)
        if spec is None:
            raise UsageError(f"unknown Q-system {args.qsystem!r}")
        datums = [hidata.from_qsystem_j(spec)]
    else:
        if not args.group:
            raise UsageError("solve needs --group or --qsystem")
        group = GroupSpec.parse(args.group)
        signs = ["+", "-"] if args.sign == "both" else [args.sign]
        datums = []
        for sign in signs:
            if args.newton:
                found = hidata.newton_search(group, sign, restarts=args.restarts, seed=args.seed)
                distinct: list = []
                for A in found:
                    d = hidata.make_datum(group, sign, A.tolist(), source="newton search")
                    # float64 solutions, so compare under Aut(G) at a matching tolerance
                    if not any(hidata.equivalence(d, e, tol=1e-8) is not None for e in distinct):
                        d.meta["id"] = f"{group.name}{sign}newton{len(distinct) + 1}"
                        d.meta["classification"] = hidata.classify(d, tol=1e-8)
                        distinct.append(d)
                datums += distinct
            else:
                try:
                    datums += hidata.solve_small(group, sign, seed=args.seed)
                except ValueError as exc:
                    raise UsageError(str(exc)) from None
    _emit([d.to_json() for d in datums], args, "datums.json")
    return EXIT_OK


def _opts(args, **extra) -> pipeline.Options:
    return pipeline.Options(seed=args.seed, parallel=args.parallel, **extra)


def cmd_stage(args, stages, opts) -> int:
    code, _ = pipeline.run_pipeline(_load_datums(args), stages, opts, args.output)
    return code


def cmd_charvec(args) -> int:
    data = charvec.load_series(args.dataset)
    fixed = {}
    for item in args.fix:
        name, _, value = item.partition("=")
        if name not in data.parameters or not value:
            raise UsageError(f"bad --fix {item!r}; parameters are {data.parameters}")
        fixed[name] = Fraction(value)
    reports = [charvec.check_lambda_offsets(data), charvec.check_xi1(data)]
    for r in reports:
        print(f"[info] {r.summary()}")
        for c in r.failures():
            print(f"       flagged {c.indices}")
    out = {"dataset": data.id, "parameters": data.parameters,
           "consistency": [r.to_json(full=False) for r in reports]}
    if args.enumerate:
        result = charvec.enumerate_admissible(data, args.depth, args.bound, fixed)
        print(f"admissible points (bound {args.bound}, depth {result.depth}): {len(result.assignments)}")
        for a in result.assignments[:20]:
            print("  ", a)
        for note in result.diagnostics:
            print("  *", note)
        out["enumeration"] = result.to_json()
    else:
        cons = charvec.derive_constraints(data.__class__(**{**data.__dict__, "fixed": {**data.fixed, **fixed}}))
        for c in cons:
            print("  ", c.describe())
        out["constraints"] = [c.to_json() for c in cons]
    if args.output:
        p = Path(args.output)
        p.mkdir(parents=True, exist_ok=True)
        (p / f"charvec-{data.id}.json").write_text(json.dumps(out, indent=1, default=str) + "\n")
    return EXIT_OK


def cmd_catalog(args) -> int:
    cat = Catalog.load(args.catalog)
    if args.list:
        for rid, rec in cat.records.items():
            mod = rec.get("modular") or {}
            fit = (mod.get("fit") or {}).get("beta", "-")
            H = (mod.get("fit") or {}).get("H")
            group = f"Z{H[0]}" if H and len(H) == 1 else ("x".join(f"Z{h}" for h in H) if H else "")
            print(f"{rid:10s} {rec['classification']:22s} primaries={mod.get('primaries', '-')!s:4s} "
                  f"fit={group} {fit}")
        print(f"{len(cat.records)} records")
        return EXIT_OK
    if args.show:
        print(json.dumps(cat[args.show], indent=1))
        return EXIT_OK
    if args.datum:
        print(json.dumps([cat.datum(args.datum).to_json()], indent=1))
        return EXIT_OK
    if args.catalog is None:
        raise UsageError("--add needs an explicit --catalog path; the bundled catalog is read-only")
    incoming = _read_json(args.add)
    records = incoming.get("records", incoming) if isinstance(incoming, dict) else incoming
    if isinstance(records, dict):
        records = [records]
    for rec in records:
        validate_record(rec)
        cat.add(rec)
    cat.save(args.catalog)
    print(f"added {len(records)} record(s) to {args.catalog}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "verify":
            return cmd_stage(args, ["verify"], _opts(args))
        if args.command == "tube":
            return cmd_stage(args, ["tube"], _opts(args, samples=args.samples, literal_products=args.literal,
                                                   dense=args.dense, corner=args.corner))
        if args.command == "modular":
            return cmd_stage(args, ["modular"], _opts(args, fit=args.fit, crosscheck=args.crosscheck,
                                                      corner=args.corner))
        if args.command == "charvec":
            return cmd_charvec(args)
        return cmd_catalog(args)
    except (UsageError, CatalogError, DuplicateRecord, charvec.ChecksumMismatch, OSError,
            json.JSONDecodeError, ValueError, KeyError) as exc:
        print(f"fuscat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
