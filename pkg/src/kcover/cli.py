"""Command-line surface: generation, oracles, verification, emission, solving.

Machine-readable results go to standard output as single JSON documents with
rationals rendered as "p/q" strings; diagnostics go to standard error.  Exit
codes: 0 success or PASS, 1 verification FAIL, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import circuit as circuit_mod
from . import flow_cover as fc
from . import knapsack as km
from . import protocol as proto
from .cutting_plane import cutting_plane_solve
from .errors import CapacityError, DomainError, InputError
from .factorization import emit_ef, factorize_full, system_to_json, verify_factorization
from .kc_protocol import build_kc_protocol, verify_sweep
from .rationals import format_rational, parse_rational

BUILDERS = {
    "dnc": circuit_mod.build_threshold_circuit,
    "cnf": circuit_mod.cnf_threshold_circuit,
}


def _emit(doc):
    print(json.dumps(doc, sort_keys=True, separators=(",", ":")))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _eps(text: str) -> Fraction:
    value = parse_rational(text)
    if value <= 0:
        raise InputError("--eps must be positive")
    if value >= 1:
        print("warning: eps >= 1 is outside the analyzed range "
              "(admissible here, gap bound 2+eps still checked)", file=sys.stderr)
    return value


def _costs(text: str | None, inst: km.KnapsackInstance):
    if text is None:
        if inst.costs is None:
            raise InputError("no costs: pass --costs or store them in the instance")
        return inst.costs
    return tuple(parse_rational(part) for part in text.split(","))


def _cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    inst = km.random_instance(rng, args.n, args.max_size)
    text = km.to_json(inst)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def _cmd_opt(args) -> int:
    inst = km.from_json(_read(args.instance))
    value, witness = km.dp_optimum(inst, _costs(args.costs, inst))
    _emit({"value": format_rational(value), "witness": list(witness)})
    return 0


def _cmd_circuit(args) -> int:
    inst = km.from_json(_read(args.instance))
    builder = BUILDERS[args.builder]
    threshold = args.threshold if args.threshold is not None else inst.demand
    cutoff = args.cutoff if args.cutoff is not None else 1
    built = circuit_mod.build_truncation_circuit(inst, cutoff, threshold, builder=builder)
    depth, gates = circuit_mod.circuit_stats(built)
    wires = sum(s for s in inst.sizes if s >= cutoff)
    doc = {
        "builder": args.builder,
        "threshold": threshold,
        "cutoff": cutoff,
        "depth": depth,
        "gates": gates,
        "unit_wires": wires,
        "depth_bound": circuit_mod.depth_bound(wires),
    }
    if args.dot:
        Path(args.dot).write_text(circuit_mod.to_dot(built))
        doc["dot"] = args.dot
    _emit(doc)
    return 0


def _cmd_verify_protocol(args) -> int:
    inst = km.from_json(_read(args.instance))
    report = verify_sweep(
        inst, args.eps, mode=args.mode, samples=args.samples, seed=args.seed,
        workers=args.workers, circuit_builder=BUILDERS[args.builder], cap=args.cap,
    )
    if args.dot:
        tree = build_kc_protocol(inst, args.eps, circuit_builder=BUILDERS[args.builder])
        rows, cols = km.enumerate_rows_and_columns(inst, args.cap)
        proto.exact_expectation(tree, rows[0], cols[0])
        Path(args.dot).write_text(proto.to_dot(tree))
        report["dot"] = args.dot
    _emit(report)
    return 0 if report["status"] == "PASS" else 1


def _cmd_factorize(args) -> int:
    inst = km.from_json(_read(args.instance))
    tree = build_kc_protocol(inst, args.eps, circuit_builder=BUILDERS[args.builder])
    fact = factorize_full(tree, inst, args.eps, cap=args.cap)
    ok = verify_factorization(fact, inst, args.eps)
    _emit({
        "rows": len(fact.row_sets),
        "cols": len(fact.col_bits),
        "rank": fact.rank,
        "identity": ok,
        "status": "PASS" if ok else "FAIL",
    })
    return 0 if ok else 1


def _parse_rows(text: str, inst: km.KnapsackInstance):
    rows = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk == "":
            rows.append(frozenset())
            continue
        rows.append(frozenset(int(v) for v in chunk.split(",")))
    return rows


def _cmd_emit_ef(args) -> int:
    inst = km.from_json(_read(args.instance))
    tree = build_kc_protocol(inst, args.eps, circuit_builder=BUILDERS[args.builder])
    if args.all_rows:
        row_sets, _ = km.enumerate_rows_and_columns(inst, args.cap)
    elif args.rows is not None:
        row_sets = _parse_rows(args.rows, inst)
    elif args.trace_costs is not None:
        result = cutting_plane_solve(
            inst, _costs(args.trace_costs, inst), args.eps,
            separator=args.separator, cap=args.cap,
            circuit_builder=BUILDERS[args.builder],
        )
        row_sets = [frozenset(r) for r in result.rows_used]
    else:
        raise InputError("pass --rows, --all-rows, or --trace-costs")
    system = emit_ef(tree, inst, args.eps, row_sets)
    Path(args.out).write_text(system_to_json(system) + "\n")
    _emit({"rows": len(system.rows), "leaves": len(system.leaves), "path": args.out})
    return 0


def _solve(args):
    inst = km.from_json(_read(args.instance))
    costs = _costs(args.costs, inst)
    result = cutting_plane_solve(
        inst, costs, args.eps, separator=args.separator, cap=args.cap,
        circuit_builder=BUILDERS[args.builder],
    )
    return inst, costs, result


def _result_doc(result):
    doc = {
        "value": format_rational(result.value),
        "x": [format_rational(v) for v in result.x],
        "iterations": result.iterations,
        "rows": [list(r) for r in result.rows_used],
        "separator": result.separator,
    }
    if result.rounded_set is not None:
        doc["rounded_set"] = list(result.rounded_set)
        doc["rounded_cost"] = format_rational(result.rounded_cost)
    return doc


def _cmd_solve(args) -> int:
    _, _, result = _solve(args)
    _emit(_result_doc(result))
    return 0


def _cmd_gap(args) -> int:
    inst, costs, result = _solve(args)
    opt, witness = km.dp_optimum(inst, costs)
    bound = 2 + Fraction(args.eps)
    doc = _result_doc(result)
    doc["opt"] = format_rational(opt)
    doc["witness"] = list(witness)
    doc["bound"] = format_rational(bound)
    ok = result.value <= opt and opt <= bound * result.value
    if result.value > 0:
        doc["ratio"] = format_rational(opt / result.value)
    doc["status"] = "PASS" if ok else "FAIL"
    _emit(doc)
    if not ok:
        print("gap bound violated: this is a red-alert finding", file=sys.stderr)
    return 0 if ok else 1


def _cmd_fci_verify(args) -> int:
    inst = fc.instance_from_json(_read(args.instance))
    report = fc.verify_sweep(inst, args.eps, circuit_builder=BUILDERS[args.builder])
    _emit(report)
    return 0 if report["status"] == "PASS" else 1


def _cmd_report(args) -> int:
    from .report import write_report

    doc = write_report(Path(args.out_dir), seed=args.seed, eps=args.eps,
                       instances=args.instances)
    _emit(doc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kcover",
        description="Cover-inequality LP relaxations from slack protocols",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random normalized instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--max-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("opt", help="exact integer optimum by dynamic programming")
    p.add_argument("instance")
    p.add_argument("--costs")
    p.set_defaults(fn=_cmd_opt)

    p = sub.add_parser("circuit", help="build a threshold circuit and report stats")
    p.add_argument("instance")
    p.add_argument("--threshold", type=int)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--builder", choices=sorted(BUILDERS), default="dnc")
    p.add_argument("--dot")
    p.set_defaults(fn=_cmd_circuit)

    p = sub.add_parser("verify-protocol",
                       help="check tree expectations against the slack oracle")
    p.add_argument("instance")
    p.add_argument("--eps", type=_eps, required=True)
    p.add_argument("--mode", choices=("all", "sample"), default="all")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cap", type=int, default=16)
    p.add_argument("--builder", choices=sorted(BUILDERS), default="cnf")
    p.add_argument("--dot")
    p.set_defaults(fn=_cmd_verify_protocol)

    p = sub.add_parser("factorize", help="full F, V factorization and identity check")
    p.add_argument("instance")
    p.add_argument("--eps", type=_eps, required=True)
    p.add_argument("--cap", type=int, default=16)
    p.add_argument("--builder", choices=sorted(BUILDERS), default="cnf")
    p.set_defaults(fn=_cmd_factorize)

    p = sub.add_parser("emit-ef", help="write extended-formulation rows to a file")
    p.add_argument("instance")
    p.add_argument("--eps", type=_eps, required=True)
    p.add_argument("--rows", help='semicolon-separated sets, e.g. "0,2;1;"')
    p.add_argument("--all-rows", action="store_true")
    p.add_argument("--trace-costs", help="emit the rows a cutting-plane run uses")
    p.add_argument("--separator", choices=("halfround", "exact"), default="halfround")
    p.add_argument("--out", required=True)
    p.add_argument("--cap", type=int, default=16)
    p.add_argument("--builder", choices=sorted(BUILDERS), default="cnf")
    p.set_defaults(fn=_cmd_emit_ef)

    for name, fn in (("solve", _cmd_solve), ("gap", _cmd_gap)):
        p = sub.add_parser(name, help=f"cutting-plane {name}")
        p.add_argument("instance")
        p.add_argument("--eps", type=_eps, required=True)
        p.add_argument("--costs")
        p.add_argument("--separator", choices=("halfround", "exact"), default="halfround")
        p.add_argument("--cap", type=int, default=16)
        p.add_argument("--builder", choices=sorted(BUILDERS), default="cnf")
        p.set_defaults(fn=fn)

    p = sub.add_parser("fci-verify", help="flow-cover protocol sweep")
    p.add_argument("instance")
    p.add_argument("--eps", type=_eps, required=True)
    p.add_argument("--builder", choices=sorted(BUILDERS), default="cnf")
    p.set_defaults(fn=_cmd_fci_verify)

    p = sub.add_parser("report",
                       help="render figures and CSV tables for the desk-scale sweeps")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=_eps, default=Fraction(1, 2))
    p.add_argument("--instances", type=int, default=24)
    p.set_defaults(fn=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, CapacityError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
