"""Command-line front end.

Exit codes: 0 all audited conclusions hold (or validation clean), 1 I/O or
parse errors and validation failures, 2 hypothesis failure or inconclusive
audit only, 3 at least one conclusion falsified.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import builtin, regions
from .audit import FALSIFIED, VERIFIED, AuditReport, full_audit, report_to_json
from .errors import QCQPDualError
from .instance import load_instance, save_instance, validate
from .oracle import global_min_brute

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS, EXIT_FALSIFIED = 0, 1, 2, 3

_REASONS = {
    "no_maximizer_in_S_plus": "maximizer not in S_plus",
    "multiple_maximizers": "multiple maximizers",
    "zero_maximizer": "zero maximizer",
}


def _num(v):
    return "n/a" if v is None else f"{v:.10g}"


def _vec(v):
    return "[" + ", ".join(f"{x:.10g}" for x in v) + "]"


def summarize(report: AuditReport, inst=None) -> list[str]:
    lines = [f"instance: n={report.n} m={report.m}"]
    lines.append("violations: " + ("; ".join(report.violations) if report.violations else "none"))
    sl = report.slater
    if sl["status"] == "strict":
        lines.append(f"slater: strict (x0={_vec(sl['x0'])}, margin {_num(sl['margin'])})")
    else:
        lines.append("slater: inconclusive (no strictly feasible point found)")
    lines.append(f"C1: {'holds' if report.c1.holds else 'fails'} (min eigenvalue {_num(report.c1.min_eigenvalue)})")
    if report.c2.ill_posed:
        lines.append("C2: ill-posed (A is singular)")
    for r in report.c2.records:
        lines.append(
            f"C2[k={r.k}]: Q_pd={'yes' if r.q_pd else 'no'} A+Q_pd={'yes' if r.a_plus_q_pd else 'no'} "
            f"lhs={_num(r.lhs)} rhs={_num(r.rhs)} eq24={'holds' if r.eq24_holds else 'fails'}"
        )
    if inst is not None and inst.m == 1:
        S, S_plus = regions.s_regions(inst)
        lines.append(f"S: {S}")
        lines.append(f"S_plus: {S_plus}")
        lines.append(f"Y: {regions.y_regions(inst)}")

    t1 = report.theorem1
    lines.append(f"theorem1: {t1.verdict.upper()}" + (f" ({t1.reason})" if t1.reason else ""))
    if t1.sigma_bar is not None:
        lines.append(f"  sigma_bar: {_vec(t1.sigma_bar)}")
        lines.append(f"  x_bar: {_vec(t1.x_bar)}")
        lines.append(
            f"  P(x_bar): {_num(t1.primal_value)}  P^d(sigma_bar): {_num(t1.dual_value)}  "
            f"value agreement: {'yes' if t1.value_agreement else 'no'}"
        )
    if t1.oracle_best is not None:
        lines.append(f"  oracle best: {_num(t1.oracle_best)} at " + ", ".join(_vec(m) for m in t1.oracle_minimizers))
        lines.append(f"  gap: {t1.gap:.6g}")

    t2 = report.theorem2
    reason = _REASONS.get(t2.reason, t2.reason)
    lines.append(f"theorem2: {t2.verdict.upper()}" + (f" ({reason})" if reason else ""))
    for s, flag in zip(t2.maximizers, t2.in_S_plus):
        lines.append(f"  maximizer: {_vec(s)} in S_plus: {'yes' if flag else 'no'}")

    uq = report.uniqueness
    lines.append(f"uniqueness: {uq.verdict}" + (f" ({uq.reason})" if uq.reason else ""))
    for m in uq.minimizers:
        lines.append(f"  minimizer: {_vec(m)}")
    return lines


def exit_code(report: AuditReport) -> int:
    verdicts = [report.theorem1.verdict, report.theorem2.verdict]
    if FALSIFIED in verdicts or report.uniqueness.verdict == "counterexample":
        return EXIT_FALSIFIED
    if all(v == VERIFIED for v in verdicts) and report.uniqueness.verdict == "consistent":
        return EXIT_OK
    return EXIT_HYPOTHESIS


def _audit(inst, args, out):
    report = full_audit(inst, seed=args.seed)
    for line in summarize(report, inst):
        print(line, file=out)
    if args.json:
        Path(args.json).write_text(report_to_json(report), encoding="utf-8")
    return exit_code(report)


def cmd_validate(args, out):
    violations = validate(load_instance(args.file))
    for v in violations:
        print(v, file=out)
    if not violations:
        print("ok", file=out)
    return EXIT_OK if not violations else EXIT_ERROR


def cmd_audit(args, out):
    return _audit(load_instance(args.file), args, out)


def cmd_dual_curve(args, out):
    inst = load_instance(args.file)
    if args.samples < 1:
        raise ValueError("--samples must be >= 1")
    sigmas = np.linspace(args.lo, args.hi, args.samples)
    count = regions.write_curve_csv(inst, sigmas, args.out)
    print(f"wrote {count} rows to {args.out}", file=out)
    return EXIT_OK


def cmd_oracle(args, out):
    inst = load_instance(args.file)
    res = global_min_brute(inst, args.grid)
    lo, hi = res.certified_box
    print(f"best_value: {res.best_value:.17g}", file=out)
    print(f"minimizers: {len(res.minimizers)}", file=out)
    for x in res.minimizers:
        print(f"  {_vec(x)}", file=out)
    print(f"resolution: {res.resolution:.6g}", file=out)
    print(f"box: lo={_vec(lo)} hi={_vec(hi)}", file=out)
    return EXIT_OK


def cmd_example(args, out):
    inst = builtin.get_example(args.number)
    if args.emit:
        save_instance(inst, args.emit, builtin.COMMENTS[args.number])
    print(f"example {args.number}", file=out)
    return _audit(inst, args, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcqpdual", description="Canonical dual construction and theorem audits for QCQPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check instance invariants")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("audit", help="audit both theorems on an instance")
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("dual-curve", help="write sigma,phi,psi samples (m = 1)")
    p.add_argument("file")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dual_curve)

    p = sub.add_parser("oracle", help="brute-force global primal minimum")
    p.add_argument("file")
    p.add_argument("--grid", type=int)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("example", help="audit a built-in counterexample")
    p.add_argument("number", type=int, choices=[1, 2, 3])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", metavar="PATH")
    p.add_argument("--emit", metavar="FILE", help="also write the instance JSON")
    p.set_defaults(func=cmd_example)
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args, out)
    except (OSError, ValueError, QCQPDualError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR


def main():
    sys.exit(run())
