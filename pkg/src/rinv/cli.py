"""
rinv: command-line driver.

    rinv solve --problem FILE --out FILE [--strict] [--solution-csv FILE]
    rinv verify --kind identities|coercivity|bound --dim N --degree D \
                --trials T --seed S --out FILE
    rinv roots --coeffs a0,a1,...
    rinv counterexample --rmax R

Exit codes: 0 pass, 1 verification violation (or root iteration failure),
2 input error, 3 infeasible or unfinishable solve.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .counterexample import FD_RTOL, run_counterexample
from .exceptions import ConvergenceError, InfeasibleSolveError, ProblemFileError
from .factorization import (
    ROOT_TOL,
    PolynomialSpec,
    factor_operator,
    reconstruct,
    root_residuals,
)
from .problem import (
    build_rhs,
    complex_to_json,
    format_complex,
    load_problem,
    write_json,
    write_solution_csv,
)
from .solver import STRICT_CERT_TOL, ChainSolver, SolveConfig, _rescale_report, certify_bound
from .verify import KINDS, run_verify, write_rows

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


def _err(msg):
    print(f"rinv: {msg}", file=sys.stderr)


def solve_problem(problem, strict=False):
    """Run a parsed problem; returns (report, certificate, rhs series, wall time)."""
    from .hermite import HermiteSeries

    start = time.perf_counter()
    spec = PolynomialSpec(problem.polynomial)
    lam = problem.weight.lam
    fo = factor_operator(spec.scaled(lam))
    cfg = SolveConfig(problem.dim, problem.test_degree, problem.trial_degree, problem.rank_tol)
    chain = ChainSolver(fo.shifts, cfg)
    f = build_rhs(problem, chain.trial)
    unit = HermiteSeries(f.config, f.coeffs)
    report = _rescale_report(chain.solve(unit), lam, problem.weight)
    cert = certify_bound(report, problem.cert_tol, strict=strict)
    return report, cert, f, time.perf_counter() - start


def report_record(problem, report, cert, strict, wall_time) -> dict:
    return {
        "problem": problem.to_dict(),
        "shifts": [complex_to_json(s.shift) for s in report.stages],
        "stages": [
            {
                "shift": complex_to_json(s.shift),
                "input_norm2": s.input_norm2,
                "output_norm2": s.output_norm2,
                "ratio": s.ratio,
                "bound": s.bound,
                "constraint_residual": s.constraint_residual,
                "test_degree": s.test_degree,
                "rank": s.rank,
            }
            for s in report.stages
        ],
        "rhs_norm2": report.input_norm2,
        "solution_norm2": report.solution.norm2(),
        "ratio": report.ratio,
        "bound": report.bound,
        "operator_norm_bound": float(np.sqrt(report.bound)),
        "certificate": {
            "passed": cert.passed,
            "margin": cert.margin,
            "stage_margins": list(cert.stage_margins),
            "tolerance": cert.tolerance,
            "strict": bool(strict),
        },
        "residuals": {
            "composite": report.residual,
            "max_constraint": max(s.constraint_residual for s in report.stages),
        },
        "wall_time": wall_time,
    }


def cmd_solve(args) -> int:
    try:
        problem = load_problem(args.problem)
    except OSError as exc:
        _err(f"cannot read problem file: {exc}")
        return EXIT_INPUT
    except ProblemFileError as exc:
        _err(f"{args.problem}: {exc}")
        return EXIT_INPUT
    try:
        report, cert, _, wall = solve_problem(problem, strict=args.strict)
    except (InfeasibleSolveError, ConvergenceError) as exc:
        _err(f"solve failed: {exc}")
        return EXIT_INFEASIBLE
    except ValueError as exc:
        _err(f"invalid problem: {exc}")
        return EXIT_INPUT
    write_json(args.out, report_record(problem, report, cert, args.strict, wall))
    if args.solution_csv:
        write_solution_csv(args.solution_csv, report.solution)
    verdict = "pass" if cert.passed else "FAIL"
    print(f"ratio {report.ratio:.9g}  bound {report.bound:.9g}  margin {cert.margin:.3e}  {verdict}")
    return EXIT_OK if cert.passed else EXIT_VIOLATION


def cmd_verify(args) -> int:
    try:
        rows = run_verify(args.kind, args.dim, args.degree, args.trials, args.seed)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT
    write_rows(args.out, rows)
    bad = [r for r in rows if not r.passed]
    for r in rows:
        if r.note == "tight":
            print(f"trial {r.trial}: {r.quantity} tight (residual {r.residual:.3e})")
    for r in bad:
        _err(f"violation: seed {args.seed} trial {r.trial} {r.quantity} "
             f"residual {r.residual:.3e} (tolerance {r.tolerance:.1e})")
    print(f"{len(rows)} rows, {len(bad)} violations")
    return EXIT_VIOLATION if bad else EXIT_OK


def parse_coeffs(text: str) -> tuple:
    try:
        return tuple(complex(tok.strip().replace("i", "j")) for tok in text.split(","))
    except ValueError:
        raise ValueError(f"cannot parse coefficient list {text!r}") from None


def cmd_roots(args) -> int:
    try:
        spec = PolynomialSpec(parse_coeffs(args.coeffs))
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT
    try:
        fo = factor_operator(spec)
    except ConvergenceError as exc:
        best = "" if exc.best is None else " best iterate: " + ", ".join(map(format_complex, exc.best))
        _err(f"{exc}{best}")
        return EXIT_VIOLATION
    roots = [-s for s in fo.shifts]
    rec = np.array(reconstruct(fo).coefficients)
    src = np.array(spec.coefficients)
    rec_err = float(np.max(np.abs(rec - src) / np.maximum(1.0, np.abs(src))))
    res = float(root_residuals(spec, roots).max())
    print("root\tshift")
    for r, s in zip(roots, fo.shifts):
        print(f"{format_complex(r)}\t{format_complex(s)}")
    print(f"reconstruction residual {rec_err:.3e}")
    tol = ROOT_TOL * (1.0 + float(np.abs(src).max()))
    print(f"max |P(root)| {res:.3e} (tolerance {tol:.1e})")
    return EXIT_OK if res <= tol else EXIT_VIOLATION


def cmd_counterexample(args) -> int:
    if not args.rmax > 1:
        _err("--rmax must exceed 1")
        return EXIT_INPUT
    result = run_counterexample(args.rmax, args.grid)
    print("R\tT(R) = int_1^R |u|^2 dx")
    for R, T in result.energies:
        print(f"{R:g}\t{T:.9g}")
    print(f"max rel. error of u'' vs 1/x: {result.fd_max_error:.3e} (tol {FD_RTOL:g})")
    print(f"int |f|^2 dx = {result.rhs_energy:.9g} (4/3 = {4 / 3:.9g})")
    print(f"weighted solve: ratio {result.weighted_ratio:.9g} <= bound {result.weighted_bound:.9g}")
    for name, ok in result.checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return EXIT_OK if result.passed else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rinv",
        description="Minimal-norm right inverse of P(Lap) on L2(R^n, exp(-|x|^2)).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem file and certify the bound")
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--strict", action="store_true",
                   help=f"certificate tolerance {STRICT_CERT_TOL:g} instead of the file's")
    p.add_argument("--solution-csv", help="write solution coefficients here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="randomized identity / coercivity / bound checks")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--degree", type=int, default=6)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("roots", help="factor P into (Lap + xi_j)")
    p.add_argument("--coeffs", required=True, help="a0,a1,...,a_{m-1}; complex as 1+2i; write --coeffs=-1,0 "
                        "when the list starts with a minus sign")
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("counterexample", help="unweighted divergence vs weighted bound")
    p.add_argument("--rmax", type=float, default=1000.0)
    p.add_argument("--grid", type=int, default=25, help="finite-difference check points")
    p.set_defaults(func=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
