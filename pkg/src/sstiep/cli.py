"""Command-line entry point.

Exit codes: 0 solved / verified, 1 input error, 2 no zero value found,
3 verification failure, 4 provably unrealizable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict

import numpy as np

from . import io
from .am import ZERO_THRESHOLD, InitStrategy, Outcome, am_solve, classify_outcome
from .bounds import bound_report
from .errors import SstiepError
from .experiments import CampaignConfig, run_campaign
from .kkt import KKT_TOL, kkt_report
from .linalg import norm_maxabs
from .phasetype import beta_from_residues, mgf_eval, nonexistence_screen_n3, solve_phasetype
from .subproblems import MatrixPair, ProblemData, objective_direct

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_ZERO = 2
EXIT_VERIFY = 3
EXIT_UNREALIZABLE = 4

MGF_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _strategy(args, opts: dict) -> InitStrategy:
    name = args.init or opts.get("strategy", "diag")
    eps = args.epsilon if args.epsilon is not None else opts.get("epsilon", 1e-3)
    seed = args.seed if args.seed is not None else opts.get("seed")
    if "initial_A" in opts and args.init is None and "strategy" not in opts:
        return InitStrategy("explicit", matrix=opts["initial_A"])
    return InitStrategy.parse(name, epsilon=float(eps), seed=seed)


def _solver_kwargs(args, opts: dict) -> dict:
    kw = {
        "tol": args.tol if args.tol is not None else float(opts.get("tol", 1e-6)),
        "max_iters": args.max_iters if args.max_iters is not None else int(opts.get("max_iters", 50000)),
    }
    if args.time_budget is not None:
        kw["time_budget"] = args.time_budget
    return kw


def _kkt_dict(data: ProblemData, A, P) -> dict:
    try:
        r = kkt_report(data, A, P)
    except SstiepError as exc:
        return {"error": str(exc)}
    return {
        "stationarity_P": r.stationarity_P,
        "stationarity_A": r.stationarity_A,
        "complementarity": r.complementarity,
        "feasibility": r.feasibility,
    }


def _bounds_dict(data: ProblemData, A) -> dict:
    rep = bound_report(data, A)
    return {
        "rho_bar": rep.rho_bar,
        "rho_log": rep.rho.log,
        "prop1_bound": rep.prop1_lower_bound,
        "det_BBt": rep.det_BBt,
    }


def _result_doc(data: ProblemData, trace, init: str) -> dict:
    outcome = classify_outcome(trace)
    A, P = trace.final.A, trace.final.P
    return {
        "status": outcome.value,
        "objective": trace.objective,
        "iterations": trace.n_iterations,
        "wall_time": trace.wall_time,
        "trace_status": trace.status.value,
        "init": init,
        "lambda": data.lam,
        "beta": data.beta,
        "A": A,
        "P": P,
        "kkt": _kkt_dict(data, A, P),
        "bounds": _bounds_dict(data, A),
    }


def _emit(doc: dict, out: str | None) -> None:
    if out:
        io.write_json(out, doc)
    summary = {k: doc[k] for k in ("status", "objective", "iterations") if k in doc}
    print(" ".join(f"{k}={v}" for k, v in summary.items()))


def cmd_solve(args) -> int:
    data, opts = io.read_problem(args.input)
    strategy = _strategy(args, opts)
    trace = am_solve(data, strategy, **_solver_kwargs(args, opts))
    doc = _result_doc(data, trace, strategy.kind)
    _emit(doc, args.out)
    return EXIT_OK if classify_outcome(trace) is Outcome.SOLUTION_FOUND else EXIT_NO_ZERO


def verify_result(doc: dict) -> list[tuple[str, bool, str]]:
    """Checks run by ``verify``: (name, passed, detail)."""
    data = ProblemData(doc["lambda"], doc["beta"], check=False)
    A, P = doc["A"], doc["P"]
    checks = []
    obj = objective_direct(data, A, P)
    checks.append(("objective", abs(obj - float(doc["objective"])) <= 1e-8,
                   f"recomputed {obj!r}, stored {doc['objective']!r}"))
    status = doc.get("status")
    if status is not None:
        expect = classify_outcome(obj).value
        checks.append(("status", status == expect, f"stored {status}, objective implies {expect}"))
    neg = np.argwhere(A < -1e-10)
    checks.append(("A nonnegative", neg.size == 0,
                   "ok" if neg.size == 0 else f"entry ({neg[0][0] + 1},{neg[0][1] + 1}) = {A[tuple(neg[0])]!r}"))
    sums = A.sum(axis=1)
    for i in np.flatnonzero(sums > 1 + 1e-10):
        checks.append((f"A row {i + 1} sum", False, f"{sums[i]!r} > 1"))
    if np.all(sums <= 1 + 1e-10):
        checks.append(("A row sums", True, f"max {float(np.max(sums))!r}"))
    pair = MatrixPair(A, P, obj)
    v = pair.violations(data)
    checks.append(("P row sums", v["P_row_sums"] <= 1e-8, f"max deviation {v['P_row_sums']:.3e}"))
    checks.append(("beta P nonnegative", v["betaP_nonnegative"] <= 1e-8, f"violation {v['betaP_nonnegative']:.3e}"))
    try:
        r = kkt_report(data, A, P)
        checks.append(("KKT residuals", r.passes(KKT_TOL), f"max {r.max_residual:.3e} (tol {KKT_TOL:g})"))
    except SstiepError as exc:
        checks.append(("KKT residuals", False, str(exc)))
    rep = bound_report(data, A)
    checks.append(("det(BB') >= lower bound", bool(rep.prop1_holds),
                   f"det {rep.det_BBt:.6e}, bound {rep.prop1_lower_bound:.6e}"))
    pn = norm_maxabs(P)
    checks.append(("||P|| <= rho", rep.rho.exceeds(pn), f"||P|| {pn:.4g}, log rho {rep.rho.log:.4g}"))
    return checks


def cmd_verify(args) -> int:
    doc = io.read_result(args.result)
    try:
        checks = verify_result(doc)
    except SstiepError as exc:
        print(f"FAIL input: {exc}")
        return EXIT_INPUT
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_VERIFY


def cmd_bounds(args) -> int:
    data, opts = io.read_problem(args.input)
    A = opts.get("initial_A")
    rep = bound_report(data, A)
    print(f"rho_bar      {rep.rho_bar!r}")
    print(f"log rho      {rep.rho.log!r}")
    print(f"rho          {rep.rho.value!r}" if rep.rho.value is not None else "rho          > 1e300")
    print(f"prop1 bound  {rep.prop1_lower_bound!r}")
    if A is not None:
        print(f"det(BB')     {rep.det_BBt!r}  ({'holds' if rep.prop1_holds else 'VIOLATED'})")
    if args.out:
        io.write_json(args.out, {"rho_bar": rep.rho_bar, "rho_log": rep.rho.log,
                                 "prop1_bound": rep.prop1_lower_bound, "det_BBt": rep.det_BBt})
    return EXIT_OK if rep.prop1_holds in (None, True) else EXIT_VERIFY


def cmd_phasetype(args) -> int:
    spec, opts = io.read_spec(args.input)
    renorm = bool(args.renormalize or opts.get("renormalize", False))
    if spec.n == 3:
        beta = beta_from_residues(spec, renormalize=renorm)
        screen = nonexistence_screen_n3(ProblemData(spec.lam, beta / beta.sum()))
        if screen.unrealizable:
            print(f"provably unrealizable: {screen.reason}")
            if args.out:
                io.write_json(args.out, {"status": "provably_unrealizable", "lambda": spec.lam,
                                         "beta": beta, "screen": asdict(screen) | {"verdict": screen.verdict.value}})
            return EXIT_UNREALIZABLE
    result = solve_phasetype(spec, _strategy(args, opts), renormalize=renorm, **_solver_kwargs(args, opts))
    data = ProblemData(spec.lam, result.beta)
    doc = _result_doc(data, result.trace, args.init or opts.get("strategy", "diag"))
    if result.representation is not None:
        doc["alpha"] = result.representation.alpha
        if args.check_mgf:
            scale = spec.f(1.0)
            doc["mgf_check"] = [
                {"z": z, "mgf": mgf_eval(result.representation, z), "partial_fraction": spec.f(z) / scale}
                for z in MGF_GRID
            ]
    _emit(doc, args.out)
    if "mgf_check" in doc:
        for row in doc["mgf_check"]:
            print(f"z={row['z']:.1f} mgf={row['mgf']:.8f} f={row['partial_fraction']:.8f}")
    return EXIT_OK if result.found else EXIT_NO_ZERO


def cmd_campaign(args) -> int:
    config = CampaignConfig(
        n=args.n,
        group_size=args.group_size,
        init=args.init,
        seed=args.seed,
        tol=args.tol,
        zero_threshold=args.zero_threshold,
        time_budget=args.budget,
        total_budget=args.total_budget,
        max_instances=args.max_instances,
        workers=args.workers,
    )
    report = run_campaign(config)
    print(report.table())
    if args.out:
        io.write_json(args.out, report.to_dict())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sstiep", description="Substochastic inverse eigenvalue problems by alternating minimization.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_flags(sp):
        sp.add_argument("--init", help="diag, zero, tilde, bar, hat, random")
        sp.add_argument("--epsilon", type=float, help="epsilon of the hat initialization")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iters", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--time-budget", type=float, help="seconds")
        sp.add_argument("--out", help="result file (JSON)")

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("input")
    solver_flags(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", help="re-check a result file")
    s.add_argument("result")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bounds", help="print the explicit bounds for a problem file")
    s.add_argument("input")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("phasetype", help="phase-type representation from poles and residues")
    s.add_argument("input")
    solver_flags(s)
    s.add_argument("--renormalize", action="store_true", help="divide residues by f(1)")
    s.add_argument("--check-mgf", action="store_true", help="compare mgf values on a z grid")
    s.set_defaults(func=cmd_phasetype)

    s = sub.add_parser("campaign", help="seeded random-instance campaign")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--init", default="diag")
    s.add_argument("--group-size", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--zero-threshold", type=float, default=ZERO_THRESHOLD)
    s.add_argument("--budget", type=float, default=120.0, help="seconds per instance")
    s.add_argument("--total-budget", type=float, help="seconds for the whole campaign")
    s.add_argument("--max-instances", type=int, default=10_000)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_campaign)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SstiepError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
