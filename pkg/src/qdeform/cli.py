"""``qdeform`` command line: alpha, geodesic, verify, counterexample.

Reports go to stdout as JSON (CSV for ``geodesic``); diagnostics go to
stderr. Exit codes: 0 ok, 2 malformed input, 3 hypothesis violation,
4 failed check, 5 no certificate found.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import io
from . import monotonicity as lab
from . import report
from .operators import DimensionError
from .scalar import DomainError, ScalarEvalConfig
from .states import (
    Direction,
    HypothesisError,
    FaithfulDensity,
    center_direction,
    geodesic_sample,
    normalization_value,
    solve_alpha,
    verify_alpha_bounds,
)
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_HYPOTHESIS = 3
EXIT_CHECK = 4
EXIT_NOT_FOUND = 5

ENV_LAMBDA = "DEFORM_LAMBDA"


class UsageError(Exception):
    """Bad input detected by the CLI itself; maps to exit code 2."""


def _diag(msg: str) -> None:
    print(f"qdeform: {msg}", file=sys.stderr)


def _default_lambda() -> float:
    raw = os.environ.get(ENV_LAMBDA)
    if raw is None:
        return 1.0
    try:
        lam = float(raw)
    except ValueError:
        raise UsageError(f"{ENV_LAMBDA}={raw!r} is not a number")
    return lam


def _lambda(args) -> float:
    lam = args.lam if args.lam is not None else _default_lambda()
    if not (math.isfinite(lam) and lam > 0):
        raise UsageError(f"lambda must be positive and finite, got {lam}")
    return lam


def _load_pair(args):
    rho = io.read_matrix(args.rho)
    K = io.read_matrix(args.k)
    if rho.shape != K.shape:
        raise UsageError(f"rho is {rho.shape[0]}x{rho.shape[0]} but K is {K.shape[0]}x{K.shape[0]}")
    dens = FaithfulDensity.from_matrix(rho)
    if args.center:
        d = center_direction(dens, K)
    else:
        try:
            d = Direction.checked(dens, K)
        except HypothesisError as exc:
            raise HypothesisError(f"{exc}; rerun with --center to subtract tr(rho K)") from exc
    return rho, K, dens, d


def cmd_alpha(args) -> int:
    lam = _lambda(args)
    rho, K, dens, d = _load_pair(args)
    cfg = ScalarEvalConfig()
    alpha = solve_alpha(dens, d, lam, cfg)
    s = math.sqrt(max(float(np.trace(dens.rho @ d.K @ d.K).real), 0.0))
    residual = normalization_value(dens, d, alpha, lam, cfg) - 1.0
    shift = float(np.trace(dens.rho @ K).real) if args.center else 0.0
    checks = [report.leq("normalization_residual", "normalization.solver", abs(residual), args.tol)]
    checks += verify_alpha_bounds(dens, d, lam, cfg)
    results = {
        "alpha": alpha,
        "s": s,
        "lambda": lam,
        "dim": int(rho.shape[0]),
        "centering_shift": shift,
        "alpha_uncentered": alpha + shift,
        "normalization_residual": residual,
    }
    inputs = io.digest(rho, K, {"lambda": lam, "tol": args.tol, "center": bool(args.center)})
    sys.stdout.write(io.dump_report("alpha", inputs, results, checks))
    return EXIT_OK if all(c.ok for c in checks) else EXIT_CHECK


def cmd_geodesic(args) -> int:
    lam = _lambda(args)
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    if not (math.isfinite(args.t_min) and math.isfinite(args.t_max)):
        raise UsageError("--t-min/--t-max must be finite")
    _, _, dens, d = _load_pair(args)
    probes = [io.read_matrix(f) for f in args.probe]
    for f, A in zip(args.probe, probes):
        if A.shape != dens.rho.shape:
            raise UsageError(f"probe {f} has dimension {A.shape[0]}, expected {dens.dim}")
    grid = np.linspace(args.t_min, args.t_max, args.steps)
    rows = geodesic_sample(dens, d, grid, probes, lam)
    io.geodesic_csv(rows, len(probes), sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be positive")
    checks = run_suite(args.suite, args.seed, args.trials)
    counts = {st: sum(c.status == st for c in checks)
              for st in (report.PASS, report.FAIL, report.SKIPPED)}
    results = {"suite": args.suite, "seed": args.seed, "trials": args.trials, "counts": counts}
    for c in checks:
        if c.name.endswith("constant_C_in_range"):
            results["constant_C"] = c.lhs
    inputs = io.digest({"suite": args.suite, "seed": args.seed, "trials": args.trials})
    sys.stdout.write(io.dump_report("verify", inputs, results, checks))
    failed = [c.name for c in checks if c.status == report.FAIL]
    for name in failed:
        _diag(f"check failed: {name}")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_counterexample(args) -> int:
    lam = _lambda(args)
    cfg = lab.SearchConfig(lam=lam, seed=args.seed)
    inputs = io.digest({"fn": args.fn, "lambda": lam, "seed": args.seed})
    try:
        cert = lab.build_counterexample(args.fn, cfg)
    except lab.SearchExhausted as exc:
        _diag(str(exc))
        best = exc.best.to_dict() if exc.best is not None else None
        check = report.truth("certificate_found", "nonmonotone.certificate", False)
        sys.stdout.write(io.dump_report("counterexample", inputs, {"best": best}, [check]))
        return EXIT_NOT_FOUND
    # revalidate from the serialized form so the emitted matrices are what is checked
    again = lab.LoewnerCertificate.from_dict(json.loads(json.dumps(cert.to_dict())))
    chk = lab.validate_certificate(again, cfg.violation_tol)
    results = {
        "certificate": cert.to_dict(),
        "revalidation": {"order_gap": chk.order_gap, "violation": chk.violation, "valid": chk.valid},
    }
    checks = [
        report.leq("order_gap_nonnegative", "nonmonotone.certificate", 0.0, chk.order_gap,
                   1e-12 * (1.0 + float(np.max(np.abs(again.A - again.B))))),
        report.lt("violation_below_tolerance", "nonmonotone.certificate", chk.violation, -cfg.violation_tol),
    ]
    sys.stdout.write(io.dump_report("counterexample", inputs, results, checks))
    return EXIT_OK if chk.valid else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdeform", description="Deformed exponential family toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def state_args(p):
        p.add_argument("--rho", required=True, help="density matrix file (JSON)")
        p.add_argument("--k", required=True, help="direction K file (JSON)")
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help=f"deformation constant (default ${ENV_LAMBDA} or 1)")
        p.add_argument("--center", action="store_true", help="subtract tr(rho K) from K first")

    p = sub.add_parser("alpha", help="normalization alpha and its bounds")
    state_args(p)
    p.add_argument("--tol", type=float, default=1e-11, help="tolerance on |N(alpha) - 1|")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("geodesic", help="sample t -> omega_t as CSV")
    state_args(p)
    p.add_argument("--t-min", type=float, required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--probe", action="append", default=[], help="observable file, repeatable")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("counterexample", help="certify failure of operator monotonicity")
    p.add_argument("--fn", required=True, choices=["u-minus-exp-phi", "log-exp-phi"])
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_counterexample)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the malformed-input code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (io.MalformedInput, UsageError, DimensionError, DomainError) as exc:
        _diag(f"malformed input: {exc}")
        return EXIT_MALFORMED
    except HypothesisError as exc:
        _diag(f"hypothesis violated: {exc}")
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
