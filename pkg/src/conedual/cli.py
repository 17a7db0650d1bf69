"""Command-line front end.

Exit codes follow the solve status so shell pipelines can branch on
them: 0 optimal, 2 infeasible, 3 unbounded, 4 when a node or iteration
limit stopped the search, and 1 for anything wrong with the input
itself (bad files, bad flags, dimension mismatches). Reports that a
certificate check failed are still exit 0; the report is the product,
not the verdict.

Verification reports are judged at a looser tolerance (1e-4) than the
library defaults. Certificates of interest here live at coefficient
scales around 1e4 and the generator value then carries solver noise of
order 1e-5; the library defaults would reject textbook-true statements.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional, Tuple

import numpy as np

from . import files
from .core import Solution, Status, Tol
from .duality import (
    CertOrigin,
    GeneratorCertificate,
    alpha_star_from_hull,
    check_complementary_slackness,
    check_dual_feasibility,
    check_weak_duality,
    eval_generator,
    sample_generators,
    sweep_generator,
)
from .errors import (
    BoxTooSmall,
    EmptyU,
    InfeasiblePoint,
    NodeLimitReached,
    NoStrongDuality,
    OmegaInfeasible,
    SolverFailure,
    VerificationFailed,
)
from .files import FileFormatError
from .mip import BnbConfig, solve_mip
from .structure import build_fiber_hull, check_packing_bounded, \
    build_clustering_instance, hull_minimize

REPORT_EPS = 1e-4

_EXIT = {Status.OPTIMAL: 0, Status.INFEASIBLE: 2, Status.UNBOUNDED: 3,
         Status.ITER_LIMIT: 4, Status.NODE_LIMIT: 4}


def _seed() -> int:
    try:
        return int(os.environ.get("CDK_SEED", "42"))
    except ValueError:
        raise FileFormatError("CDK_SEED must be an integer")


def _jsonable(obj):
    """Make numpy values and non-finite floats JSON-safe."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def _emit(report: dict, path: Optional[str] = None) -> None:
    text = json.dumps(_jsonable(report), indent=2)
    print(text)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _parse_vector(text: str, m: int, name: str) -> np.ndarray:
    try:
        vals = [float(tok) for tok in text.split(",")]
    except ValueError:
        raise FileFormatError(f"{name} must be comma-separated numbers")
    if len(vals) != m:
        raise FileFormatError(f"{name} has {len(vals)} entries, expected {m}")
    return np.array(vals)


def _parse_grid(text: str) -> List[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise FileFormatError('grid must be "start:stop:step" or a comma list')
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise FileFormatError("grid endpoints must be numbers")
        if stop < start:
            raise FileFormatError("grid stop lies below start")
        if start == stop:
            return [start]
        if step <= 0:
            raise FileFormatError("grid step must be positive")
        # endpoint is inclusive; the epsilon absorbs float division error
        count = int(math.floor((stop - start) / step + 1e-9))
        return [start + k * step for k in range(count + 1)]
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError:
        raise FileFormatError("grid must be comma-separated numbers")


def _parse_u_box(text: str, n1: int) -> List[Tuple[int, int]]:
    box = []
    for tok in text.split(","):
        ends = tok.split(":")
        if len(ends) != 2:
            raise FileFormatError('u-box entries must be "lo:hi"')
        try:
            lo, hi = int(ends[0]), int(ends[1])
        except ValueError:
            raise FileFormatError("u-box bounds must be integers")
        box.append((lo, hi))
    if len(box) != n1:
        raise FileFormatError(f"u-box has {len(box)} ranges, expected {n1}")
    return box


def _solution_report(sol: Solution, nodes: int) -> dict:
    return {
        "status": sol.status.value,
        "obj": sol.obj,
        "x": None if sol.x is None else sol.x,
        "y": None if sol.y is None else sol.y,
        "nodes": nodes,
    }


def cmd_solve(args) -> int:
    inst, _ = files.read_problem(args.problem)
    try:
        res = solve_mip(inst)
    except NodeLimitReached as exc:
        sol = exc.incumbent or Solution(Status.NODE_LIMIT)
        report = _solution_report(sol, None)
        report["status"] = Status.NODE_LIMIT.value
        _emit(report)
        return 4
    _emit(_solution_report(res.solution, res.nodes_explored))
    return _EXIT[res.solution.status]


def cmd_gen_sweep(args) -> int:
    inst, _ = files.read_problem(args.problem)
    if inst.m != 1:
        raise FileFormatError("gen-sweep handles single-row instances only")
    alpha = _parse_vector(args.alpha, inst.m, "alpha")
    grid = _parse_grid(args.omega_grid)
    cert = GeneratorCertificate(alpha, CertOrigin.USER_GIVEN, inst)
    rows = sweep_generator(cert, [np.array([v]) for v in grid])
    files.write_sweep(args.out, rows)
    if args.plot:
        from .plotting import plot_sweep
        plot_sweep(rows, args.plot)
    return 0


def cmd_certify(args) -> int:
    inst, _ = files.read_problem(args.problem)
    if args.alpha is None and not args.auto:
        raise FileFormatError("certify needs --alpha or --auto")
    res = solve_mip(inst)
    if res.solution.status is not Status.OPTIMAL:
        print(json.dumps({"status": res.solution.status.value}))
        return _EXIT[res.solution.status]
    zstar = res.solution.obj

    if args.auto:
        if args.u_box is None:
            raise FileFormatError("--auto requires --u-box")
        hull = build_fiber_hull(inst, _parse_u_box(args.u_box, inst.n1))
        cert = alpha_star_from_hull(inst, hull)
    else:
        alpha = _parse_vector(args.alpha, inst.m, "alpha")
        cert = GeneratorCertificate(alpha, CertOrigin.USER_GIVEN, inst)

    if args.gens:
        gens = files.read_generators(args.gens, inst)
    else:
        gens = sample_generators(inst, soc_samples=args.sample, seed=_seed())

    cfg = BnbConfig(tol=Tol(gap_eps=REPORT_EPS))
    feas = check_dual_feasibility(inst, cert, gens, cfg)
    worst = max([lhs - rhs for lhs, rhs, _ in feas.rows] + [abs(feas.zero_value)])
    weak = check_weak_duality(inst, cert, res.solution, cfg)
    value = eval_generator(cert, inst.b)
    gap = abs(value - zstar)
    report = {
        "origin": cert.origin.value,
        "alpha": cert.alpha,
        "dual_feasible": feas.holds,
        "dual_worst_violation": worst,
        "dual_samples": feas.samples,
        "weak_duality": weak.holds,
        "strong_duality": bool(gap <= REPORT_EPS * (1.0 + abs(zstar))),
        "strong_duality_gap": gap,
        "comp_slack": check_complementary_slackness(
            inst, cert, res.solution, cfg),
        "objective": zstar,
        "generator_value": value,
    }
    _emit(report, args.out)
    return 0


def cmd_pack_check(args) -> int:
    inst, _ = files.read_problem(args.problem)
    verdict = check_packing_bounded(inst)
    print({"Bounded": "bounded", "Unbounded": "unbounded",
           "NotPacking": "not-packing"}[verdict.value])
    return 0


def cmd_cluster(args) -> int:
    points = files.read_points_csv(args.points)
    if args.q < 1:
        raise FileFormatError("q must be at least 1")
    block = build_clustering_instance(points, args.q)
    inst = block.concat()
    res = solve_mip(inst)
    if res.solution.status is not Status.OPTIMAL:
        print(json.dumps({"status": res.solution.status.value}))
        return _EXIT[res.solution.status]
    npts, p = points.shape
    xs = 2 * npts                    # per-cluster integer stride
    ys = p + npts + npts * (p + 1)   # per-cluster continuous stride
    zeta = np.stack([res.solution.x[q * xs:q * xs + npts]
                     for q in range(args.q)])
    report = {
        "assignments": np.argmax(zeta, axis=0),
        "representatives": [res.solution.y[q * ys:q * ys + p]
                            for q in range(args.q)],
        "objective": res.solution.obj,
    }
    _emit(report, args.out)
    return 0


def cmd_fiber_hull(args) -> int:
    inst, _ = files.read_problem(args.problem)
    hull = build_fiber_hull(inst, _parse_u_box(args.u_box, inst.n1))
    sol, _ = hull_minimize(inst, hull)
    report = {
        "fibers": [list(u) for u in hull.U],
        "lifted_rows": int(hull.Pi.shape[0]),
        "lifted_cols": int(hull.Psi.shape[1]),
        "status": sol.status.value,
        "optimal_value": sol.obj,
    }
    _emit(report, args.out)
    return _EXIT[sol.status]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 means infeasible here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conedual",
                     description="mixed-integer conic programs and their "
                                 "generator subadditive certificates")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("problem")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen-sweep",
                       help="tabulate a generator over a grid of right-hand sides")
    p.add_argument("problem")
    p.add_argument("--alpha", required=True,
                   help="comma-separated multiplier vector")
    p.add_argument("--omega-grid", required=True,
                   help='"start:stop:step" (inclusive) or comma list')
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--plot", help="also render a PNG to this path")
    p.set_defaults(func=cmd_gen_sweep)

    p = sub.add_parser("certify", help="verify a dual certificate")
    p.add_argument("problem")
    p.add_argument("--alpha", help="comma-separated multiplier vector")
    p.add_argument("--auto", action="store_true",
                   help="derive the multiplier from the fiber hull")
    p.add_argument("--u-box", help='fiber enumeration box "lo:hi,..." (with --auto)')
    p.add_argument("--gens", help="generating-set JSON file")
    p.add_argument("--sample", type=int, default=64,
                   help="second-order boundary sample count (default 64)")
    p.add_argument("--out", help="also write the report JSON to this path")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("pack-check", help="classify a packing instance")
    p.add_argument("problem")
    p.set_defaults(func=cmd_pack_check)

    p = sub.add_parser("cluster", help="min-sum-of-distances clustering")
    p.add_argument("--points", required=True, help="CSV of points, one per row")
    p.add_argument("--q", required=True, type=int, help="number of clusters")
    p.add_argument("--out", help="also write the result JSON to this path")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("fiber-hull", help="build the lifted hull of a box of fibers")
    p.add_argument("problem")
    p.add_argument("--u-box", required=True, help='enumeration box "lo:hi,..."')
    p.add_argument("--out", help="also write the report JSON to this path")
    p.set_defaults(func=cmd_fiber_hull)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileFormatError, InfeasiblePoint, BoxTooSmall) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OmegaInfeasible, EmptyU) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except NodeLimitReached as exc:
        print(f"limit: {exc}", file=sys.stderr)
        return 4
    except (SolverFailure, VerificationFailed, NoStrongDuality) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
