"""Branch and bound over mixed-integer conic programs.

The search relaxes integrality, solves the continuous program at each
node, and branches on a fractional integer coordinate. Nodes come off
a best-bound heap with insertion order as the tie break, so runs are
deterministic. Incumbents are produced by pinning the integer part of
a nearly integral relaxation optimum and re-solving for the continuous
part, which avoids stacking rounding error on top of solver error.

Node relaxations are solved a good deal tighter than the user-facing
tolerances ask for. Objective values of degenerate fibers (feasible
sets touching a cone boundary tangentially) carry an error that scales
like the square root of the feasibility residual, so the residual has
to be pushed well below feas_eps for the reported optimum to honor
gap_eps. Extended precision makes this affordable on small problems.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from .core import ConicMip, Sense, Solution, Status, Tol, is_primal_feasible
from .errors import NodeLimitReached, SolverFailure
from .solver import ContinuousProgram, KktReport, solve_continuous

Bounds = Dict[int, Tuple[Optional[int], Optional[int]]]

# a node relaxation iterate is trusted when its residuals sit below these
_USABLE_RES = 1e-6
_USABLE_GAP = 1e-4

# largest denominator tried when scaling an unbounded ray to integers
_RAY_DENOM = 10 ** 6


@dataclass(frozen=True)
class BnbConfig:
    """Search controls for :func:`solve_mip`."""

    tol: Tol = field(default_factory=Tol)
    node_limit: int = 100000
    branch_rule: str = "MostFractional"
    node_order: str = "BestBound"

    def __post_init__(self):
        if self.node_limit < 1:
            raise ValueError("node_limit must be at least 1")
        if self.branch_rule != "MostFractional":
            raise ValueError(f"unknown branch rule {self.branch_rule!r}")
        if self.node_order != "BestBound":
            raise ValueError(f"unknown node order {self.node_order!r}")


@dataclass(frozen=True)
class BnbResult:
    solution: Solution
    nodes_explored: int
    best_bound: float


def _tight(tol: Tol) -> Tol:
    # see module docstring; never looser than what the caller asked for
    return Tol(feas_eps=min(tol.feas_eps, 1e-11),
               int_eps=tol.int_eps,
               gap_eps=tol.gap_eps,
               dual_eps=min(tol.dual_eps, 1e-9))


def _merged(bounds: Bounds, j: int, lo: Optional[int],
            hi: Optional[int]) -> Optional[Bounds]:
    """Intersect [lo, hi] into coordinate j; None when the box empties."""
    clo, chi = bounds.get(j, (None, None))
    nlo = clo if lo is None else (lo if clo is None else max(lo, clo))
    nhi = chi if hi is None else (hi if chi is None else min(hi, chi))
    if nlo is not None and nhi is not None and nlo > nhi:
        return None
    child = dict(bounds)
    child[j] = (nlo, nhi)
    return child


def _node_program(base: ContinuousProgram, bounds: Bounds) -> ContinuousProgram:
    if not bounds:
        return base
    rows = [(j, None if lo is None else float(lo), None if hi is None else float(hi))
            for j, (lo, hi) in sorted(bounds.items())]
    return base.with_bound_rows(rows)


def _usable(sol: Solution, rep: KktReport) -> bool:
    if sol.status is Status.OPTIMAL:
        return True
    return (sol.status is Status.ITER_LIMIT and sol.x is not None
            and rep.primal_res <= _USABLE_RES and rep.dual_res <= _USABLE_RES
            and rep.comp_gap <= _USABLE_GAP)


def _ray_scale(ray_x: np.ndarray, int_eps: float) -> Optional[int]:
    """Multiplier turning the ray's integer part integral, or None."""
    if ray_x.size == 0 or float(np.max(np.abs(ray_x))) <= 1e-12:
        return 1
    scale = 1
    for v in ray_x:
        frac = Fraction(float(v)).limit_denominator(_RAY_DENOM)
        scale = scale * frac.denominator // math.gcd(scale, frac.denominator)
        if scale > _RAY_DENOM:
            return None
    if np.max(np.abs(ray_x * scale - np.round(ray_x * scale))) > int_eps * scale:
        return None
    return scale


def _fiber_value(inst: ConicMip, base: ContinuousProgram, r: np.ndarray,
                 tol: Tol) -> Optional[Tuple[float, np.ndarray]]:
    """Best continuous completion of the integer assignment r.

    Returns (value, y) or None when the fiber is empty or the solve is
    not trustworthy. Pure integer instances are evaluated arithmetically.
    """
    if inst.n2 == 0:
        y = np.zeros(0)
        if not is_primal_feasible(inst, r, y, tol):
            return None
        return float(inst.c @ r), y
    pinned = base.with_bound_rows([(j, float(r[j]), float(r[j]))
                                   for j in range(inst.n1)])
    sol, rep = solve_continuous(pinned, _tight(tol))
    if not _usable(sol, rep):
        return None
    if not is_primal_feasible(inst, r, sol.y, tol):
        return None
    return float(inst.c @ r + inst.d @ sol.y), sol.y


def _prune_slack(inc: float) -> float:
    return 1e-10 * (1.0 + abs(inc))


def _most_fractional(frac: np.ndarray, int_eps: float) -> int:
    dist = np.abs(frac - 0.5)
    dist[frac <= int_eps] = math.inf
    dist[frac >= 1.0 - int_eps] = math.inf
    return int(np.argmin(dist))


def _widest_unpinned(n1: int, bounds: Bounds) -> Optional[int]:
    best, width = None, 0.0
    for j in range(n1):
        lo, hi = bounds.get(j, (None, None))
        w = math.inf if lo is None or hi is None else float(hi - lo)
        if w > width:
            best, width = j, w
    return best


def solve_mip(inst: ConicMip, cfg: Optional[BnbConfig] = None) -> BnbResult:
    """Globally solve a mixed-integer conic program.

    The result's status is Optimal, Infeasible (every leaf relaxation
    carried an infeasibility certificate), or Unbounded (the relaxation
    has an improving ray compatible with the lattice). Hitting the node
    limit raises NodeLimitReached carrying the best bound and incumbent
    seen so far.
    """
    cfg = cfg or BnbConfig()
    tol = cfg.tol
    base = ContinuousProgram.from_instance(inst)
    ntol = _tight(tol)

    incumbent: Optional[Tuple[float, np.ndarray, np.ndarray]] = None
    heap = [(-math.inf, 0, {})]
    counter = 0
    explored = 0

    def push(bound: float, bounds: Optional[Bounds]):
        nonlocal counter
        if bounds is None:
            return
        counter += 1
        heapq.heappush(heap, (bound, counter, bounds))

    def remaining_bound() -> float:
        lo = incumbent[0] if incumbent is not None else math.inf
        if heap:
            lo = min(lo, heap[0][0])
        return lo

    while heap:
        parent_bound, _, bounds = heapq.heappop(heap)
        if incumbent is not None and parent_bound >= incumbent[0] - _prune_slack(incumbent[0]):
            continue
        if explored >= cfg.node_limit:
            inc_sol = None
            if incumbent is not None:
                inc_sol = Solution(Status.OPTIMAL, x=incumbent[1],
                                   y=incumbent[2], obj=incumbent[0])
            raise NodeLimitReached(f"node limit {cfg.node_limit} reached",
                                   best_bound=remaining_bound(), incumbent=inc_sol)
        explored += 1

        sol, rep = solve_continuous(_node_program(base, bounds), ntol)

        if sol.status is Status.INFEASIBLE:
            continue

        if sol.status is Status.UNBOUNDED:
            outcome = _resolve_unbounded(inst, cfg, sol, tol)
            if outcome is None:
                continue  # certified ray but no lattice point reaches it
            if outcome == "bail":
                raise NodeLimitReached("relaxation ray resists integral scaling",
                                       best_bound=-math.inf, incumbent=None)
            ray, extra_nodes = outcome
            return BnbResult(ray, explored + extra_nodes, -math.inf)

        if _usable(sol, rep):
            bound = sol.obj
        elif sol.x is not None:
            bound = parent_bound
        else:
            raise SolverFailure("node relaxation returned no usable iterate")

        if incumbent is not None and bound >= incumbent[0] - _prune_slack(incumbent[0]):
            continue

        x = sol.x
        frac = np.abs(x - np.round(x)) if x.size else np.zeros(0)
        if x.size == 0 or float(frac.max(initial=0.0)) <= tol.int_eps:
            r = np.round(x)
            cand = _fiber_value(inst, base, r, tol)
            if cand is not None:
                val, yfix = cand
                if incumbent is None or val < incumbent[0]:
                    incumbent = (val, r, yfix)
                if val <= bound + 1e-9 * (1.0 + abs(val)):
                    continue  # relaxation optimum attained on this fiber
            j = _widest_unpinned(inst.n1, bounds)
            if j is None:
                continue  # everything pinned; the fiber value settled it
            k = int(round(x[j]))
            for lo, hi in ((None, k - 1), (k, k), (k + 1, None)):
                push(bound, _merged(bounds, j, lo, hi))
            continue

        j = _most_fractional(frac, tol.int_eps)
        fl = math.floor(x[j])
        push(bound, _merged(bounds, j, None, fl))
        push(bound, _merged(bounds, j, fl + 1, None))

    if incumbent is None:
        return BnbResult(Solution(Status.INFEASIBLE, obj=math.inf),
                         explored, math.inf)
    val, r, yfix = incumbent
    return BnbResult(Solution(Status.OPTIMAL, x=r, y=yfix, obj=val),
                     explored, val)


def _resolve_unbounded(inst: ConicMip, cfg: BnbConfig, sol: Solution, tol: Tol):
    """Decide what an unbounded node relaxation means for the lattice.

    Returns (ray_solution, extra_nodes) when the program is certified
    unbounded, None when no lattice point exists under the instance,
    or "bail" when the ray cannot be scaled to integral form.
    """
    scale = _ray_scale(sol.x, tol.int_eps)
    if scale is None:
        return "bail"
    zero = ConicMip(inst.A, inst.G, inst.b,
                    np.zeros(inst.n1), np.zeros(inst.n2),
                    inst.cone, inst.sense, inst.blocks)
    probe = solve_mip(zero, BnbConfig(tol=cfg.tol, node_limit=cfg.node_limit))
    if probe.solution.status is not Status.OPTIMAL:
        return None
    ray_x = np.round(sol.x * scale)
    ray_y = sol.y * scale if sol.y is not None else None
    ray = Solution(Status.UNBOUNDED, x=ray_x, y=ray_y, obj=-math.inf)
    return ray, probe.nodes_explored


def value_function(inst: ConicMip, omega, cfg: Optional[BnbConfig] = None) -> float:
    """Optimal value as a function of the right-hand side.

    Returns +inf when omega is unreachable (the instance is infeasible
    at that right-hand side) and -inf when the problem is unbounded.
    """
    res = solve_mip(inst.with_rhs(omega), cfg)
    if res.solution.status is Status.INFEASIBLE:
        return math.inf
    if res.solution.status is Status.UNBOUNDED:
        return -math.inf
    return res.solution.obj


def feasible_rhs(inst: ConicMip, omega, sense: Sense,
                 cfg: Optional[BnbConfig] = None) -> bool:
    """Whether some lattice point reaches omega under the given sense."""
    probe = ConicMip(inst.A, inst.G, omega,
                     np.zeros(inst.n1), np.zeros(inst.n2),
                     inst.cone, sense, inst.blocks)
    res = solve_mip(probe, cfg)
    return res.solution.status is Status.OPTIMAL
