"""Generator subadditive certificates and their verification.

A certificate is a vector alpha. The function it generates,

    F_alpha(w) = alpha'w - sup{(A'alpha - c)'x + (G'alpha - d)'y
                               : Ax + Gy <= w, (x, y) in M},

is subadditive with F_alpha(0) = 0 and underestimates the optimal
value at every reachable right-hand side, which makes the family
{F_alpha} a searchable slice of the subadditive dual. This module
evaluates F_alpha, sweeps it over right-hand-side grids together with
its continuous relaxation, maximizes the Lagrangian dual by
supergradient ascent, extracts an optimal alpha from a convex-hull
reformulation, and checks the three certificate properties (weak
duality, dual feasibility over a generating set, complementary
slackness).

Two independent evaluation routes exist on purpose. eval_generator
poses the inner supremum as a <=-sense integer program with shifted
objective; lagrangian_value poses the same number as an equality
program with explicit slack columns. Tests hold the two within 1e-8
of each other, which guards against sign conventions and formulation
bugs that a single route would hide.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import cones
from .cones import ConeSpec
from .core import (ConicMip, Sense, Solution, Status, Tol, as_vector,
                   is_primal_feasible)
from .errors import InfeasiblePoint, OmegaInfeasible, VerificationFailed
from .mip import BnbConfig, solve_mip
from .solver import ContinuousProgram, solve_continuous, solve_for_dual

# deterministic boundary sampling density for second-order blocks
SOC_SAMPLES = 64


class CertOrigin(enum.Enum):
    USER_GIVEN = "UserGiven"
    LAGRANGIAN = "Lagrangian"
    CONIC_DUAL = "ConicDual"


@dataclass(frozen=True)
class GeneratorCertificate:
    """A dual vector together with the instance it certifies."""

    alpha: np.ndarray
    origin: CertOrigin
    instance: ConicMip

    def __post_init__(self):
        object.__setattr__(self, "alpha",
                           as_vector(self.alpha, self.instance.m, "alpha"))
        if not isinstance(self.origin, CertOrigin):
            raise TypeError("origin must be a CertOrigin")


@dataclass(frozen=True)
class GeneratingSet:
    """Finite sample of monoid points used to spot-check dual feasibility.

    Every point (u, v) must lie in the instance's monoid: u integral,
    (u, v) inside the cone. Infinite generating sets are represented by
    a finite sample, so a passing check is evidence, not proof; reports
    carry the sample count for that reason.
    """

    points: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    cone: ConeSpec
    n1: int
    n2: int
    tol: Tol = field(default_factory=Tol)

    def __post_init__(self):
        checked = []
        for u, v in self.points:
            u = as_vector(u, self.n1, "generator integer part")
            v = as_vector(v, self.n2, "generator continuous part")
            if u.size and np.max(np.abs(u - np.round(u))) > self.tol.int_eps:
                raise InfeasiblePoint(f"generator {u} is not integral")
            if not cones.contains(self.cone, np.concatenate([u, v]),
                                  self.tol.feas_eps):
                raise InfeasiblePoint(
                    f"generator ({u}, {v}) lies outside the cone")
            checked.append((u, v))
        object.__setattr__(self, "points", tuple(checked))

    def __len__(self) -> int:
        return len(self.points)


def sample_generators(inst: ConicMip, soc_samples: int = SOC_SAMPLES,
                      tol: Optional[Tol] = None,
                      seed: int = 42) -> GeneratingSet:
    """Deterministic generating-set sample for a product-cone monoid.

    Nonneg coordinates contribute unit vectors, free continuous
    coordinates contribute +-unit vectors, and each second-order block
    contributes its apex ray sampled along the boundary: equi-angular
    for three-dimensional blocks, endpoints and center for
    two-dimensional ones, and a seeded sphere sample in higher
    dimension. Only blocks whose integer coordinates are limited to
    the leading entry are supported; anything else has no finite
    description here.
    """
    tol = tol or Tol()
    pts: List[np.ndarray] = []
    base = 0
    n = inst.n1 + inst.n2
    for blk in inst.cone.blocks:
        k = blk.dim
        if blk.kind == "nonneg":
            for i in range(k):
                e = np.zeros(n)
                e[base + i] = 1.0
                pts.append(e)
        elif blk.kind == "free":
            if base < inst.n1:
                raise ValueError("free blocks over integer coordinates "
                                 "have no finite generating sample")
            for i in range(k):
                for sgn in (1.0, -1.0):
                    e = np.zeros(n)
                    e[base + i] = sgn
                    pts.append(e)
        elif blk.kind == "soc":
            if base + 1 < inst.n1 and k > 1:
                raise ValueError("second-order blocks may carry at most "
                                 "their leading coordinate as integer")
            for w in _soc_boundary(k - 1, soc_samples, seed):
                e = np.zeros(n)
                e[base] = 1.0
                e[base + 1:base + k] = w
                pts.append(e)
        else:
            raise ValueError(f"cannot sample generators of a {blk.kind} block")
        base += k
    pairs = tuple((p[:inst.n1], p[inst.n1:]) for p in pts)
    return GeneratingSet(pairs, inst.cone, inst.n1, inst.n2, tol)


def _soc_boundary(p: int, count: int, seed: int) -> List[np.ndarray]:
    if p == 0:
        return [np.zeros(0)]
    if p == 1:
        return [np.array([-1.0]), np.array([0.0]), np.array([1.0])]
    if p == 2:
        ang = 2.0 * math.pi * np.arange(count) / count
        return [np.array([math.cos(a), math.sin(a)]) for a in ang]
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((count, p))
    return [row / np.linalg.norm(row) for row in raw]


# ---------------------------------------------------------------------------
# evaluation


def _inner_instance(inst: ConicMip, alpha: np.ndarray, omega: np.ndarray) -> ConicMip:
    # minimizing the shifted objective over M^<=(omega) realizes -sup{...}
    return ConicMip(inst.A, inst.G, omega,
                    inst.c - inst.A.T @ alpha, inst.d - inst.G.T @ alpha,
                    inst.cone, Sense.LESS_EQUAL, inst.blocks)


def eval_generator(cert: GeneratorCertificate, omega,
                   cfg: Optional[BnbConfig] = None) -> float:
    """Value of the generated subadditive function at omega.

    Raises OmegaInfeasible when no monoid point reaches omega in the
    <= sense; returns -inf when the inner supremum diverges (the
    generated function is not well-defined there).
    """
    cfg = cfg or BnbConfig()
    inst = cert.instance
    omega = as_vector(omega, inst.m, "omega")
    res = solve_mip(_inner_instance(inst, cert.alpha, omega), cfg)
    st = res.solution.status
    if st is Status.INFEASIBLE:
        raise OmegaInfeasible(f"omega {omega} is not reachable in the <= sense")
    if st is Status.UNBOUNDED:
        return -math.inf
    if not omega.size or float(np.max(np.abs(omega))) == 0.0:
        # the inner feasible set is a monoid containing the origin, so a
        # bounded supremum over it is exactly zero
        return 0.0
    return float(cert.alpha @ omega + res.solution.obj)


@dataclass(frozen=True)
class SweepRow:
    omega: np.ndarray
    value: float
    relaxed: float
    status: str


def sweep_generator(cert: GeneratorCertificate, omegas: Sequence,
                    cfg: Optional[BnbConfig] = None) -> List[SweepRow]:
    """Evaluate the generator and its continuous relaxation on a grid.

    Unreachable entries are recorded with status "omega_infeasible"
    rather than raised, so a sweep always produces one row per input.
    The relaxation value drops integrality from the inner supremum and
    therefore never exceeds the integer value.
    """
    cfg = cfg or BnbConfig()
    inst = cert.instance
    rows: List[SweepRow] = []
    for om in omegas:
        om = as_vector(om, inst.m, "omega")
        try:
            val = eval_generator(cert, om, cfg)
        except OmegaInfeasible:
            rows.append(SweepRow(om, math.nan, math.nan, "omega_infeasible"))
            continue
        relaxed = _relaxed_value(cert, om, cfg.tol)
        status = "ok" if math.isfinite(val) else "unbounded"
        rows.append(SweepRow(om, val, relaxed, status))
    return rows


def _relaxed_value(cert: GeneratorCertificate, omega: np.ndarray,
                   tol: Tol) -> float:
    inner = _inner_instance(cert.instance, cert.alpha, omega)
    # the alpha'omega shift keeps the convergence test scaled to the
    # final value instead of the much larger raw objective
    prog = ContinuousProgram(inner.A, inner.G, inner.b, inner.c, inner.d,
                             inner.cone, inner.sense,
                             obj_offset=float(cert.alpha @ omega))
    sol, _ = solve_continuous(prog, tol)
    if sol.status is Status.UNBOUNDED:
        return -math.inf
    if sol.status is Status.INFEASIBLE:
        return math.nan
    # sol.obj already includes the offset
    return float(sol.obj)


# ---------------------------------------------------------------------------
# Lagrangian route


def _lagrangian_solve(inst: ConicMip, alpha: np.ndarray,
                      cfg: BnbConfig):
    """Equality-with-slack formulation of the Lagrangian inner problem."""
    m = inst.m
    G_ext = np.hstack([inst.G, np.eye(m)])
    d_ext = np.concatenate([inst.d, alpha])
    cone_ext = inst.cone.concat(cones.nonneg(m))
    slack = ConicMip(inst.A, G_ext, inst.b, inst.c, d_ext, cone_ext,
                     Sense.EQUAL)
    return solve_mip(slack, BnbConfig(tol=cfg.tol, node_limit=cfg.node_limit))


def lagrangian_value(inst: ConicMip, alpha,
                     cfg: Optional[BnbConfig] = None) -> float:
    """L(alpha) = inf{c'x + d'y + alpha'(b - Ax - Gy) over M^<=(b)}.

    Same number as eval_generator at b, reached through a different
    formulation (explicit slack columns, equality rows).
    """
    cfg = cfg or BnbConfig()
    alpha = as_vector(alpha, inst.m, "alpha")
    res = _lagrangian_solve(inst, alpha, cfg)
    st = res.solution.status
    if st is Status.INFEASIBLE:
        raise OmegaInfeasible("b is not reachable in the <= sense")
    if st is Status.UNBOUNDED:
        return -math.inf
    return res.solution.obj


def maximize_lagrangian(inst: ConicMip, alpha0, iters: int = 500,
                        cfg: Optional[BnbConfig] = None) -> GeneratorCertificate:
    """Projected supergradient ascent on the Lagrangian dual.

    Steps follow g_k = b - A x_k - G y_k from the inner argmin, with
    step size 1/sqrt(k). Returns the best alpha visited, never worse
    than the starting point.
    """
    cfg = cfg or BnbConfig()
    alpha = as_vector(alpha0, inst.m, "alpha0")
    best_alpha, best_val = alpha.copy(), -math.inf
    for k in range(1, iters + 1):
        res = _lagrangian_solve(inst, alpha, cfg)
        st = res.solution.status
        if st is Status.UNBOUNDED:
            if k == 1:
                raise ValueError("Lagrangian value is -inf at alpha0")
            # no supergradient where L is -inf; retreat toward the best
            alpha = 0.5 * (alpha + best_alpha)
            continue
        if st is Status.INFEASIBLE:
            raise OmegaInfeasible("b is not reachable in the <= sense")
        val = res.solution.obj
        if val > best_val:
            best_val, best_alpha = val, alpha.copy()
        g = inst.b - inst.A @ res.solution.x - inst.G @ res.solution.y[:inst.n2]
        if not np.any(g):
            break  # zero supergradient: alpha is a maximizer
        alpha = alpha + g / math.sqrt(k)
    return GeneratorCertificate(best_alpha, CertOrigin.LAGRANGIAN, inst)


# ---------------------------------------------------------------------------
# hull route


def alpha_star_from_hull(inst: ConicMip, hull,
                         cfg: Optional[BnbConfig] = None) -> GeneratorCertificate:
    """Optimal certificate from a convex-hull reformulation.

    Solves the instance's objective over its main rows plus the hull's
    lifted rows as a continuous program, takes the main-row multiplier
    as alpha, and verifies the certificate by one generator evaluation
    at b. The multiplier may be astronomically large when the dual
    supremum is not attained; that is expected and harmless as long as
    the verification passes.
    """
    cfg = cfg or BnbConfig()
    tol = cfg.tol
    prog = ContinuousProgram(inst.A, inst.G, inst.b, inst.c, inst.d,
                             inst.cone, inst.sense,
                             hull.Pi, hull.Phi, hull.Psi, hull.pi, hull.C)
    sol, _ = solve_for_dual(prog, tol)
    cert = GeneratorCertificate(sol.dual_eq, CertOrigin.CONIC_DUAL, inst)
    zstar = sol.obj
    val = eval_generator(cert, inst.b, cfg)
    if val < zstar - tol.gap_eps * (1.0 + abs(zstar)):
        raise VerificationFailed(
            f"certificate value {val:.9g} falls short of the optimum "
            f"{zstar:.9g}")
    return cert


# ---------------------------------------------------------------------------
# certificate checks


@dataclass(frozen=True)
class WeakDualityReport:
    generator_value: float
    objective_value: float
    holds: bool


def check_weak_duality(inst: ConicMip, cert: GeneratorCertificate,
                       xy: Solution, cfg: Optional[BnbConfig] = None
                       ) -> WeakDualityReport:
    """Generator value at b against the objective of a feasible point."""
    cfg = cfg or BnbConfig()
    tol = cfg.tol
    if xy.x is None or xy.y is None or not is_primal_feasible(inst, xy.x, xy.y, tol):
        raise InfeasiblePoint("the supplied point is not primal feasible")
    obj = inst.objective(xy.x, xy.y)
    val = eval_generator(cert, inst.b, cfg)
    holds = val <= obj + tol.gap_eps * (1.0 + abs(obj))
    return WeakDualityReport(val, obj, holds)


@dataclass(frozen=True)
class DualFeasibilityReport:
    rows: Tuple[Tuple[float, float, bool], ...]
    zero_value: float
    holds: bool
    samples: int


def check_dual_feasibility(inst: ConicMip, cert: GeneratorCertificate,
                           gens: GeneratingSet,
                           cfg: Optional[BnbConfig] = None
                           ) -> DualFeasibilityReport:
    """F_alpha(Au + Gv) <= c'u + d'v over the generating set, plus F(0)=0.

    Each row of the report is (lhs, rhs, ok). The check is as strong
    as the sample: a continuum of generators is only spot-checked.
    """
    cfg = cfg or BnbConfig()
    tol = cfg.tol
    rows = []
    ok_all = True
    for u, v in gens.points:
        w = inst.A @ u + inst.G @ v
        lhs = eval_generator(cert, w, cfg)
        rhs = float(inst.c @ u + inst.d @ v)
        ok = lhs <= rhs + tol.gap_eps * (1.0 + abs(rhs))
        ok_all = ok_all and ok
        rows.append((lhs, rhs, ok))
    zero = eval_generator(cert, np.zeros(inst.m), cfg)
    zero_ok = abs(zero) <= tol.gap_eps
    return DualFeasibilityReport(tuple(rows), zero, ok_all and zero_ok,
                                 len(gens))


def check_complementary_slackness(inst: ConicMip, cert: GeneratorCertificate,
                                  xy: Solution,
                                  cfg: Optional[BnbConfig] = None) -> bool:
    """Whether the point's objective matches the generator value exactly.

    A feasible point and a dual-feasible certificate are jointly
    optimal precisely when this holds.
    """
    cfg = cfg or BnbConfig()
    tol = cfg.tol
    if xy.x is None or xy.y is None or not is_primal_feasible(inst, xy.x, xy.y, tol):
        raise InfeasiblePoint("the supplied point is not primal feasible")
    obj = inst.objective(xy.x, xy.y)
    w = inst.A @ xy.x + inst.G @ xy.y
    val = eval_generator(cert, w, cfg)
    return abs(val - obj) <= tol.gap_eps * (1.0 + abs(obj))
