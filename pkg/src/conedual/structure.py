"""Structural transforms: block reduction, fiber hulls, packing, clustering.

Three independent pieces live here because they all reshape instances
rather than solve them. Block reduction drops variable blocks that can
never help the inner supremum of a generator evaluation. The fiber
hull turns a finite integer projection into an explicit convex-hull
formulation whose continuous dual yields optimal certificates. The
packing test and the clustering builder are the two worked instance
families that exercise those transforms.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import cones
from .cones import ConeSpec
from .core import (BlockCols, ConicMip, Sense, Status, Tol, as_matrix,
                   as_vector)
from .errors import BoxTooSmall, EmptyU, OmegaInfeasible, SolverFailure
from .mip import BnbConfig
from .solver import ContinuousProgram, solve_continuous


@dataclass(frozen=True)
class ConicBlock:
    """One variable block: its columns of the shared rows, costs, cone."""

    A: np.ndarray
    G: np.ndarray
    c: np.ndarray
    d: np.ndarray
    cone: ConeSpec

    def __post_init__(self):
        A = as_matrix(self.A, name="A")
        G = as_matrix(self.G, name="G")
        if A.shape[0] != G.shape[0]:
            raise ValueError("A and G must agree on the row count")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "c", as_vector(self.c, A.shape[1], "c"))
        object.__setattr__(self, "d", as_vector(self.d, G.shape[1], "d"))
        if self.cone.dim != A.shape[1] + G.shape[1]:
            raise ValueError("block cone dimension must cover (x, y)")
        if self.cone.has_kind("zero"):
            raise ValueError("zero blocks have no place in a variable cone")

    @property
    def n1(self) -> int:
        return self.A.shape[1]

    @property
    def n2(self) -> int:
        return self.G.shape[1]


@dataclass(frozen=True)
class BlockMip:
    """L variable blocks coupled only through shared equality rows.

    The reduction theory behind block_reduce assumes every block cone
    is regular (pointed and solid); builders in this module may emit
    free blocks anyway, which simply land on the unreduced side.
    """

    blocks: Tuple[ConicBlock, ...]
    b: np.ndarray

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("a block instance needs at least one block")
        m = blocks[0].A.shape[0]
        if any(blk.A.shape[0] != m for blk in blocks):
            raise ValueError("all blocks must share the row dimension")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "b", as_vector(self.b, m, "b"))

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def L(self) -> int:
        return len(self.blocks)

    def concat(self, keep: Optional[Sequence[int]] = None) -> ConicMip:
        """Flatten (a subset of) the blocks into one instance.

        Variables are reordered integer-parts-first, so for more than
        one block every block cone has to split cleanly at its own
        integer/continuous boundary; a second-order block straddling
        that boundary is only representable when it is the sole block.
        """
        idx = list(range(self.L)) if keep is None else sorted(keep)
        if not idx:
            raise ValueError("cannot concatenate an empty block selection")
        chosen = [self.blocks[i] for i in idx]
        if len(chosen) == 1:
            blk = chosen[0]
            cols = BlockCols((0, blk.n1), (0, blk.n2), blk.cone)
            return ConicMip(blk.A, blk.G, self.b, blk.c, blk.d, blk.cone,
                            Sense.EQUAL, (cols,))
        x_parts: List[Tuple[str, int]] = []
        y_parts: List[Tuple[str, int]] = []
        cols = []
        xoff = yoff = 0
        for blk in chosen:
            for cb, sl in blk.cone.iter_slices():
                if sl.stop <= blk.n1:
                    x_parts.append((cb.kind, cb.dim))
                elif sl.start >= blk.n1:
                    y_parts.append((cb.kind, cb.dim))
                else:
                    raise ValueError(
                        "a cone block straddles the integer/continuous "
                        "boundary; concatenation cannot reorder it")
            cols.append(BlockCols((xoff, xoff + blk.n1),
                                  (yoff, yoff + blk.n2), blk.cone))
            xoff += blk.n1
            yoff += blk.n2
        A = np.hstack([blk.A for blk in chosen])
        G = np.hstack([blk.G for blk in chosen])
        c = np.concatenate([blk.c for blk in chosen])
        d = np.concatenate([blk.d for blk in chosen])
        return ConicMip(A, G, self.b, c, d, ConeSpec(x_parts + y_parts),
                        Sense.EQUAL, tuple(cols))


def block_reduce(inst: BlockMip, alpha,
                 tol: Optional[Tol] = None) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Partition block indices into (kept, reducible) for a given alpha.

    A block is reducible when its reduced cost vector and every one of
    its constraint-row vectors lie in the block's dual cone: any mass
    placed on such a block can be zeroed without losing feasibility or
    objective in the inner supremum. Membership is tested exactly at
    feas_eps, so the partition can flip for alphas near the boundary;
    downstream code never depends on which side such an alpha lands.
    """
    tol = tol or Tol()
    alpha = as_vector(alpha, inst.m, "alpha")
    kept, reducible = [], []
    for l, blk in enumerate(inst.blocks):
        dual_cone = cones.dual(blk.cone)
        rc = np.concatenate([blk.c - blk.A.T @ alpha, blk.d - blk.G.T @ alpha])
        ok = cones.contains(dual_cone, rc, tol.feas_eps)
        if ok:
            rows = np.hstack([blk.A, blk.G])
            ok = all(cones.contains(dual_cone, rows[i], tol.feas_eps)
                     for i in range(inst.m))
        (reducible if ok else kept).append(l)
    return tuple(kept), tuple(reducible)


def eval_generator_blocked(inst: BlockMip, alpha, omega=None,
                           cfg: Optional[BnbConfig] = None) -> float:
    """Generator value computed over the kept blocks only.

    Equal to the unreduced evaluation on the concatenated instance:
    reducible blocks contribute nothing to the inner supremum, and
    zeroing them preserves feasibility. With every block reducible the
    supremum is empty and the value is alpha'omega outright (omega must
    still be reachable, which then means nonnegative).
    """
    from .duality import CertOrigin, GeneratorCertificate, eval_generator

    cfg = cfg or BnbConfig()
    alpha = as_vector(alpha, inst.m, "alpha")
    omega = inst.b if omega is None else as_vector(omega, inst.m, "omega")
    kept, _ = block_reduce(inst, alpha, cfg.tol)
    if not kept:
        if omega.size and float(np.min(omega)) < -cfg.tol.feas_eps:
            raise OmegaInfeasible(
                "omega has a negative entry no reducible block can cover")
        return float(alpha @ omega)
    sub = inst.concat(kept)
    cert = GeneratorCertificate(alpha, CertOrigin.USER_GIVEN, sub)
    return eval_generator(cert, omega, cfg)


# ---------------------------------------------------------------------------
# fiber hulls


@dataclass(frozen=True)
class FiberHull:
    """Disjunctive-hull rows over (x, y, copies).

    The lifted constraint reads Pi x + Phi y + Psi w - pi in C, where w
    stacks one (x^u, y^u, lambda^u) copy per enumerated fiber u of U.
    Every fiber shares the recession cone of the zero right-hand side,
    which is what makes the represented union closed; that property is
    assumed from the construction, not re-verified numerically.
    """

    Pi: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    pi: np.ndarray
    C: ConeSpec
    U: Tuple[Tuple[int, ...], ...]


def _fiber_nonempty(inst: ConicMip, u: np.ndarray, tol: Tol) -> bool:
    if inst.n2 == 0:
        if not cones.contains(inst.cone, u, tol.feas_eps):
            return False
        r = inst.A @ u - inst.b
        scale = 1.0 + float(np.abs(inst.b).max(initial=0.0))
        return not r.size or float(r.max()) <= tol.feas_eps * scale
    prog = ContinuousProgram(inst.A, inst.G, inst.b,
                             np.zeros(inst.n1), np.zeros(inst.n2),
                             inst.cone, Sense.LESS_EQUAL)
    pinned = prog.with_bound_rows([(j, float(u[j]), float(u[j]))
                                   for j in range(inst.n1)])
    sol, _ = solve_continuous(pinned, tol)
    return sol.status is not Status.INFEASIBLE


def _box_extension(inst: ConicMip, j: int, lo, hi, tol: Tol) -> bool:
    """Whether the continuous relaxation reaches beyond one box facet."""
    prog = ContinuousProgram(inst.A, inst.G, inst.b,
                             np.zeros(inst.n1), np.zeros(inst.n2),
                             inst.cone, Sense.LESS_EQUAL)
    probe = prog.with_bound_rows([(j, lo, hi)])
    sol, _ = solve_continuous(probe, tol)
    if sol.status is Status.INFEASIBLE:
        return False
    if sol.status is Status.OPTIMAL:
        return True
    raise SolverFailure(
        f"facet probe on column {j} ended with {sol.status.name}")


def build_fiber_hull(inst: ConicMip, u_box: Sequence[Tuple[int, int]],
                     cfg: Optional[BnbConfig] = None) -> FiberHull:
    """Enumerate the fibers inside a box and emit their disjunctive hull.

    The box must contain the full integer projection of the relaxed
    feasible set; this is verified by one continuous feasibility solve
    per facet direction, and BoxTooSmall is raised when any of those
    probes finds a point beyond the box. Fibers are enumerated in
    lexicographic order and tested individually (arithmetically for
    pure-integer instances, by a pinned conic solve otherwise); EmptyU
    is raised when none is feasible.
    """
    cfg = cfg or BnbConfig()
    tol = cfg.tol
    n1, n2, m = inst.n1, inst.n2, inst.m
    if len(u_box) != n1:
        raise ValueError(f"u_box must list {n1} (lo, hi) pairs")
    box = []
    for lo, hi in u_box:
        lo, hi = int(lo), int(hi)
        if lo > hi:
            raise ValueError("u_box has an empty range")
        box.append((lo, hi))

    for j, (lo, hi) in enumerate(box):
        if _box_extension(inst, j, float(hi) + 1.0, None, tol):
            raise BoxTooSmall(f"feasible points extend above x_{j} <= {hi}")
        if _box_extension(inst, j, None, float(lo) - 1.0, tol):
            raise BoxTooSmall(f"feasible points extend below x_{j} >= {lo}")

    U = [u for u in itertools.product(*(range(lo, hi + 1) for lo, hi in box))
         if _fiber_nonempty(inst, np.array(u, dtype=float), tol)]
    if not U:
        raise EmptyU("no feasible fiber inside the box")

    nU = len(U)
    stride = n1 + n2 + 1
    n3 = nU * stride
    r = nU * (m + n1 + n2 + n1) + n1 + n2 + 1 + nU
    Pi = np.zeros((r, n1))
    Phi = np.zeros((r, n2))
    Psi = np.zeros((r, n3))
    pivec = np.zeros(r)
    blocks: List[Tuple[str, int]] = []
    row = 0
    for t, u in enumerate(U):
        base = t * stride
        # b*lam - A x^u - G y^u >= 0: the fiber's homogenized rows
        Psi[row:row + m, base:base + n1] = -inst.A
        Psi[row:row + m, base + n1:base + n1 + n2] = -inst.G
        Psi[row:row + m, base + n1 + n2] = inst.b
        blocks.append(("nonneg", m))
        row += m
        # (x^u, y^u) in K
        Psi[row:row + n1 + n2, base:base + n1 + n2] = np.eye(n1 + n2)
        blocks.extend((cb.kind, cb.dim) for cb in inst.cone.blocks)
        row += n1 + n2
        if n1:
            # x^u = u * lam^u
            Psi[row:row + n1, base:base + n1] = np.eye(n1)
            Psi[row:row + n1, base + n1 + n2] = -np.asarray(u, dtype=float)
            blocks.append(("zero", n1))
            row += n1
    if n1:
        Pi[row:row + n1] = np.eye(n1)
        for t in range(nU):
            Psi[row:row + n1, t * stride:t * stride + n1] = -np.eye(n1)
        blocks.append(("zero", n1))
        row += n1
    if n2:
        Phi[row:row + n2] = np.eye(n2)
        for t in range(nU):
            Psi[row:row + n2,
                t * stride + n1:t * stride + n1 + n2] = -np.eye(n2)
        blocks.append(("zero", n2))
        row += n2
    for t in range(nU):
        Psi[row, t * stride + n1 + n2] = 1.0
    pivec[row] = 1.0
    blocks.append(("zero", 1))
    row += 1
    for t in range(nU):
        Psi[row + t, t * stride + n1 + n2] = 1.0
    blocks.append(("nonneg", nU))

    return FiberHull(Pi, Phi, Psi, pivec, ConeSpec(blocks),
                     tuple(tuple(int(v) for v in u) for u in U))


def hull_minimize(inst: ConicMip, hull: FiberHull, c=None, d=None,
                  tol: Optional[Tol] = None):
    """Minimize a linear objective over the hull representation.

    Defaults to the instance's own objective. The instance rows enter
    in the <= sense; they are implied by the hull rows and kept only so
    the program matches the certify formulation.
    """
    tol = tol or Tol()
    c = inst.c if c is None else as_vector(c, inst.n1, "c")
    d = inst.d if d is None else as_vector(d, inst.n2, "d")
    prog = ContinuousProgram(inst.A, inst.G, inst.b, c, d, inst.cone,
                             Sense.LESS_EQUAL, hull.Pi, hull.Phi, hull.Psi,
                             hull.pi, hull.C)
    return solve_continuous(prog, tol)


# ---------------------------------------------------------------------------
# packing


class PackingVerdict(enum.Enum):
    BOUNDED = "Bounded"
    UNBOUNDED = "Unbounded"
    NOT_PACKING = "NotPacking"


def check_packing_bounded(inst: ConicMip,
                          tol: Optional[Tol] = None) -> PackingVerdict:
    """Classify a packing instance as bounded or unbounded.

    Packing means every constraint row lies in the dual cone. For such
    instances boundedness of the feasible set is equivalent to some
    nonnegative row combination reaching the dual cone's interior; the
    margin program below makes that existential test constructive by
    maximizing the interior margin t and comparing it against dual_eps.
    """
    tol = tol or Tol()
    dual_cone = cones.dual(inst.cone)
    rows = np.hstack([inst.A, inst.G])
    for i in range(inst.m):
        if not cones.contains(dual_cone, rows[i], tol.feas_eps):
            return PackingVerdict.NOT_PACKING
    if inst.cone.has_kind("free"):
        # rows in the dual cone have zero weight on free coordinates,
        # so every free direction is a feasible recession
        return PackingVerdict.UNBOUNDED
    n = inst.n1 + inst.n2
    m = inst.m
    p = cones.strict_interior_point(dual_cone)
    # variables (mu, t, sigma, s): [A G]'mu - t p = s in K*, t + sigma = 1
    G = np.zeros((n + 1, m + 2 + n))
    G[:n, :m] = rows.T
    G[:n, m] = -p
    G[:n, m + 2:] = -np.eye(n)
    G[n, m] = 1.0
    G[n, m + 1] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    d = np.zeros(m + 2 + n)
    d[m] = -1.0
    spec = cones.nonneg(m).concat(cones.free(1)).concat(
        cones.nonneg(1)).concat(dual_cone)
    prog = ContinuousProgram(np.zeros((n + 1, 0)), G, rhs, np.zeros(0), d,
                             spec, Sense.EQUAL)
    sol, rep = solve_continuous(prog, tol)
    if sol.status is not Status.OPTIMAL:
        raise SolverFailure(
            f"packing margin program ended with {sol.status.name}")
    t = float(sol.y[m])
    return PackingVerdict.BOUNDED if t >= tol.dual_eps else PackingVerdict.UNBOUNDED


# ---------------------------------------------------------------------------
# clustering


def build_clustering_instance(points: Sequence, Q: int) -> BlockMip:
    """Min-sum-of-distances clustering as a block conic instance.

    One block per cluster q. Integer part (zeta, zetabar) marks the
    assignment and its complement; continuous part carries the
    representative chi^q, the counted distances delta, and one
    second-order block per point bounding ||chi^q - xi|| through the
    big-M switch. delta is kept nonnegative: leaving it free would let
    unassigned pairs push their slack negative and corrupt the sum.
    """
    pts = [as_vector(np.asarray(xi, dtype=float).ravel(),
                     np.asarray(points[0]).size, "point") for xi in points]
    I = len(pts)
    if I == 0:
        raise ValueError("clustering needs at least one point")
    if Q < 1:
        raise ValueError("Q must be at least 1")
    p = pts[0].size
    M = max((float(np.linalg.norm(a - b)) for a, b in
             itertools.combinations(pts, 2)), default=0.0)

    m = I + Q * I * p + Q * I + Q * I
    n1 = 2 * I
    n2 = p + I + I * (p + 1)

    def chi_row(q: int, i: int) -> int:
        return I + (q * I + i) * p

    def switch_row(q: int, i: int) -> int:
        return I + Q * I * p + q * I + i

    def pair_row(q: int, i: int) -> int:
        return I + Q * I * p + Q * I + q * I + i

    b = np.zeros(m)
    b[:I] = 1.0
    for q in range(Q):
        for i in range(I):
            b[chi_row(q, i):chi_row(q, i) + p] = pts[i]
            b[switch_row(q, i)] = M
            b[pair_row(q, i)] = 1.0

    blocks = []
    for q in range(Q):
        A = np.zeros((m, n1))
        G = np.zeros((m, n2))
        for i in range(I):
            A[i, i] = 1.0  # sum_q zeta = 1
            r = chi_row(q, i)
            G[r:r + p, :p] = np.eye(p)  # chi - eta = xi
            eta = p + I + i * (p + 1)
            G[r:r + p, eta + 1:eta + 1 + p] = -np.eye(p)
            r = switch_row(q, i)  # M zeta - delta + etabar = M
            A[r, i] = M
            G[r, p + i] = -1.0
            G[r, eta] = 1.0
            r = pair_row(q, i)  # zeta + zetabar = 1
            A[r, i] = 1.0
            A[r, I + i] = 1.0
        d = np.zeros(n2)
        d[p:p + I] = 1.0
        spec = ConeSpec([("nonneg", n1), ("free", p), ("nonneg", I)]
                        + [("soc", p + 1)] * I)
        blocks.append(ConicBlock(A, G, np.zeros(n1), d, spec))
    return BlockMip(tuple(blocks), b)
