"""Problem data containers and shared numeric types.

Everything downstream consumes the types defined here: tolerance bundles,
the mixed-integer conic instance, and the solution record returned by the
continuous and integer solvers.

Conventions. An instance is

    minimize    c'x + d'y
    subject to  A x + G y  (= or <=)  b
                (x, y) in K,  x integer

with K a cone product over the stacked vector (x, y). Integrality applies
to exactly the first ``n1`` coordinates. Maximization problems are posed
by negating the objective at the call site.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cones
from .cones import ConeSpec


def as_vector(v, n: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-d float array, optionally checking length."""
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def as_matrix(M, shape=None, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float array, optionally checking shape."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 1:
        # a single row is a common way to write 1 x n data in JSON
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


class Sense(enum.Enum):
    """Row sense of the main constraint system."""

    EQUAL = "equal"
    LESS_EQUAL = "less_equal"


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iter_limit"
    NODE_LIMIT = "node_limit"


@dataclass(frozen=True)
class Tol:
    """Tolerance bundle threaded through every numeric routine.

    feas_eps   constraint and cone feasibility
    int_eps    integrality rounding threshold, must stay below 0.5
    gap_eps    certificate and branch-and-bound gap acceptance
    dual_eps   target relative duality gap of the continuous solver
    """

    feas_eps: float = 1e-8
    int_eps: float = 1e-6
    gap_eps: float = 1e-6
    dual_eps: float = 1e-7

    def __post_init__(self):
        for name in ("feas_eps", "int_eps", "gap_eps", "dual_eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.int_eps >= 0.5:
            raise ValueError("int_eps must be below 0.5, rounding is ambiguous otherwise")


@dataclass(frozen=True)
class BlockCols:
    """Column ranges of one block inside a concatenated instance.

    ``x`` indexes into the integer part, ``y`` into the continuous part,
    both as half-open (start, stop) pairs.
    """

    x: tuple
    y: tuple
    cone: ConeSpec


@dataclass(frozen=True)
class ConicMip:
    """Equality- or inequality-constrained mixed-integer conic program."""

    A: np.ndarray
    G: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    cone: ConeSpec
    sense: Sense = Sense.EQUAL
    blocks: Optional[tuple] = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(1, -1) if A.size else A.reshape(0, 0)
        if A.ndim != 2 or not np.all(np.isfinite(A)):
            raise ValueError("A must be a finite matrix")
        object.__setattr__(self, "A", A)
        m = A.shape[0]
        G = np.asarray(self.G, dtype=float)
        if G.ndim == 1:
            G = G.reshape(1, -1) if G.size else np.zeros((m, 0))
        if G.ndim != 2 or not np.all(np.isfinite(G)):
            raise ValueError("G must be a finite matrix")
        if G.shape[1] == 0:
            G = np.zeros((m, 0))
        if G.shape[0] != m:
            raise ValueError(f"G has {G.shape[0]} rows, A has {m}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "b", as_vector(self.b, m, "b"))
        object.__setattr__(self, "c", as_vector(self.c, A.shape[1], "c"))
        object.__setattr__(self, "d", as_vector(self.d, G.shape[1], "d"))
        if not isinstance(self.cone, ConeSpec):
            raise TypeError("cone must be a ConeSpec")
        if self.cone.dim != self.n1 + self.n2:
            raise ValueError(
                f"cone covers {self.cone.dim} coordinates, instance has {self.n1 + self.n2}"
            )
        if self.cone.has_kind("zero"):
            raise ValueError("zero blocks are not allowed in an instance cone")
        if not isinstance(self.sense, Sense):
            raise TypeError("sense must be a Sense")
        if self.blocks is not None:
            object.__setattr__(self, "blocks", tuple(self.blocks))
            self._check_blocks()

    def _check_blocks(self):
        xs, ys = 0, 0
        for blk in self.blocks:
            if not isinstance(blk, BlockCols):
                raise TypeError("blocks entries must be BlockCols")
            if blk.x[0] != xs or blk.x[1] < xs:
                raise ValueError("block x ranges must tile [0, n1) in order")
            if blk.y[0] != ys or blk.y[1] < ys:
                raise ValueError("block y ranges must tile [0, n2) in order")
            if blk.cone.dim != (blk.x[1] - blk.x[0]) + (blk.y[1] - blk.y[0]):
                raise ValueError("block cone dimension mismatch")
            xs, ys = blk.x[1], blk.y[1]
        if xs != self.n1 or ys != self.n2:
            raise ValueError("blocks do not cover all columns")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n1(self) -> int:
        return self.A.shape[1]

    @property
    def n2(self) -> int:
        return self.G.shape[1]

    def with_rhs(self, b) -> "ConicMip":
        return ConicMip(self.A, self.G, as_vector(b, self.m, "b"), self.c, self.d,
                        self.cone, self.sense, self.blocks)

    def objective(self, x, y) -> float:
        return float(self.c @ np.asarray(x, dtype=float) + self.d @ np.asarray(y, dtype=float))


def residual(inst: ConicMip, x, y) -> np.ndarray:
    """Constraint residual A x + G y - b (signed, caller interprets sense)."""
    x = as_vector(x, inst.n1, "x")
    y = as_vector(y, inst.n2, "y")
    return inst.A @ x + inst.G @ y - inst.b


def is_primal_feasible(inst: ConicMip, x, y, tol: Tol) -> bool:
    """Feasibility check at the stated tolerances, integrality included."""
    x = as_vector(x, inst.n1, "x")
    y = as_vector(y, inst.n2, "y")
    r = residual(inst, x, y)
    if inst.sense is Sense.EQUAL:
        if r.size and np.abs(r).max() > tol.feas_eps * (1.0 + np.abs(inst.b).max(initial=0.0)):
            return False
    else:
        if r.size and r.max() > tol.feas_eps * (1.0 + np.abs(inst.b).max(initial=0.0)):
            return False
    if x.size and np.abs(x - np.round(x)).max() > tol.int_eps:
        return False
    return cones.contains(inst.cone, np.concatenate([x, y]), tol.feas_eps)


@dataclass
class Solution:
    """Result of a continuous or mixed-integer solve.

    ``dual_eq`` holds multipliers for the main rows, with the sign fixed
    so that the dual objective is ``b' dual_eq`` and the reduced cost
    vector ``(c, d) - [A G]' dual_eq`` lies in the dual cone of K. For
    infeasible or unbounded statuses the primal fields hold the
    certificate ray when one is available.
    """

    status: Status
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    obj: float = float("nan")
    dual_eq: Optional[np.ndarray] = None
    dual_cone: Optional[np.ndarray] = None
    # auxiliary variables of lifted formulations, when present
    w: Optional[np.ndarray] = None
    dual_rows: Optional[np.ndarray] = None

    def point(self) -> np.ndarray:
        if self.x is None or self.y is None:
            raise ValueError("solution carries no primal point")
        return np.concatenate([self.x, self.y])
