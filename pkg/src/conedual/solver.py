"""Continuous conic solver.

A primal-dual interior-point method on the homogeneous self-dual
embedding, for programs of the form

    minimize    c'x + d'y                      (+ objective offset)
    subject to  A x + G y (= or <=) b
                (x, y) in K
                Pi x + Phi y + Psi w >=_C pi   (optional lifted rows)

K and C are cone products of free / nonneg / soc blocks (C may also
carry zero blocks, which are handled as equality rows). Internally the
problem is flattened to

    minimize  q'v   s.t.  E v = f,  H v + s = h,  s in Kbar

with v = (x, y, w) free and Kbar a product of nonneg and soc blocks.
The embedding follows the usual recipe: search directions from a
Nesterov-Todd scaled Newton system, Mehrotra predictor-corrector, and
fraction-to-boundary step length 0.99. Infeasibility and unboundedness
are certified through the tau/kappa variables of the embedding.

Small systems are iterated in 80-bit extended precision. Some of the
dual extraction problems this toolkit cares about have multipliers that
escape to infinity (the dual supremum is not attained), and how far the
solver can chase them before the cone iterate degenerates is set by the
floor of the complementarity measure, which is proportional to machine
epsilon. Extended precision moves that floor down by a factor of about
2000 and costs little at these sizes.

Everything is dense. The problems this toolkit solves are small, and
robustness is preferred over sparsity.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.linalg as sla

from . import cones
from .cones import ConeSpec
from .core import ConicMip, Sense, Solution, Status, Tol, as_matrix, as_vector
from .errors import NoStrongDuality, SolverFailure

STEP_FRACTION = 0.99   # fraction-to-boundary
DEFAULT_MAX_ITER = 200
EXTENDED_DIM_LIMIT = 80   # KKT dimension up to which "auto" picks extended precision

# relative margin a normalized Farkas / ray certificate must clear; guards
# against misreading the escaping-multiplier regime as infeasibility
CERT_GAIN_MARGIN = 1e-5


@dataclass(frozen=True)
class KktReport:
    """Residuals of the returned iterate, recomputed from the solution."""

    primal_res: float
    dual_res: float
    comp_gap: float
    iterations: int


@dataclass(frozen=True)
class ContinuousProgram:
    """Conic program over (x, y) with optional lifted rows over (x, y, w).

    The lifted rows state ``Pi x + Phi y + Psi w - pi in C``. Auxiliary
    variables w carry no objective. ``obj_offset`` is added to reported
    objective values and enters the relative-gap convergence test, which
    matters when the natural value of a problem is tiny compared to its
    raw coefficients.
    """

    A: np.ndarray
    G: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    cone: ConeSpec
    sense: Sense = Sense.EQUAL
    Pi: Optional[np.ndarray] = None
    Phi: Optional[np.ndarray] = None
    Psi: Optional[np.ndarray] = None
    pi: Optional[np.ndarray] = None
    C: Optional[ConeSpec] = None
    obj_offset: float = 0.0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(1, -1) if A.size else A.reshape(0, 0)
        A = as_matrix(A, name="A")
        object.__setattr__(self, "A", A)
        m = A.shape[0]
        G = np.asarray(self.G, dtype=float)
        if G.ndim == 1:
            G = G.reshape(1, -1) if G.size else np.zeros((m, 0))
        if G.shape[1] == 0:
            G = np.zeros((m, 0))
        else:
            G = as_matrix(G, name="G")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "b", as_vector(self.b, m, "b"))
        object.__setattr__(self, "c", as_vector(self.c, A.shape[1], "c"))
        object.__setattr__(self, "d", as_vector(self.d, G.shape[1], "d"))
        if self.cone.dim != self.n1 + self.n2:
            raise ValueError("cone does not cover (x, y)")
        if (self.C is None) != (self.pi is None):
            raise ValueError("extra rows need both C and pi")
        if self.C is not None:
            k = self.C.dim
            Pi = as_matrix(self.Pi, (k, self.n1), "Pi") if k else np.zeros((0, self.n1))
            Phi = as_matrix(self.Phi, (k, self.n2), "Phi") if k else np.zeros((0, self.n2))
            if self.Psi is None:
                Psi = np.zeros((k, 0))
            else:
                Psi = as_matrix(self.Psi, name="Psi")
                if Psi.shape[0] != k:
                    raise ValueError("Psi must have one row per extra row")
            object.__setattr__(self, "Pi", Pi)
            object.__setattr__(self, "Phi", Phi)
            object.__setattr__(self, "Psi", Psi)
            object.__setattr__(self, "pi", as_vector(self.pi, k, "pi"))
            if self.C.has_kind("free"):
                raise ValueError("free blocks are meaningless as row cones")

    @property
    def n1(self) -> int:
        return self.A.shape[1]

    @property
    def n2(self) -> int:
        return self.G.shape[1]

    @property
    def n3(self) -> int:
        return 0 if self.Psi is None else self.Psi.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @staticmethod
    def from_instance(inst: ConicMip) -> "ContinuousProgram":
        """Continuous relaxation: same data, integrality dropped."""
        return ContinuousProgram(inst.A, inst.G, inst.b, inst.c, inst.d,
                                 inst.cone, inst.sense)

    def with_bound_rows(self, rows: List[Tuple[int, float, float]]) -> "ContinuousProgram":
        """Append simple variable bound rows lo <= v_j <= hi.

        Each entry is (column, lo, hi) over the stacked (x, y) vector;
        infinite ends are skipped. Bounds become nonneg rows of C, so
        the branch and bound loop can reuse the whole solver unchanged.
        A pinned variable (lo == hi) becomes a single zero-cone row,
        which keeps a strict slack interior available.
        """
        pi_rows = []
        coef_rows = []
        pin_pi = []
        pin_coef = []
        for j, lo, hi in rows:
            if lo is not None and hi is not None and lo == hi and math.isfinite(lo):
                e = np.zeros(self.n1 + self.n2)
                e[j] = 1.0
                pin_coef.append(e)
                pin_pi.append(lo)
                continue
            if lo is not None and math.isfinite(lo):
                e = np.zeros(self.n1 + self.n2)
                e[j] = 1.0
                coef_rows.append(e)
                pi_rows.append(lo)
            if hi is not None and math.isfinite(hi):
                e = np.zeros(self.n1 + self.n2)
                e[j] = -1.0
                coef_rows.append(e)
                pi_rows.append(-hi)
        if not coef_rows and not pin_coef:
            return self
        newC = cones.ConeSpec([])
        if coef_rows:
            newC = cones.nonneg(len(coef_rows))
        if pin_coef:
            newC = newC.concat(cones.zero(len(pin_coef))) if newC.dim else cones.zero(len(pin_coef))
        M = np.vstack(coef_rows + pin_coef)
        newPi, newPhi = M[:, : self.n1], M[:, self.n1:]
        newpi = np.array(pi_rows + pin_pi)
        if self.C is None:
            return ContinuousProgram(self.A, self.G, self.b, self.c, self.d, self.cone,
                                     self.sense, newPi, newPhi,
                                     np.zeros((M.shape[0], 0)), newpi, newC,
                                     self.obj_offset)
        return ContinuousProgram(
            self.A, self.G, self.b, self.c, self.d, self.cone, self.sense,
            np.vstack([self.Pi, newPi]), np.vstack([self.Phi, newPhi]),
            np.vstack([self.Psi, np.zeros((M.shape[0], self.n3))]),
            np.concatenate([self.pi, newpi]), self.C.concat(newC), self.obj_offset)


# ---------------------------------------------------------------------------
# canonical flattened form


@dataclass
class _Canon:
    E: np.ndarray          # p x N equality rows
    f: np.ndarray
    H: np.ndarray          # r x N cone rows, H v + s = h
    h: np.ndarray
    blocks: list           # cone blocks of s, ("nonneg", k) / ("soc", k)
    q: np.ndarray
    offset: float
    N: int
    # bookkeeping for extracting duals in the original variable order
    n1: int = 0
    n2: int = 0
    n3: int = 0
    eq_main: slice = slice(0, 0)     # main rows inside E (EQUAL sense)
    ineq_main: slice = slice(0, 0)   # main rows inside H (LESS_EQUAL sense)
    sense: Sense = Sense.EQUAL
    # per original C block: ("eq" | "cone", first flat row, length)
    extra_map: list = field(default_factory=list)


def _canonicalize(prog: ContinuousProgram) -> _Canon:
    n1, n2, n3 = prog.n1, prog.n2, prog.n3
    N = n1 + n2 + n3
    q = np.concatenate([prog.c, prog.d, np.zeros(n3)])

    E_rows, f_vals = [], []
    H_rows, h_vals, blocks = [], [], []
    eq_main = slice(0, 0)
    ineq_main = slice(0, 0)

    main = np.hstack([prog.A, prog.G, np.zeros((prog.m, n3))])
    if prog.sense is Sense.EQUAL:
        eq_main = slice(0, prog.m)
        E_rows.append(main)
        f_vals.append(prog.b)
    else:
        ineq_main = slice(0, prog.m)
        H_rows.append(main)
        h_vals.append(prog.b)
        if prog.m:
            blocks.append(("nonneg", prog.m))

    # cone membership rows: -v_block + s = 0, s in block
    for blk, sl in prog.cone.iter_slices():
        if blk.kind == "free" or blk.dim == 0:
            continue
        rows = np.zeros((blk.dim, N))
        rows[np.arange(blk.dim), np.arange(sl.start, sl.stop)] = -1.0
        H_rows.append(rows)
        h_vals.append(np.zeros(blk.dim))
        blocks.append((blk.kind, blk.dim))

    extra_map = []
    if prog.C is not None and prog.C.dim:
        full = np.hstack([prog.Pi, prog.Phi,
                          prog.Psi if n3 else np.zeros((prog.C.dim, 0))])
        for blk, sl in prog.C.iter_slices():
            if blk.dim == 0:
                continue
            if blk.kind == "zero":
                # equality rows: (Pi x + Phi y + Psi w)_block = pi_block
                base = sum(r.shape[0] for r in E_rows)
                E_rows.append(full[sl])
                f_vals.append(prog.pi[sl])
                extra_map.append(("eq", base, blk.dim))
            else:
                base = sum(r.shape[0] for r in H_rows)
                H_rows.append(-full[sl])
                h_vals.append(-prog.pi[sl])
                blocks.append((blk.kind, blk.dim))
                extra_map.append(("cone", base, blk.dim))

    E = np.vstack(E_rows) if E_rows else np.zeros((0, N))
    f = np.concatenate(f_vals) if f_vals else np.zeros(0)
    H = np.vstack(H_rows) if H_rows else np.zeros((0, N))
    h = np.concatenate(h_vals) if h_vals else np.zeros(0)
    return _Canon(E=E, f=f, H=H, h=h, blocks=blocks, q=q, offset=prog.obj_offset,
                  N=N, n1=n1, n2=n2, n3=n3, eq_main=eq_main, ineq_main=ineq_main,
                  sense=prog.sense, extra_map=extra_map)


# ---------------------------------------------------------------------------
# cone block arithmetic (nonneg scalars and soc blocks)


def _cone_degree(blocks) -> int:
    deg = 0
    for kind, k in blocks:
        deg += k if kind == "nonneg" else 1
    return deg


def _interior_start(blocks, dtype) -> np.ndarray:
    spec = ConeSpec([(kind, k) for kind, k in blocks])
    return cones.strict_interior_point(spec).astype(dtype)


class _Scaling:
    """Nesterov-Todd scaling for one iterate (s, z).

    For nonneg coordinates W is diagonal. For an soc block with the
    hyperbolic form J = diag(1, -I),

        W = eta * R(wbar),   eta = (s'Js / z'Jz)^(1/4),

    where wbar is the geometric mean point with wbar'J wbar = 1 and
    R(wbar) is the PSD square root of 2 wbar wbar' - J:

        R = [ wbar0   wbar1'                          ]
            [ wbar1   I + wbar1 wbar1' / (1 + wbar0)  ].

    The defining identity W z = W^{-1} s = lambda is exercised by the
    test suite. Raises FloatingPointError when an soc iterate has
    numerically left the cone interior, the natural stopping signal
    once complementarity reaches the precision floor.
    """

    def __init__(self, blocks, s, z):
        self.blocks = blocks
        self.parts = []
        off = 0
        for kind, k in blocks:
            sb, zb = s[off:off + k], z[off:off + k]
            if kind == "nonneg":
                if np.any(sb <= 0) or np.any(zb <= 0):
                    raise FloatingPointError("nonneg iterate left the interior")
                self.parts.append(np.sqrt(sb / zb))
            else:
                rs = sb[0] * sb[0] - sb[1:] @ sb[1:]
                rz = zb[0] * zb[0] - zb[1:] @ zb[1:]
                if rs <= 0 or rz <= 0:
                    raise FloatingPointError("soc iterate left the interior")
                sbar = sb / np.sqrt(rs)
                zbar = zb / np.sqrt(rz)
                gamma = np.sqrt((1.0 + sbar @ zbar) / 2.0)
                jz = zbar.copy()
                jz[1:] = -jz[1:]
                wbar = (sbar + jz) / (2.0 * gamma)
                eta = (rs / rz) ** 0.25
                self.parts.append((wbar, eta))
            off += k

    def _apply_R(self, wbar, u, inv: bool):
        sgn = -1.0 if inv else 1.0
        u0, u1 = u[0], u[1:]
        w0, w1 = wbar[0], wbar[1:]
        top = w0 * u0 + sgn * (w1 @ u1)
        rest = sgn * u0 * w1 + u1 + (w1 @ u1) / (1.0 + w0) * w1
        return np.concatenate([[top], rest])

    def apply_W(self, u):
        out = np.empty_like(u)
        off = 0
        for (kind, k), payload in zip(self.blocks, self.parts):
            ub = u[off:off + k]
            if kind == "nonneg":
                out[off:off + k] = payload * ub
            else:
                wbar, eta = payload
                out[off:off + k] = eta * self._apply_R(wbar, ub, inv=False)
            off += k
        return out

    def apply_Winv(self, u):
        out = np.empty_like(u)
        off = 0
        for (kind, k), payload in zip(self.blocks, self.parts):
            ub = u[off:off + k]
            if kind == "nonneg":
                out[off:off + k] = ub / payload
            else:
                wbar, eta = payload
                out[off:off + k] = self._apply_R(wbar, ub, inv=True) / eta
            off += k
        return out

    def W2_matrix(self, dtype) -> np.ndarray:
        """Dense W'W = W^2 for the Newton system."""
        dim = sum(k for _, k in self.blocks)
        M = np.zeros((dim, dim), dtype=dtype)
        off = 0
        for (kind, k), payload in zip(self.blocks, self.parts):
            if kind == "nonneg":
                M[np.arange(off, off + k), np.arange(off, off + k)] = payload ** 2
            else:
                wbar, eta = payload
                J = -np.eye(k, dtype=dtype)
                J[0, 0] = 1.0
                M[off:off + k, off:off + k] = (eta * eta) * (2.0 * np.outer(wbar, wbar) - J)
            off += k
        return M


def _jordan_mul(blocks, a, b):
    out = np.empty_like(a)
    off = 0
    for kind, k in blocks:
        ab, bb = a[off:off + k], b[off:off + k]
        if kind == "nonneg":
            out[off:off + k] = ab * bb
        else:
            out[off] = ab @ bb
            out[off + 1:off + k] = ab[0] * bb[1:] + bb[0] * ab[1:]
        off += k
    return out


def _jordan_solve(blocks, lam, u):
    """Solve lam o xi = u block by block."""
    out = np.empty_like(u)
    off = 0
    for kind, k in blocks:
        lb, ub = lam[off:off + k], u[off:off + k]
        if kind == "nonneg":
            out[off:off + k] = ub / lb
        else:
            det = lb[0] * lb[0] - lb[1:] @ lb[1:]
            xi0 = (lb[0] * ub[0] - lb[1:] @ ub[1:]) / det
            out[off] = xi0
            out[off + 1:off + k] = (ub[1:] - xi0 * lb[1:]) / lb[0]
        off += k
    return out


def _identity_e(blocks, dtype) -> np.ndarray:
    dim = sum(k for _, k in blocks)
    e = np.zeros(dim, dtype=dtype)
    off = 0
    for kind, k in blocks:
        if kind == "nonneg":
            e[off:off + k] = 1.0
        else:
            e[off] = 1.0
        off += k
    return e


def _alpha_max(blocks, u, du) -> float:
    """Largest step with u + alpha du staying in the cone product."""
    alpha = math.inf
    off = 0
    for kind, k in blocks:
        ub, db = u[off:off + k], du[off:off + k]
        if kind == "nonneg":
            neg = db < 0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-ub[neg] / db[neg])))
        else:
            # smallest positive root of (u0+a d0)^2 - ||u1+a d1||^2 = 0
            cq = float(ub[0] * ub[0] - ub[1:] @ ub[1:])
            bq = float(2.0 * (ub[0] * db[0] - ub[1:] @ db[1:]))
            aq = float(db[0] * db[0] - db[1:] @ db[1:])
            root = _smallest_pos_root(aq, bq, cq)
            if root is not None:
                alpha = min(alpha, root)
        off += k
    return alpha


def _smallest_pos_root(a, b, c) -> Optional[float]:
    # c >= 0 at an interior point; roots of a t^2 + b t + c
    if abs(a) < 1e-300:
        if b < 0:
            return -c / b
        return None
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    if b >= 0:
        r1 = (-b - sq) / (2.0 * a)
        r2 = (2.0 * c) / (-b - sq) if (-b - sq) != 0 else math.inf
    else:
        r1 = (2.0 * c) / (-b + sq) if (-b + sq) != 0 else math.inf
        r2 = (-b + sq) / (2.0 * a)
    roots = [r for r in (r1, r2) if r > 1e-16 and math.isfinite(r)]
    return min(roots) if roots else None


# ---------------------------------------------------------------------------
# dense LU that also works in extended precision (LAPACK is double-only)


def _make_kkt_solver(K: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    if K.dtype == np.float64:
        with warnings.catch_warnings():
            # exact zero pivots are expected on degenerate faces; the
            # regularization plus iterative refinement covers them
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu_piv = sla.lu_factor(K, check_finite=False)
        return lambda rhs: sla.lu_solve(lu_piv, rhs, check_finite=False)

    n = K.shape[0]
    A = K.copy()
    piv = np.arange(n)
    for k in range(n):
        i = k + int(np.argmax(np.abs(A[k:, k])))
        if A[i, k] == 0:
            A[i, k] = np.finfo(K.dtype).tiny
        if i != k:
            A[[k, i]] = A[[i, k]]
            piv[[k, i]] = piv[[i, k]]
        A[k + 1:, k] /= A[k, k]
        if k + 1 < n:
            A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])

    def solve(rhs):
        x = rhs[piv].astype(K.dtype)
        for k in range(1, n):
            x[k] -= A[k, :k] @ x[:k]
        for k in range(n - 1, -1, -1):
            x[k] = (x[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
        return x

    return solve


# ---------------------------------------------------------------------------
# the embedding


class _HsdState:
    __slots__ = ("v", "y", "z", "s", "tau", "kappa")

    def __init__(self, v, y, z, s, tau, kappa):
        self.v, self.y, self.z, self.s = v, y, z, s
        self.tau, self.kappa = tau, kappa

    def copy(self):
        return _HsdState(self.v.copy(), self.y.copy(), self.z.copy(),
                         self.s.copy(), self.tau, self.kappa)


@dataclass
class _RawResult:
    status: Status
    v: Optional[np.ndarray]
    y: Optional[np.ndarray]
    z: Optional[np.ndarray]
    s: Optional[np.ndarray]
    pres: float
    dres: float
    relgap: float
    pobj: float
    dobj: float
    iterations: int
    # certificate payloads
    ray_v: Optional[np.ndarray] = None
    cert_y: Optional[np.ndarray] = None
    cert_z: Optional[np.ndarray] = None


def _pick_dtype(precision: str, kkt_dim: int):
    if precision == "double":
        return np.float64
    if precision == "extended":
        return np.longdouble
    if precision == "auto":
        if kkt_dim <= EXTENDED_DIM_LIMIT and np.finfo(np.longdouble).eps < 1e-18:
            return np.longdouble
        return np.float64
    raise ValueError(f"unknown precision {precision!r}")


def _solve_canon(cn: _Canon, tol: Tol, max_iter: int, precision: str) -> _RawResult:
    dtype = _pick_dtype(precision, cn.N + cn.E.shape[0] + cn.H.shape[0])
    E = cn.E.astype(dtype)
    f = cn.f.astype(dtype)
    H = cn.H.astype(dtype)
    h = cn.h.astype(dtype)
    q = cn.q.astype(dtype)
    p, r, N = E.shape[0], H.shape[0], cn.N
    blocks = cn.blocks

    nu = dtype(_cone_degree(blocks) + 1)
    e = _identity_e(blocks, dtype)

    scale_f = 1.0 + float(np.abs(f).max(initial=0.0))
    scale_h = 1.0 + float(np.abs(h).max(initial=0.0))
    scale_q = 1.0 + float(np.abs(q).max(initial=0.0))
    scale_EH = 1.0 + max(float(np.abs(E).max(initial=0.0)),
                         float(np.abs(H).max(initial=0.0)))

    st = _HsdState(
        v=np.zeros(N, dtype=dtype), y=np.zeros(p, dtype=dtype),
        z=_interior_start(blocks, dtype), s=_interior_start(blocks, dtype),
        tau=dtype(1.0), kappa=dtype(1.0),
    )

    reg = dtype(1e-10) if dtype == np.float64 else dtype(1e-13)

    def residuals(stt):
        res1 = E.T @ stt.y + H.T @ stt.z + q * stt.tau
        res2 = E @ stt.v - f * stt.tau
        res3 = H @ stt.v + stt.s - h * stt.tau
        res4 = q @ stt.v + f @ stt.y + h @ stt.z + stt.kappa
        return res1, res2, res3, res4

    def convergence_numbers(stt):
        t = stt.tau
        pres = 0.0
        if p:
            pres = max(pres, float(np.abs(E @ stt.v / t - f).max()) / scale_f)
        if r:
            pres = max(pres, float(np.abs(H @ stt.v / t + stt.s / t - h).max()) / scale_h)
        dres = float(np.abs(E.T @ stt.y + H.T @ stt.z + q * t).max(initial=0.0) / t) / scale_q
        pobj_raw = (q @ stt.v) / t
        dobj_raw = -(f @ stt.y + h @ stt.z) / t
        pobj = float(pobj_raw) + cn.offset
        dobj = float(dobj_raw) + cn.offset
        relgap = float(abs(pobj_raw - dobj_raw)) / max(1.0, abs(pobj), abs(dobj))
        return pres, dres, relgap, pobj, dobj

    def try_certificates(stt):
        """Normalized Farkas / ray tests, scale invariant with a strict margin."""
        signorm = max(float(np.abs(stt.y).max(initial=0.0)),
                      float(np.abs(stt.z).max(initial=0.0)))
        if signorm > 0:
            yn, zn = stt.y / dtype(signorm), stt.z / dtype(signorm)
            gain = float(f @ yn + h @ zn)
            resid = float(np.abs(E.T @ yn + H.T @ zn).max(initial=0.0))
            if (gain < -CERT_GAIN_MARGIN * max(scale_f, scale_h)
                    and resid <= 10 * tol.feas_eps * scale_EH):
                return "infeasible", (yn / dtype(-gain), zn / dtype(-gain))
        vnorm = float(np.abs(stt.v).max(initial=0.0))
        if vnorm > 0:
            vn, sn = stt.v / dtype(vnorm), stt.s / dtype(vnorm)
            gain = float(q @ vn)
            resid = max(float(np.abs(E @ vn).max(initial=0.0)),
                        float(np.abs(H @ vn + sn).max(initial=0.0)))
            if (gain < -CERT_GAIN_MARGIN * scale_q
                    and resid <= 10 * tol.feas_eps * scale_EH):
                return "unbounded", (vn / dtype(-gain), sn / dtype(-gain))
        return None, None

    def build_kkt(W2):
        K = np.zeros((N + p + r, N + p + r), dtype=dtype)
        K[:N, :N] = reg * np.eye(N, dtype=dtype)
        K[:N, N:N + p] = E.T
        K[:N, N + p:] = H.T
        K[N:N + p, :N] = E
        K[N:N + p, N:N + p] = -reg * np.eye(p, dtype=dtype)
        K[N + p:, :N] = H
        K[N + p:, N + p:] = -W2 - reg * np.eye(r, dtype=dtype)
        return K

    best = None
    best_score = math.inf
    mu_hist: List[float] = []
    it = 0
    status = Status.ITER_LIMIT

    def finalize(stt, pres, dres, relgap, pobj, dobj, stat, iters):
        return _RawResult(stat,
                          np.asarray(stt.v / stt.tau, dtype=np.float64),
                          np.asarray(stt.y / stt.tau, dtype=np.float64),
                          np.asarray(stt.z / stt.tau, dtype=np.float64),
                          np.asarray(stt.s / stt.tau, dtype=np.float64),
                          pres, dres, relgap, pobj, dobj, iters)

    _dbg = bool(os.environ.get("CONEDUAL_TRACE"))
    for it in range(1, max_iter + 1):
        res1, res2, res3, res4 = residuals(st)
        pres, dres, relgap, pobj, dobj = convergence_numbers(st)
        mu = (st.s @ st.z + st.tau * st.kappa) / nu
        if _dbg:
            print(f"it={it} mu={float(mu):.3e} tau={float(st.tau):.3e} "
                  f"pres={pres:.2e} dres={dres:.2e} gap={relgap:.2e}")

        score = max(pres, dres, relgap)
        if score < best_score:
            best_score = score
            best = (st.copy(), pres, dres, relgap, pobj, dobj)

        if pres <= tol.feas_eps and dres <= tol.feas_eps and relgap <= tol.dual_eps:
            status = Status.OPTIMAL
            break

        kind, payload = try_certificates(st)
        if kind == "infeasible":
            yn, zn = payload
            return _RawResult(Status.INFEASIBLE, None, None, None, None,
                              pres, dres, relgap, pobj, dobj, it,
                              cert_y=np.asarray(yn, dtype=np.float64),
                              cert_z=np.asarray(zn, dtype=np.float64))
        if kind == "unbounded":
            vn, sn = payload
            return _RawResult(Status.UNBOUNDED, None, None, None, None,
                              pres, dres, relgap, pobj, dobj, it,
                              ray_v=np.asarray(vn, dtype=np.float64))

        mu_hist.append(float(mu))
        if len(mu_hist) > 12 and mu_hist[-1] > 0.998 * mu_hist[-13]:
            if _dbg:
                print("break: mu stall")
            break  # stalled at the precision floor

        try:
            sc = _Scaling(blocks, st.s, st.z) if r else None
        except FloatingPointError:
            if _dbg:
                print("break: scaling lost interior")
            break
        lam = sc.apply_W(st.z) if r else np.zeros(0, dtype=dtype)
        W2 = sc.W2_matrix(dtype) if r else np.zeros((0, 0), dtype=dtype)
        K = build_kkt(W2)
        try:
            ksolve_raw = _make_kkt_solver(K)
        except Exception:
            break
        K_exact = K.copy()
        K_exact[:N, :N] -= reg * np.eye(N, dtype=dtype)
        K_exact[N:N + p, N:N + p] += reg * np.eye(p, dtype=dtype)
        K_exact[N + p:, N + p:] += reg * np.eye(r, dtype=dtype)

        def ksolve(rhs):
            sol = ksolve_raw(rhs)
            # refine against the unregularized matrix until the residual
            # stops shrinking; ill-conditioned late iterations need this
            # (overflowing candidates produce inf norms and are rejected)
            with np.errstate(over="ignore", invalid="ignore"):
                resid = rhs - K_exact @ sol
                rnorm = float(np.max(np.abs(resid.astype(np.float64))))
                for _ in range(4):
                    if rnorm == 0.0 or not np.isfinite(rnorm):
                        break
                    cand = sol + ksolve_raw(resid)
                    cresid = rhs - K_exact @ cand
                    cnorm = float(np.max(np.abs(cresid.astype(np.float64))))
                    if not np.isfinite(cnorm) or cnorm >= 0.5 * rnorm:
                        if cnorm < rnorm:
                            sol = cand
                        break
                    sol, resid, rnorm = cand, cresid, cnorm
            return sol

        sol1 = ksolve(np.concatenate([-q, f, h]))
        t1 = q @ sol1[:N] + f @ sol1[N:N + p] + h @ sol1[N + p:]

        def direction(sigma, comp_corr, tk_corr):
            if r:
                dcomp = sigma * mu * e - _jordan_mul(blocks, lam, lam) - comp_corr
                wlam = sc.apply_W(_jordan_solve(blocks, lam, dcomp))
            else:
                wlam = np.zeros(0, dtype=dtype)
            dcomp_tk = sigma * mu - st.tau * st.kappa - tk_corr
            damp = dtype(1.0) - sigma
            rhs = np.concatenate([-damp * res1, -damp * res2, -damp * res3 - wlam])
            sol0 = ksolve(rhs)
            t0 = q @ sol0[:N] + f @ sol0[N:N + p] + h @ sol0[N + p:]
            denom = t1 - st.kappa / st.tau
            if denom == 0:
                denom = dtype(-1e-300)
            dtau = (-damp * res4 - t0 - dcomp_tk / st.tau) / denom
            dv = sol0[:N] + dtau * sol1[:N]
            dy = sol0[N:N + p] + dtau * sol1[N:N + p]
            dz = sol0[N + p:] + dtau * sol1[N + p:]
            ds = wlam - W2 @ dz if r else np.zeros(0, dtype=dtype)
            dkappa = (dcomp_tk - st.kappa * dtau) / st.tau
            return dv, dy, dz, ds, dtau, dkappa

        # predictor
        dv, dy, dz, ds, dtau, dkappa = direction(dtype(0.0), np.zeros(r, dtype=dtype),
                                                 dtype(0.0))
        amax = min(
            _alpha_max(blocks, st.s, ds) if r else math.inf,
            _alpha_max(blocks, st.z, dz) if r else math.inf,
            float(-st.tau / dtau) if dtau < 0 else math.inf,
            float(-st.kappa / dkappa) if dkappa < 0 else math.inf,
        )
        a_aff = dtype(min(1.0, amax))
        mu_aff = ((st.s + a_aff * ds) @ (st.z + a_aff * dz)
                  + (st.tau + a_aff * dtau) * (st.kappa + a_aff * dkappa)) / nu
        sigma = min(dtype(1.0), max(dtype(0.0), mu_aff / mu)) ** 3

        # corrector with the Mehrotra second order term
        if r:
            corr = _jordan_mul(blocks, sc.apply_Winv(ds), sc.apply_W(dz))
        else:
            corr = np.zeros(0, dtype=dtype)
        dv, dy, dz, ds, dtau, dkappa = direction(sigma, corr, dtau * dkappa)

        amax = min(
            _alpha_max(blocks, st.s, ds) if r else math.inf,
            _alpha_max(blocks, st.z, dz) if r else math.inf,
            float(-st.tau / dtau) if dtau < 0 else math.inf,
            float(-st.kappa / dkappa) if dkappa < 0 else math.inf,
        )
        def mu_after(a):
            return float(((st.s + a * ds) @ (st.z + a * dz)
                          + (st.tau + a * dtau) * (st.kappa + a * dkappa)) / nu)

        step = dtype(min(1.0, STEP_FRACTION * amax))
        if not math.isfinite(float(step)) or step <= 1e-13 \
                or mu_after(step) > 10.0 * float(mu):
            # corrector direction got corrupted by conditioning; a pure
            # centering step often restores progress
            dv, dy, dz, ds, dtau, dkappa = direction(
                dtype(1.0), np.zeros(r, dtype=dtype), dtype(0.0))
            amax = min(
                _alpha_max(blocks, st.s, ds) if r else math.inf,
                _alpha_max(blocks, st.z, dz) if r else math.inf,
                float(-st.tau / dtau) if dtau < 0 else math.inf,
                float(-st.kappa / dkappa) if dkappa < 0 else math.inf,
            )
            step = dtype(min(1.0, 0.5 * amax))
            if not math.isfinite(float(step)) or step <= 1e-13 \
                    or mu_after(step) > 10.0 * float(mu):
                if _dbg:
                    print(f"break: step {float(step):.3e}")
                break

        st.v += step * dv
        st.y += step * dy
        st.z += step * dz
        st.s += step * ds
        st.tau = st.tau + step * dtau
        st.kappa = st.kappa + step * dkappa
        with np.errstate(over="ignore"):
            diverged = not np.all(np.isfinite(st.v.astype(np.float64)))
        if not (st.tau > 0 and st.kappa >= 0) or diverged:
            break

    if status is Status.OPTIMAL:
        pres, dres, relgap, pobj, dobj = convergence_numbers(st)
        return finalize(st, pres, dres, relgap, pobj, dobj, Status.OPTIMAL, it)

    # loop stalled or hit the cap: certificates first, then the best iterate
    for cand in (st, best[0] if best is not None else None):
        if cand is None:
            continue
        kind, payload = try_certificates(cand)
        if kind == "infeasible":
            yn, zn = payload
            pres, dres, relgap, pobj, dobj = convergence_numbers(cand)
            return _RawResult(Status.INFEASIBLE, None, None, None, None,
                              pres, dres, relgap, pobj, dobj, it,
                              cert_y=np.asarray(yn, dtype=np.float64),
                              cert_z=np.asarray(zn, dtype=np.float64))
        if kind == "unbounded":
            vn, sn = payload
            pres, dres, relgap, pobj, dobj = convergence_numbers(cand)
            return _RawResult(Status.UNBOUNDED, None, None, None, None,
                              pres, dres, relgap, pobj, dobj, it,
                              ray_v=np.asarray(vn, dtype=np.float64))

    if best is not None:
        stb, pres, dres, relgap, pobj, dobj = best
        stat = Status.OPTIMAL if (pres <= tol.feas_eps and dres <= tol.feas_eps
                                  and relgap <= tol.dual_eps) else Status.ITER_LIMIT
        return finalize(stb, pres, dres, relgap, pobj, dobj, stat, it)
    return _RawResult(Status.ITER_LIMIT, None, None, None, None,
                      math.inf, math.inf, math.inf, math.nan, math.nan, it)


# ---------------------------------------------------------------------------
# public entry points


def solve_continuous(prog: ContinuousProgram, tol: Tol,
                     max_iter: int = DEFAULT_MAX_ITER,
                     precision: str = "auto") -> Tuple[Solution, KktReport]:
    """Solve a continuous conic program.

    Returns a Solution and the KKT report of the returned iterate. For
    infeasible problems the Farkas certificate is placed in ``dual_eq``
    and ``dual_cone``; for unbounded problems the improving ray sits in
    the primal fields. When iterations run out the best iterate found
    is still returned, flagged ITER_LIMIT, so callers can inspect how
    close it got.

    ``precision`` is "auto", "double", or "extended"; auto switches to
    extended for small systems when the platform long double is wider
    than a double.
    """
    cn = _canonicalize(prog)
    raw = _solve_canon(cn, tol, max_iter, precision)
    report = KktReport(primal_res=raw.pres, dual_res=raw.dres,
                       comp_gap=raw.relgap, iterations=raw.iterations)
    n1, n2, n3 = cn.n1, cn.n2, cn.n3

    if raw.v is not None:
        v = raw.v
        x, y_, w = v[:n1], v[n1:n1 + n2], v[n1 + n2:]
        if cn.sense is Sense.EQUAL:
            alpha = -raw.y[cn.eq_main]
        else:
            alpha = -raw.z[cn.ineq_main]
        gamma = _extract_extra_duals(cn, raw.y, raw.z)
        rc = np.concatenate([prog.c, prog.d]) - np.hstack([prog.A, prog.G]).T @ alpha
        if gamma is not None:
            rc -= np.hstack([prog.Pi, prog.Phi]).T @ gamma
        obj = float(cn.q @ v) + cn.offset
        sol = Solution(status=raw.status, x=x, y=y_, obj=obj,
                       dual_eq=alpha, dual_cone=rc, w=w if n3 else None,
                       dual_rows=gamma)
        return sol, report

    if raw.status is Status.INFEASIBLE:
        # Farkas pair mapped back to the main-row multipliers
        if cn.sense is Sense.EQUAL:
            alpha = -raw.cert_y[cn.eq_main]
        else:
            alpha = -raw.cert_z[cn.ineq_main]
        rc = -np.hstack([prog.A, prog.G]).T @ alpha
        gamma = _extract_extra_duals(cn, raw.cert_y, raw.cert_z)
        if gamma is not None:
            rc -= np.hstack([prog.Pi, prog.Phi]).T @ gamma
        sol = Solution(status=Status.INFEASIBLE, obj=math.inf,
                       dual_eq=alpha, dual_cone=rc, dual_rows=gamma)
        return sol, report

    if raw.status is Status.UNBOUNDED:
        ray = raw.ray_v
        sol = Solution(status=Status.UNBOUNDED, x=ray[:n1], y=ray[n1:n1 + n2],
                       obj=-math.inf, w=ray[n1 + n2:] if n3 else None)
        return sol, report

    return Solution(status=Status.ITER_LIMIT), report


def _extract_extra_duals(cn: _Canon, yvec, zvec) -> Optional[np.ndarray]:
    if not cn.extra_map:
        return None
    k = sum(d for _, _, d in cn.extra_map)
    gamma = np.zeros(k)
    off = 0
    for where, base, dim in cn.extra_map:
        if where == "eq":
            gamma[off:off + dim] = -yvec[base:base + dim]
        else:
            gamma[off:off + dim] = zvec[base:base + dim]
        off += dim
    return gamma


def solve_for_dual(prog: ContinuousProgram, tol: Tol,
                   max_iter: int = DEFAULT_MAX_ITER) -> Tuple[Solution, KktReport]:
    """Solve and insist on a small duality gap.

    Used where the equality multipliers are the actual product of the
    solve. Raises NoStrongDuality when the achieved relative gap at the
    returned iterate exceeds ``tol.dual_eps``, and SolverFailure when no
    usable iterate exists at all.
    """
    sol, rep = solve_continuous(prog, tol, max_iter)
    if sol.status in (Status.INFEASIBLE, Status.UNBOUNDED):
        raise SolverFailure(f"dual extraction on a problem that is {sol.status.value}")
    if sol.dual_eq is None:
        raise SolverFailure("solver produced no usable iterate")
    if rep.comp_gap > tol.dual_eps:
        raise NoStrongDuality(
            f"residual relative gap {rep.comp_gap:.3e} exceeds dual_eps {tol.dual_eps:.3e}")
    return sol, rep
