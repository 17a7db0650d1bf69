"""Instance builders shared across the test modules."""

import numpy as np

from conedual import cones
from conedual.core import ConicMip, Sense
from conedual.duality import GeneratingSet
from conedual.structure import BlockMip, ConicBlock

import oracles

BOX_HI = 10


def lorentz():
    """min x + y1 + y2, 4x + y1 = 5, (x, y) in Soc(3), x integer."""
    return ConicMip([[4.0]], [[1.0, 0.0]], [5.0], [1.0], [1.0, 1.0],
                    cones.soc(3), Sense.EQUAL)


def linear_ip():
    """min x1 + x2, x1 + 2 x2 = 3, x integer nonnegative."""
    return ConicMip([[1.0, 2.0]], np.zeros((1, 0)), [3.0], [1.0, 1.0], [],
                    cones.nonneg(2), Sense.EQUAL)


def boxed_instance(rng, fiber_cap=12):
    """Random pure-integer instance with explicit box rows.

    Rows are integer entries in [-5, 5], right-hand sides in [0, 10],
    and the rows x_j <= 10 appear explicitly so the feasible set is a
    finite subset of the box. Instances are rejected until at most
    fiber_cap lattice points remain, keeping hull builds cheap. The
    origin is always feasible, so the instance never comes back empty.
    Returns the instance together with its enumerated feasible set.
    """
    while True:
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        A = rng.integers(-5, 6, size=(m, n)).astype(float)
        b = rng.integers(0, 11, size=m).astype(float)
        c = rng.integers(-5, 6, size=n).astype(float)
        A_full = np.vstack([A, np.eye(n)])
        b_full = np.concatenate([b, np.full(n, float(BOX_HI))])
        pts = oracles.enum_feasible(A_full, b_full, BOX_HI)
        if 1 <= pts.shape[0] <= fiber_cap:
            inst = ConicMip(A_full, np.zeros((m + n, 0)), b_full, c, [],
                            cones.nonneg(n), Sense.LESS_EQUAL)
            return inst, pts


def unit_generators(inst, with_pairs=False):
    """{e_j} for a pure-integer orthant instance, optionally plus sums."""
    n = inst.n1
    pts = [(np.eye(n)[j], np.zeros(0)) for j in range(n)]
    if with_pairs:
        for j in range(n):
            for k in range(j + 1, n):
                pts.append((np.eye(n)[j] + np.eye(n)[k], np.zeros(0)))
    return GeneratingSet(tuple(pts), inst.cone, inst.n1, inst.n2)


def block_trio(rng):
    """Three coupled blocks mixing orthant and second-order cones.

    Besides the random shared rows, each block gets one bounding row
    (all ones on an orthant block, the leading coordinate on a
    second-order block) with a positive right-hand side. That keeps
    every relaxed slice compact, so generator evaluations stay finite
    and comparable instead of wandering off along a cone ray.
    """
    m = int(rng.integers(1, 4))
    shapes = []
    for _ in range(3):
        if rng.integers(0, 2) == 0:
            n1 = int(rng.integers(1, 3))
            n2 = int(rng.integers(0, 3))
            cone = cones.nonneg(n1) if n2 == 0 else cones.product(
                cones.nonneg(n1), cones.nonneg(n2))
            cap = np.ones(n1 + n2)
        else:
            n1 = int(rng.integers(0, 2))
            n2 = int(rng.integers(2, 4))
            cone = cones.soc(n2) if n1 == 0 else cones.product(
                cones.nonneg(n1), cones.soc(n2))
            cap = np.concatenate([np.ones(n1), [1.0], np.zeros(n2 - 1)])
        shapes.append((n1, n2, cone, cap))
    rows = m + 3
    blocks = []
    for i, (n1, n2, cone, cap) in enumerate(shapes):
        A = np.zeros((rows, n1))
        G = np.zeros((rows, n2))
        A[:m] = rng.integers(-3, 4, size=(m, n1))
        G[:m] = rng.integers(-3, 4, size=(m, n2))
        A[m + i] = cap[:n1]
        G[m + i] = cap[n1:]
        blocks.append(ConicBlock(
            A, G,
            rng.integers(-3, 4, size=n1).astype(float),
            rng.integers(-3, 4, size=n2).astype(float),
            cone))
    b = np.concatenate([rng.integers(0, 6, size=m).astype(float),
                        rng.integers(1, 6, size=3).astype(float)])
    return BlockMip(tuple(blocks), b)


def packing_instance(rng):
    """Random bounded packing instance over NonNeg(k) x Soc(3).

    The first row is a strict interior point of the (self-dual) cone,
    which certifies boundedness by itself; extra rows stay inside the
    dual cone so the packing property is preserved.
    """
    k = int(rng.integers(1, 4))
    rows = [np.concatenate([np.ones(k), [2.0, 0.0, 0.0]])]
    for _ in range(int(rng.integers(0, 3))):
        g = rng.uniform(0.0, 2.0, size=k)
        u = rng.uniform(-1.0, 1.0, size=2)
        t = float(np.linalg.norm(u) + rng.uniform(0.0, 1.0))
        rows.append(np.concatenate([g, [t], u]))
    M = np.array(rows)
    b = rng.uniform(1.0, 10.0, size=len(rows))
    return ConicMip(M[:, :k], M[:, k:], b,
                    -np.ones(k), -np.ones(3),
                    cones.product(cones.nonneg(k), cones.soc(3)),
                    Sense.LESS_EQUAL)
