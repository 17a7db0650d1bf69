"""Cone specifications and membership tests.

A :class:`ConeSpec` is an ordered product of primitive blocks. Four block
kinds are supported:

====== ======================================== =================
kind   set                                      notes
====== ======================================== =================
free   R^k                                      dual is zero
nonneg {v in R^k : v >= 0}                      self dual
soc    {(t, u) in R^k : t >= ||u||_2}, k >= 2   self dual
zero   {0} in R^k                               dual is free
====== ======================================== =================

Zero blocks exist so that ``dual()`` is closed on specs containing free
blocks; primal problem cones are built from the first three kinds.

Membership tests take an explicit tolerance. ``contains`` allows slack
``-eps`` (points slightly outside pass) while ``in_interior`` demands
margin ``+eps``, so the two predicates never disagree on the same point
with the same eps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Tuple

import numpy as np

_KINDS = ("free", "nonneg", "soc", "zero")


@dataclass(frozen=True)
class ConeBlock:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.dim < 0:
            raise ValueError("cone block dimension must be nonnegative")
        if self.kind == "soc" and self.dim < 2:
            raise ValueError("soc blocks need dimension >= 2")


@dataclass(frozen=True)
class ConeSpec:
    """Ordered product of primitive cone blocks."""

    blocks: Tuple[ConeBlock, ...]

    def __init__(self, blocks: Iterable):
        normalized = []
        for blk in blocks:
            if isinstance(blk, ConeBlock):
                normalized.append(blk)
            else:
                kind, dim = blk
                normalized.append(ConeBlock(str(kind), int(dim)))
        object.__setattr__(self, "blocks", tuple(normalized))

    @property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    def iter_slices(self) -> Iterator[Tuple[ConeBlock, slice]]:
        """Yield (block, slice) pairs in declaration order."""
        off = 0
        for b in self.blocks:
            yield b, slice(off, off + b.dim)
            off += b.dim

    def is_regular(self) -> bool:
        """True when the cone is closed, pointed and full dimensional.

        Free blocks break pointedness and zero blocks break solidity, so
        regular means every block is nonneg or soc.
        """
        return all(b.kind in ("nonneg", "soc") for b in self.blocks)

    def has_kind(self, kind: str) -> bool:
        return any(b.kind == kind for b in self.blocks)

    def concat(self, other: "ConeSpec") -> "ConeSpec":
        return ConeSpec(self.blocks + other.blocks)

    def __repr__(self):
        inner = " x ".join(f"{b.kind}({b.dim})" for b in self.blocks)
        return f"ConeSpec[{inner or 'empty'}]"


def free(k: int) -> ConeSpec:
    return ConeSpec([("free", k)])


def nonneg(k: int) -> ConeSpec:
    return ConeSpec([("nonneg", k)])


def soc(k: int) -> ConeSpec:
    return ConeSpec([("soc", k)])


def zero(k: int) -> ConeSpec:
    return ConeSpec([("zero", k)])


def product(*specs: ConeSpec) -> ConeSpec:
    blocks = []
    for s in specs:
        blocks.extend(s.blocks)
    return ConeSpec(blocks)


def contains(spec: ConeSpec, v: np.ndarray, eps: float) -> bool:
    """Test membership of ``v`` in the cone, with slack ``eps``.

    Each block inequality is relaxed by ``eps``: nonneg coordinates may
    dip to ``-eps``, soc blocks may violate ``t >= ||u||`` by ``eps``,
    zero blocks may deviate from 0 by ``eps`` per coordinate.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.dim,):
        raise ValueError(f"expected vector of length {spec.dim}, got shape {v.shape}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    for blk, sl in spec.iter_slices():
        w = v[sl]
        if blk.kind == "free":
            continue
        if blk.kind == "nonneg":
            if w.size and w.min() < -eps:
                return False
        elif blk.kind == "zero":
            if w.size and np.abs(w).max() > eps:
                return False
        else:  # soc
            if w[0] < float(np.linalg.norm(w[1:])) - eps:
                return False
    return True


def in_interior(spec: ConeSpec, v: np.ndarray, eps: float) -> bool:
    """Test strict membership with margin ``eps``.

    Zero blocks of positive dimension have empty interior, so any spec
    containing one fails. Free blocks are open and always pass.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.dim,):
        raise ValueError(f"expected vector of length {spec.dim}, got shape {v.shape}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    for blk, sl in spec.iter_slices():
        w = v[sl]
        if blk.kind == "free":
            continue
        if blk.kind == "zero":
            if blk.dim > 0:
                return False
        elif blk.kind == "nonneg":
            if w.size and w.min() < eps:
                return False
        else:
            if w[0] < float(np.linalg.norm(w[1:])) + eps:
                return False
    return True


def dual(spec: ConeSpec) -> ConeSpec:
    """Dual cone, block by block.

    nonneg and soc are self dual; free and zero swap. Applying ``dual``
    twice returns an equal spec.
    """
    mapped = []
    for b in spec.blocks:
        if b.kind == "nonneg" or b.kind == "soc":
            mapped.append((b.kind, b.dim))
        elif b.kind == "free":
            mapped.append(("zero", b.dim))
        else:
            mapped.append(("free", b.dim))
    return ConeSpec(mapped)


def strict_interior_point(spec: ConeSpec) -> np.ndarray:
    """A canonical interior point, used to seed interior point iterations.

    nonneg blocks get all ones, soc blocks get (2, 0, ..., 0), free
    blocks get zeros. Rejects zero blocks: their interior is empty.
    """
    if spec.has_kind("zero"):
        raise ValueError("zero block has empty interior")
    out = np.zeros(spec.dim)
    for blk, sl in spec.iter_slices():
        if blk.kind == "nonneg":
            out[sl] = 1.0
        elif blk.kind == "soc":
            out[sl.start] = 2.0
    return out


def project_distance(spec: ConeSpec, v: np.ndarray) -> float:
    """Infinity-norm style violation measure: 0 when v is in the cone.

    For nonneg blocks the largest negative part, for soc blocks the
    norm deficit, for zero blocks the largest absolute coordinate.
    """
    v = np.asarray(v, dtype=float)
    worst = 0.0
    for blk, sl in spec.iter_slices():
        w = v[sl]
        if blk.kind == "free" or w.size == 0:
            continue
        if blk.kind == "nonneg":
            worst = max(worst, float(max(0.0, -w.min())))
        elif blk.kind == "zero":
            worst = max(worst, float(np.abs(w).max()))
        else:
            worst = max(worst, float(max(0.0, np.linalg.norm(w[1:]) - w[0])))
    return worst
