"""Reading and writing the on-disk formats.

Instances travel as JSON, sweeps as CSV. Both formats are deliberately
boring: language-neutral, diff-friendly, and printed with enough digits
(12 significant) that re-running a sweep with identical flags yields a
byte-identical file.

The JSON instance document carries the keys ``m``, ``n1``, ``n2``,
``A``, ``G``, ``b``, ``c``, ``d`` and ``cone``, plus optional ``sense``
("eq" or "le", default "eq") and optional ``blocks``. The ``cone``
value is a list of ``{"type": ..., "dim": ...}`` entries, types drawn
from nonneg, soc and free. ``blocks`` is a list of
``{"n1": ..., "n2": ...}`` column counts partitioning the instance into
conic blocks; the x columns of the blocks come first, then the y
columns, and the cone must split at every per-block boundary. Unknown
keys anywhere are an error: silently ignoring them would turn typos
into wrong answers.
"""

from __future__ import annotations

import csv
import json
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cones import ConeSpec
from .core import ConicMip, Sense, Tol
from .duality import GeneratingSet, SweepRow
from .structure import BlockMip, ConicBlock


class FileFormatError(ValueError):
    """A document failed structural validation."""


_CONE_TYPES = ("nonneg", "soc", "free")
_SENSES = {"eq": Sense.EQUAL, "le": Sense.LESS_EQUAL}
_SENSE_NAMES = {v: k for k, v in _SENSES.items()}


def _require_keys(data: dict, required: Sequence[str],
                  optional: Sequence[str], what: str) -> None:
    if not isinstance(data, dict):
        raise FileFormatError(f"{what} must be a JSON object")
    missing = [k for k in required if k not in data]
    if missing:
        raise FileFormatError(f"{what} is missing keys: {', '.join(missing)}")
    unknown = [k for k in data if k not in required and k not in optional]
    if unknown:
        raise FileFormatError(f"{what} has unknown keys: {', '.join(unknown)}")


def _cone_from_json(entries, what: str = "cone") -> ConeSpec:
    if not isinstance(entries, list):
        raise FileFormatError(f"{what} must be a list of blocks")
    blocks = []
    for i, entry in enumerate(entries):
        _require_keys(entry, ("type", "dim"), (), f"{what}[{i}]")
        kind = entry["type"]
        if kind not in _CONE_TYPES:
            raise FileFormatError(
                f"{what}[{i}] has unknown type {kind!r}; "
                f"expected one of {', '.join(_CONE_TYPES)}")
        dim = entry["dim"]
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise FileFormatError(f"{what}[{i}] dim must be a positive integer")
        blocks.append((kind, dim))
    return ConeSpec(blocks)


def _cone_to_json(spec: ConeSpec) -> List[dict]:
    return [{"type": b.kind, "dim": b.dim} for b in spec.blocks]


def _matrix(data, rows: int, cols: int, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if cols == 0:
        # json cannot hold an m-by-0 array directly; accept [] and [[]]*m
        if arr.size == 0:
            return np.zeros((rows, 0))
        raise FileFormatError(f"{name} must be empty when it has no columns")
    if arr.ndim != 2 or arr.shape != (rows, cols):
        raise FileFormatError(
            f"{name} must be a {rows}x{cols} matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FileFormatError(f"{name} contains non-finite entries")
    return arr


def _vector(data, size: int, name: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != size:
        raise FileFormatError(f"{name} must be a vector of length {size}")
    if not np.all(np.isfinite(arr)):
        raise FileFormatError(f"{name} contains non-finite entries")
    return arr


def _dim(data, name: str) -> int:
    val = data[name]
    if not isinstance(val, int) or isinstance(val, bool) or val < 0:
        raise FileFormatError(f"{name} must be a non-negative integer")
    return val


def problem_from_dict(data: dict) -> Tuple[ConicMip, Optional[BlockMip]]:
    """Parse an instance document; returns the block view too if present."""
    _require_keys(data, ("m", "n1", "n2", "A", "G", "b", "c", "d", "cone"),
                  ("sense", "blocks"), "problem")
    m = _dim(data, "m")
    n1 = _dim(data, "n1")
    n2 = _dim(data, "n2")
    A = _matrix(data["A"], m, n1, "A")
    G = _matrix(data["G"], m, n2, "G")
    b = _vector(data["b"], m, "b")
    c = _vector(data["c"], n1, "c")
    d = _vector(data["d"], n2, "d")
    cone = _cone_from_json(data["cone"])
    if cone.dim != n1 + n2:
        raise FileFormatError(
            f"cone covers {cone.dim} coordinates, instance has {n1 + n2}")
    sense_name = data.get("sense", "eq")
    if sense_name not in _SENSES:
        raise FileFormatError(f'sense must be "eq" or "le", got {sense_name!r}')
    try:
        inst = ConicMip(A, G, b, c, d, cone, _SENSES[sense_name])
    except (ValueError, TypeError) as exc:
        raise FileFormatError(str(exc)) from exc
    block_mip = None
    if "blocks" in data:
        block_mip = _blocks_from_json(inst, data["blocks"])
    return inst, block_mip


def _blocks_from_json(inst: ConicMip, entries) -> BlockMip:
    if not isinstance(entries, list) or not entries:
        raise FileFormatError("blocks must be a non-empty list")
    sizes = []
    for i, entry in enumerate(entries):
        _require_keys(entry, ("n1", "n2"), (), f"blocks[{i}]")
        sizes.append((_dim(entry, "n1"), _dim(entry, "n2")))
    if sum(s[0] for s in sizes) != inst.n1 or sum(s[1] for s in sizes) != inst.n2:
        raise FileFormatError("block column counts do not sum to n1, n2")
    if len(sizes) == 1:
        blk = ConicBlock(inst.A, inst.G, inst.c, inst.d, inst.cone)
        return BlockMip((blk,), inst.b)
    # multi-block: per-block cones are reassembled from the x-section and
    # y-section of the flat spec, which must split at every boundary
    x_parts = _split_cone(inst.cone, [s[0] for s in sizes], 0, "x")
    y_parts = _split_cone(inst.cone, [s[1] for s in sizes], inst.n1, "y")
    blocks = []
    xoff = yoff = 0
    for (k1, k2), cx, cy in zip(sizes, x_parts, y_parts):
        blocks.append(ConicBlock(
            inst.A[:, xoff:xoff + k1], inst.G[:, yoff:yoff + k2],
            inst.c[xoff:xoff + k1], inst.d[yoff:yoff + k2],
            ConeSpec(tuple(cx) + tuple(cy))))
        xoff += k1
        yoff += k2
    return BlockMip(tuple(blocks), inst.b)


def _split_cone(spec: ConeSpec, sizes: List[int], start: int,
                which: str) -> List[list]:
    """Slice consecutive cone blocks into groups of the given widths."""
    spans = []
    off = 0
    for blk in spec.blocks:
        spans.append((off, off + blk.dim, blk))
        off += blk.dim
    parts = []
    cursor = start
    for size in sizes:
        group = []
        end = cursor + size
        while cursor < end:
            match = [b for (lo, hi, b) in spans if lo == cursor and hi <= end]
            if not match:
                raise FileFormatError(
                    f"cone does not split at the {which} boundary of a block")
            group.append(match[0])
            cursor += match[0].dim
        parts.append(group)
    return parts


def problem_to_dict(inst: ConicMip,
                    block_mip: Optional[BlockMip] = None) -> dict:
    data = {
        "m": inst.m,
        "n1": inst.n1,
        "n2": inst.n2,
        "A": inst.A.tolist(),
        "G": inst.G.tolist(),
        "b": inst.b.tolist(),
        "c": inst.c.tolist(),
        "d": inst.d.tolist(),
        "cone": _cone_to_json(inst.cone),
        "sense": _SENSE_NAMES[inst.sense],
    }
    if block_mip is not None:
        data["blocks"] = [{"n1": blk.n1, "n2": blk.n2}
                          for blk in block_mip.blocks]
    return data


def read_problem(path: str) -> Tuple[ConicMip, Optional[BlockMip]]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: {exc}") from exc
    return problem_from_dict(data)


def write_problem(path: str, inst: ConicMip,
                  block_mip: Optional[BlockMip] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(inst, block_mip), fh, indent=2)
        fh.write("\n")


def read_generators(path: str, inst: ConicMip,
                    tol: Optional[Tol] = None) -> GeneratingSet:
    """Load a generating-set sample: {"points": [{"u": [...], "v": [...]}]}."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: {exc}") from exc
    _require_keys(data, ("points",), (), "generator file")
    if not isinstance(data["points"], list) or not data["points"]:
        raise FileFormatError("points must be a non-empty list")
    pairs = []
    for i, entry in enumerate(data["points"]):
        _require_keys(entry, ("u", "v"), (), f"points[{i}]")
        pairs.append((_vector(entry["u"], inst.n1, f"points[{i}].u"),
                      _vector(entry["v"], inst.n2, f"points[{i}].v")))
    return GeneratingSet(tuple(pairs), inst.cone, inst.n1, inst.n2,
                         tol or Tol())


def fmt(x: float) -> str:
    """Render a float with 12 significant digits; infinities as inf/-inf."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def sweep_lines(rows: Sequence[SweepRow]) -> List[str]:
    lines = ["omega_index,omega,F_alpha,F_alpha_relaxed,status"]
    for i, row in enumerate(rows):
        om = float(np.asarray(row.omega).reshape(-1)[0])
        lines.append(f"{i},{fmt(om)},{fmt(row.value)},"
                     f"{fmt(row.relaxed)},{row.status}")
    return lines


def write_sweep(path: str, rows: Sequence[SweepRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(sweep_lines(rows)) + "\n")


def read_points_csv(path: str) -> np.ndarray:
    """Read a headerless CSV of points, one point per row."""
    rows: List[List[float]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not f.strip() for f in record):
                continue
            try:
                rows.append([float(f) for f in record])
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
            if len(rows[-1]) != len(rows[0]):
                raise FileFormatError(
                    f"{path}:{lineno}: expected {len(rows[0])} columns, "
                    f"got {len(rows[-1])}")
    if not rows:
        raise FileFormatError(f"{path}: no points")
    return np.array(rows, dtype=float)
