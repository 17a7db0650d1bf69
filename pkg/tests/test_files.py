"""Problem JSON, generator files, sweep CSV, points CSV."""

import json
import math

import numpy as np
import pytest

from conedual import ConicMip, Sense, cones
from conedual.duality import SweepRow
from conedual.files import (
    FileFormatError,
    fmt,
    problem_from_dict,
    problem_to_dict,
    read_generators,
    read_points_csv,
    read_problem,
    sweep_lines,
    write_problem,
    write_sweep,
)

import support


def _lorentz_dict():
    return {
        "m": 1, "n1": 1, "n2": 2,
        "A": [[4.0]], "G": [[1.0, 0.0]], "b": [5.0],
        "c": [1.0], "d": [1.0, 1.0],
        "cone": [{"type": "soc", "dim": 3}],
    }


def test_problem_round_trip(tmp_path):
    inst = support.lorentz()
    path = tmp_path / "prob.json"
    write_problem(str(path), inst)
    back, blocks = read_problem(str(path))
    assert blocks is None
    assert np.array_equal(back.A, inst.A) and np.array_equal(back.G, inst.G)
    assert np.array_equal(back.b, inst.b)
    assert np.array_equal(back.c, inst.c) and np.array_equal(back.d, inst.d)
    assert back.cone == inst.cone and back.sense is inst.sense


def test_block_round_trip(tmp_path):
    rng = np.random.default_rng(42)
    bm = support.block_trio(rng)
    path = tmp_path / "blocks.json"
    write_problem(str(path), bm.concat(), bm)
    inst2, bm2 = read_problem(str(path))
    assert bm2 is not None and len(bm2.blocks) == 3
    assert np.array_equal(bm2.b, bm.b)
    for blk, blk2 in zip(bm.blocks, bm2.blocks):
        assert np.array_equal(blk.A, blk2.A) and np.array_equal(blk.G, blk2.G)
        assert np.array_equal(blk.c, blk2.c) and np.array_equal(blk.d, blk2.d)
        assert blk.cone == blk2.cone
    assert np.array_equal(inst2.A, bm.concat().A)


def test_dict_defaults_to_equality_sense():
    inst, _ = problem_from_dict(_lorentz_dict())
    assert inst.sense is Sense.EQUAL


def test_dict_parses_le_sense():
    data = _lorentz_dict()
    data["sense"] = "le"
    inst, _ = problem_from_dict(data)
    assert inst.sense is Sense.LESS_EQUAL


def test_dict_rejects_unknown_keys():
    data = _lorentz_dict()
    data["extra"] = 1
    with pytest.raises(FileFormatError):
        problem_from_dict(data)


def test_dict_rejects_missing_keys():
    data = _lorentz_dict()
    del data["cone"]
    with pytest.raises(FileFormatError):
        problem_from_dict(data)


def test_dict_rejects_bad_cone_type():
    data = _lorentz_dict()
    data["cone"] = [{"type": "psd", "dim": 3}]
    with pytest.raises(FileFormatError):
        problem_from_dict(data)


def test_dict_rejects_dimension_mismatch():
    data = _lorentz_dict()
    data["b"] = [5.0, 6.0]
    with pytest.raises(FileFormatError):
        problem_from_dict(data)


def test_empty_matrix_columns_accepted():
    data = {
        "m": 1, "n1": 2, "n2": 0,
        "A": [[1.0, 2.0]], "G": [], "b": [3.0],
        "c": [1.0, 1.0], "d": [],
        "cone": [{"type": "nonneg", "dim": 2}],
    }
    inst, _ = problem_from_dict(data)
    assert inst.n2 == 0 and inst.G.shape == (1, 0)


def test_to_dict_emits_sense_and_blocks():
    data = problem_to_dict(support.lorentz())
    assert data["sense"] == "eq"
    assert "blocks" not in data
    json.dumps(data)  # must already be plain JSON types


def test_generator_file(tmp_path):
    inst = support.lorentz()
    path = tmp_path / "gens.json"
    path.write_text(json.dumps({"points": [
        {"u": [1.0], "v": [1.0, 0.0]},
        {"u": [1.0], "v": [0.0, 0.0]},
    ]}))
    gens = read_generators(str(path), inst)
    assert len(gens.points) == 2


def test_generator_file_rejects_outside_point(tmp_path):
    inst = support.lorentz()
    path = tmp_path / "gens.json"
    path.write_text(json.dumps({"points": [{"u": [1.0], "v": [4.0, 0.0]}]}))
    with pytest.raises(Exception):
        read_generators(str(path), inst)


def test_fmt_special_values():
    assert fmt(math.inf) == "inf"
    assert fmt(-math.inf) == "-inf"
    assert fmt(math.nan) == "nan"
    assert fmt(2.0) == "2"
    # 12 significant digits
    assert fmt(1.0 / 3.0) == "0.333333333333"


def test_sweep_lines_layout():
    rows = [
        SweepRow(np.array([0.0]), 0.0, 0.0, "ok"),
        SweepRow(np.array([1.0]), -math.inf, -math.inf, "unbounded"),
        SweepRow(np.array([2.0]), math.nan, math.nan, "omega_infeasible"),
    ]
    lines = sweep_lines(rows)
    assert lines[0] == "omega_index,omega,F_alpha,F_alpha_relaxed,status"
    assert lines[1] == "0,0,0,0,ok"
    assert lines[2] == "1,1,-inf,-inf,unbounded"
    assert lines[3] == "2,2,nan,nan,omega_infeasible"
    assert len(lines) == 1 + len(rows)
    # omega_index column is the row position
    assert [int(l.split(",")[0]) for l in lines[1:]] == [0, 1, 2]


def test_write_sweep(tmp_path):
    path = tmp_path / "sweep.csv"
    write_sweep(str(path), [SweepRow(np.array([5.0]), 2.0, -0.63, "ok")])
    text = path.read_text()
    assert text.endswith("\n")
    assert text.splitlines()[1].startswith("0,5,2,-0.63,ok")


def test_points_csv(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("0.0,0.0\n1.0,0.0\n0.5,1.5\n")
    pts = read_points_csv(str(path))
    assert pts.shape == (3, 2)
    assert np.allclose(pts[2], [0.5, 1.5])


def test_points_csv_rejects_ragged_rows(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("0.0,0.0\n1.0\n")
    with pytest.raises(FileFormatError) as exc:
        read_points_csv(str(path))
    assert "2" in str(exc.value)  # the offending line number


def test_points_csv_rejects_non_numeric(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("0.0,x\n")
    with pytest.raises(FileFormatError):
        read_points_csv(str(path))
