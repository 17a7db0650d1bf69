"""Cone algebra: membership, duality, interior points."""

import numpy as np
import pytest

from conedual import cones

EPS = 1e-9


def _member(spec, rng):
    # build a point inside the cone blockwise instead of rejection sampling
    out = np.empty(spec.dim)
    for blk, sl in spec.iter_slices():
        if blk.kind == "nonneg":
            out[sl] = np.abs(rng.normal(size=blk.dim))
        elif blk.kind == "soc":
            u = rng.normal(size=blk.dim - 1)
            out[sl] = np.concatenate([[np.linalg.norm(u) + abs(rng.normal())], u])
        elif blk.kind == "free":
            out[sl] = rng.normal(size=blk.dim)
        else:
            out[sl] = 0.0
    return out


def test_contains_soc_boundary():
    assert cones.contains(cones.soc(3), np.array([1.0, 1.0, 0.0]), EPS)


def test_contains_orthant_apex():
    assert cones.contains(cones.nonneg(2), np.zeros(2), EPS)


def test_contains_soc_rejects_outside():
    # ||(0.8, 0.8)|| ~ 1.1314 > 1
    assert not cones.contains(cones.soc(3), np.array([1.0, 0.8, 0.8]), EPS)


def test_contains_dimension_mismatch():
    with pytest.raises(ValueError):
        cones.contains(cones.soc(3), np.zeros(2), EPS)


def test_dual_orthant_self():
    assert cones.dual(cones.nonneg(3)) == cones.nonneg(3)


def test_dual_soc_self():
    assert cones.dual(cones.soc(3)) == cones.soc(3)


def test_dual_free_is_zero():
    assert cones.dual(cones.free(2)) == cones.zero(2)


def test_dual_involution_without_free():
    specs = [
        cones.nonneg(4),
        cones.soc(2),
        cones.product(cones.nonneg(1), cones.soc(3)),
        cones.product(cones.soc(2), cones.nonneg(2), cones.soc(4)),
    ]
    for spec in specs:
        assert cones.dual(cones.dual(spec)) == spec


def test_interior_point_orthant():
    assert np.array_equal(cones.strict_interior_point(cones.nonneg(2)),
                          np.ones(2))


def test_interior_point_soc():
    assert np.array_equal(cones.strict_interior_point(cones.soc(3)),
                          np.array([2.0, 0.0, 0.0]))


def test_interior_point_product():
    got = cones.strict_interior_point(
        cones.product(cones.nonneg(1), cones.soc(2)))
    assert np.array_equal(got, np.array([1.0, 2.0, 0.0]))


def test_interior_point_rejects_zero_block():
    with pytest.raises(ValueError):
        cones.strict_interior_point(cones.zero(2))


def test_in_interior_orthant_boundary_excluded():
    assert not cones.in_interior(cones.nonneg(1), np.zeros(1), EPS)


def test_in_interior_soc():
    assert cones.in_interior(cones.soc(3), np.array([2.0, 1.0, 1.0]), 1e-6)


def test_in_interior_soc_boundary_excluded():
    assert not cones.in_interior(cones.soc(3), np.array([1.0, 1.0, 0.0]), EPS)


def test_regularity():
    assert cones.nonneg(2).is_regular()
    assert cones.soc(3).is_regular()
    assert not cones.free(1).is_regular()
    assert not cones.product(cones.nonneg(1), cones.free(1)).is_regular()


def test_dual_pairing_nonnegative():
    # v in K and w in K* must satisfy v.w >= -eps ||v|| ||w||
    rng = np.random.default_rng(42)
    spec = cones.product(cones.nonneg(2), cones.soc(3), cones.soc(2))
    dual = cones.dual(spec)
    for _ in range(1000):
        v = _member(spec, rng)
        w = _member(dual, rng)
        assert cones.contains(spec, v, EPS)
        assert cones.contains(dual, w, EPS)
        bound = -EPS * np.linalg.norm(v) * np.linalg.norm(w)
        assert float(v @ w) >= bound


def test_interior_implies_membership():
    rng = np.random.default_rng(7)
    spec = cones.product(cones.nonneg(3), cones.soc(4))
    hits = 0
    for _ in range(500):
        v = rng.normal(size=spec.dim) + cones.strict_interior_point(spec)
        if cones.in_interior(spec, v, 1e-9):
            hits += 1
            assert cones.contains(spec, v, 1e-9)
    assert hits > 50  # the shift makes interior draws common


def test_interior_point_is_interior():
    for spec in (cones.nonneg(5), cones.soc(2),
                 cones.product(cones.soc(3), cones.nonneg(1))):
        p = cones.strict_interior_point(spec)
        assert cones.in_interior(spec, p, 1e-6)
