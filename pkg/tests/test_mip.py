"""Branch and bound over conic lattice sets, value function, rhs membership."""

import math

import numpy as np
import pytest

from conedual import (
    BnbConfig,
    ConicMip,
    Sense,
    Status,
    cones,
    feasible_rhs,
    solve_mip,
    value_function,
)
from conedual.errors import NodeLimitReached

import oracles
import support


def _value(inst, cfg=None):
    res = solve_mip(inst, cfg or BnbConfig())
    if res.solution.status is Status.INFEASIBLE:
        return math.inf
    if res.solution.status is Status.UNBOUNDED:
        return -math.inf
    return res.solution.obj


def test_worked_singleton_instance():
    res = solve_mip(support.lorentz(), BnbConfig())
    sol = res.solution
    assert sol.status is Status.OPTIMAL
    assert abs(sol.obj - 2.0) <= 1e-6
    assert abs(sol.x[0] - 1.0) <= 1e-6
    assert abs(sol.y[0] - 1.0) <= 1e-6 and abs(sol.y[1]) <= 1e-6
    assert abs(res.best_bound - sol.obj) <= 1e-6 * (1.0 + abs(sol.obj))


def test_unconstrained_integer_min():
    inst = ConicMip(np.zeros((0, 1)), np.zeros((0, 0)), np.zeros(0),
                    np.zeros(1), np.zeros(0), cones.nonneg(1))
    res = solve_mip(inst, BnbConfig())
    assert res.solution.status is Status.OPTIMAL
    assert res.solution.obj == 0.0


def test_two_variable_lattice_line():
    inst = support.linear_ip()
    res = solve_mip(inst, BnbConfig())
    assert res.solution.status is Status.OPTIMAL
    assert abs(res.solution.obj - 2.0) <= 1e-6
    assert np.allclose(res.solution.x, [1.0, 1.0], atol=1e-6)


def test_solution_is_integral():
    res = solve_mip(support.lorentz(), BnbConfig())
    assert np.all(np.abs(res.solution.x - np.round(res.solution.x)) <= 1e-6)


def test_node_limit_raises_with_incumbent():
    cfg = BnbConfig(node_limit=1)
    with pytest.raises(NodeLimitReached) as exc:
        solve_mip(support.lorentz(), cfg)
    assert exc.value.best_bound is not None
    assert exc.value.best_bound <= 2.0 + 1e-6


def test_unbounded_with_integral_ray():
    inst = ConicMip(np.zeros((1, 1)), np.zeros((1, 0)), np.zeros(1),
                    np.array([-1.0]), np.zeros(0), cones.nonneg(1),
                    Sense.LESS_EQUAL)
    res = solve_mip(inst, BnbConfig())
    assert res.solution.status is Status.UNBOUNDED


def test_value_function_on_worked_instance():
    inst = support.lorentz()
    assert abs(value_function(inst, np.array([5.0])) - 2.0) <= 1e-6
    # 1 sits in the gap of the attainable rhs set {0} u [3,5] u [6,inf)
    assert value_function(inst, np.array([1.0])) == math.inf


def test_value_function_at_origin():
    inst = support.linear_ip()
    assert abs(value_function(inst, np.zeros(1))) <= 1e-9


def test_feasible_rhs_examples():
    inst = support.lorentz()
    assert feasible_rhs(inst, np.array([4.0]), Sense.EQUAL)
    assert not feasible_rhs(inst, np.array([-1.0]), Sense.LESS_EQUAL)
    assert feasible_rhs(inst, np.array([0.0]), Sense.LESS_EQUAL)


def test_matches_enumeration_oracle():
    rng = np.random.default_rng(42)
    for _ in range(10):
        inst, pts = support.boxed_instance(rng)
        want, _ = oracles.enum_min(inst.A, inst.b, inst.c, support.BOX_HI)
        got = _value(inst)
        if math.isinf(want):
            assert math.isinf(got)
        else:
            assert got == pytest.approx(want, abs=1e-6)


def test_branching_partitions_the_feasible_set():
    """Parent optimum equals the best of the two branch children."""
    rng = np.random.default_rng(11)
    for _ in range(8):
        inst, _ = support.boxed_instance(rng)
        parent = _value(inst)
        j = int(rng.integers(0, inst.n1))
        k = int(rng.integers(0, 3))
        e = np.zeros(inst.n1)
        e[j] = 1.0
        lo = ConicMip(np.vstack([inst.A, e]), inst.G,
                      np.append(inst.b, float(k)), inst.c, inst.d,
                      inst.cone, inst.sense)
        hi = ConicMip(np.vstack([inst.A, -e]), inst.G,
                      np.append(inst.b, -float(k + 1)), inst.c, inst.d,
                      inst.cone, inst.sense)
        best = min(_value(lo), _value(hi))
        assert parent == pytest.approx(best, abs=1e-6)


def test_value_function_monotone_in_relaxed_sense():
    # enlarging omega can only enlarge the <=-sense feasible set
    rng = np.random.default_rng(3)
    for _ in range(6):
        inst, _ = support.boxed_instance(rng)
        w1 = rng.integers(0, 6, size=inst.m).astype(float)
        w2 = w1 + rng.integers(0, 4, size=inst.m).astype(float)
        v1 = value_function(inst, w1)
        v2 = value_function(inst, w2)
        assert v1 >= v2 - 1e-9
