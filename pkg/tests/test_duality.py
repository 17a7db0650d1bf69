"""Generator functions, Lagrangian ascent, hull synthesis, certificate checks."""

import math

import numpy as np
import pytest

from conedual import (
    BnbConfig,
    CertOrigin,
    ConicMip,
    GeneratingSet,
    GeneratorCertificate,
    Sense,
    Status,
    Tol,
    alpha_star_from_hull,
    build_fiber_hull,
    check_complementary_slackness,
    check_dual_feasibility,
    check_weak_duality,
    cones,
    eval_generator,
    lagrangian_value,
    maximize_lagrangian,
    sample_generators,
    solve_mip,
    sweep_generator,
)
from conedual.errors import InfeasiblePoint, NodeLimitReached, OmegaInfeasible

import oracles
import support

ALPHA = oracles.LORENTZ_ALPHA


def _cert(inst, alpha):
    return GeneratorCertificate(np.atleast_1d(np.asarray(alpha, dtype=float)),
                                CertOrigin.USER_GIVEN, inst)


@pytest.fixture(scope="module")
def lorentz_cert():
    return _cert(support.lorentz(), ALPHA)


def test_eval_at_rhs(lorentz_cert):
    # true supremum is approached, not attained; 1e-4 absorbs the residue
    assert eval_generator(lorentz_cert, np.array([5.0])) == pytest.approx(
        2.0, abs=1e-4)


def test_eval_at_origin(lorentz_cert):
    assert abs(eval_generator(lorentz_cert, np.zeros(1))) <= 1e-9


def test_eval_on_linear_segment(lorentz_cert):
    assert eval_generator(lorentz_cert, np.array([2.0])) == pytest.approx(
        2.0 * ALPHA, abs=1e-4)


def test_eval_rejects_unreachable_rhs(lorentz_cert):
    with pytest.raises(OmegaInfeasible):
        eval_generator(lorentz_cert, np.array([-1.0]))


def test_eval_unbounded_is_minus_inf():
    inst = ConicMip(np.zeros((1, 1)), np.zeros((1, 0)), np.zeros(1),
                    np.array([-1.0]), np.zeros(0), cones.nonneg(1),
                    Sense.LESS_EQUAL)
    assert eval_generator(_cert(inst, 0.0), np.zeros(1)) == -math.inf


def test_eval_node_limit_propagates(lorentz_cert):
    cfg = BnbConfig(node_limit=1)
    with pytest.raises(NodeLimitReached):
        eval_generator(lorentz_cert, np.array([5.0]), cfg)


def test_eval_matches_full_scan_oracle(lorentz_cert):
    for om in (0.0, 1.5, 3.0, 4.0, 4.5, 5.0, 6.0, 7.0, 8.0):
        want = oracles.gen_full_scan(om)
        got = eval_generator(lorentz_cert, np.array([om]))
        assert got == pytest.approx(want, abs=1e-4), om


def test_sweep_small_grid(lorentz_cert):
    rows = sweep_generator(lorentz_cert, [np.array([w]) for w in (3.0, 4.0, 5.0)])
    assert [r.status for r in rows] == ["ok", "ok", "ok"]
    assert rows[0].value == pytest.approx(0.0, abs=1e-4)
    assert rows[1].value == pytest.approx(0.0, abs=1e-4)
    assert rows[2].value == pytest.approx(2.0, abs=1e-4)


def test_sweep_empty_grid(lorentz_cert):
    assert sweep_generator(lorentz_cert, []) == []


def test_sweep_branch_point(lorentz_cert):
    # at omega=7 the inner optimum jumps between neighbouring fibers
    rows = sweep_generator(lorentz_cert, [np.array([7.0])])
    assert rows[0].value == pytest.approx(oracles.gen_five_cases(7.0), abs=1e-4)
    assert rows[0].value == pytest.approx(1.0 - math.sqrt(3.0), abs=1e-4)


def test_sweep_relaxation_is_lower(lorentz_cert):
    grid = [np.array([w]) for w in (0.0, 2.0, 3.5, 5.0, 6.5, 8.0)]
    for row in sweep_generator(lorentz_cert, grid):
        assert row.status == "ok"
        assert row.relaxed <= row.value + 1e-8


def test_sweep_records_infeasible_rows(lorentz_cert):
    rows = sweep_generator(lorentz_cert,
                           [np.array([-1.0]), np.array([5.0])])
    assert rows[0].status == "omega_infeasible"
    assert math.isnan(rows[0].value)
    assert rows[1].status == "ok"


def test_lagrangian_at_optimal_multiplier():
    inst = support.lorentz()
    assert lagrangian_value(inst, np.array([ALPHA])) == pytest.approx(
        2.0, abs=1e-4)


def test_lagrangian_zero_alpha_is_lower_bound():
    inst = support.linear_ip()
    z = solve_mip(inst, BnbConfig()).solution.obj
    assert lagrangian_value(inst, np.zeros(1)) <= z + 1e-9


def test_lagrangian_half_alpha_by_enumeration():
    # L(0.5) = 1.5 + min{0.5 x1 : x1 + 2 x2 <= 3, x in Z+^2} = 1.5
    inst = support.linear_ip()
    assert lagrangian_value(inst, np.array([0.5])) == pytest.approx(
        1.5, abs=1e-8)


def test_lagrangian_equals_generator_moderate_scale():
    rng = np.random.default_rng(42)
    for _ in range(12):
        inst, _ = support.boxed_instance(rng)
        alpha = rng.uniform(-3.0, 3.0, size=inst.m)
        lhs = lagrangian_value(inst, alpha)
        rhs = eval_generator(_cert(inst, alpha), inst.b)
        assert lhs == pytest.approx(rhs, abs=1e-8)


def test_lagrangian_equals_generator_large_scale(lorentz_cert):
    # coefficients near 1e4 leave roundoff near 1e-7 absolute; compare
    # relative to the working scale instead of the raw 1e-8
    inst = support.lorentz()
    lhs = lagrangian_value(inst, np.array([ALPHA]))
    rhs = eval_generator(lorentz_cert, inst.b)
    scale = 1.0 + ALPHA * float(inst.b[0])
    assert abs(lhs - rhs) <= 1e-10 * scale


def test_ascent_improves_from_zero():
    inst = support.lorentz()
    start = lagrangian_value(inst, np.zeros(1))
    cert = maximize_lagrangian(inst, np.zeros(1), iters=40)
    val = lagrangian_value(inst, cert.alpha)
    assert val >= start - 1e-9
    assert val <= 2.0 + 1e-6  # weak duality ceiling


def test_ascent_reaches_zero_gap_plateau():
    """On the lattice line the dual has a flat optimum L = z* = 2."""
    inst = support.linear_ip()
    grid_best = -math.inf
    pts = oracles.enum_feasible(np.vstack([inst.A, np.eye(2)]),
                                np.append(inst.b, [3.0, 3.0]), 3)
    for a in np.arange(-5.0, 5.0, 0.01):
        inner = min((1.0 - a) * p[0] + (1.0 - 2.0 * a) * p[1] for p in pts)
        grid_best = max(grid_best, 3.0 * a + inner)
    assert grid_best == pytest.approx(2.0, abs=1e-9)
    cert = maximize_lagrangian(inst, np.array([0.5]), iters=50)
    assert lagrangian_value(inst, cert.alpha) >= grid_best - 1e-8


def test_ascent_rejects_unbounded_start():
    inst = ConicMip(np.zeros((1, 1)), np.zeros((1, 0)), np.zeros(1),
                    np.array([-1.0]), np.zeros(0), cones.nonneg(1),
                    Sense.LESS_EQUAL)
    with pytest.raises(ValueError):
        maximize_lagrangian(inst, np.zeros(1), iters=5)


def test_hull_certificate_on_worked_instance():
    inst = support.lorentz()
    hull = build_fiber_hull(inst, [(0, 1)])
    cert = alpha_star_from_hull(inst, hull)
    assert cert.origin is CertOrigin.CONIC_DUAL
    assert eval_generator(cert, inst.b) == pytest.approx(2.0, abs=1e-4)


def test_hull_certificate_singleton_fiber():
    inst = ConicMip(np.array([[1.0]]), np.zeros((1, 0)), np.array([1.0]),
                    np.array([1.0]), np.zeros(0), cones.nonneg(1))
    cert = alpha_star_from_hull(inst, build_fiber_hull(inst, [(0, 1)]))
    assert eval_generator(cert, inst.b) == pytest.approx(1.0, abs=1e-8)


def test_hull_certificate_lattice_line():
    inst = support.linear_ip()
    hull = build_fiber_hull(inst, [(0, 3), (0, 3)])
    cert = alpha_star_from_hull(inst, hull)
    assert eval_generator(cert, inst.b) == pytest.approx(2.0, abs=1e-6)


def test_weak_duality_at_singleton(lorentz_cert):
    inst = support.lorentz()
    sol = solve_mip(inst, BnbConfig()).solution
    report = check_weak_duality(inst, lorentz_cert, sol)
    assert report.holds
    assert report.generator_value <= report.objective_value + 1e-6
    assert report.objective_value == pytest.approx(2.0, abs=1e-6)


def test_weak_duality_zero_alpha():
    inst = support.lorentz()
    sol = solve_mip(inst, BnbConfig()).solution
    report = check_weak_duality(inst, _cert(inst, 0.0), sol)
    assert report.holds
    assert report.generator_value == pytest.approx(1.0 - math.sqrt(2.0),
                                                   abs=1e-6)


def test_weak_duality_random_alpha_against_oracle():
    # the lattice line x1 + 2 x2 <= 3 keeps every inner problem compact
    inst = support.linear_ip()
    sol = solve_mip(inst, BnbConfig()).solution
    rng = np.random.default_rng(42)
    for _ in range(100):
        alpha = rng.uniform(-10.0, 10.0, size=inst.m)
        cert = _cert(inst, alpha)
        report = check_weak_duality(inst, cert, sol)
        assert report.holds
        want = oracles.enum_generator(inst.A, inst.c, alpha, inst.b, 3)
        assert report.generator_value == pytest.approx(want, abs=1e-9)


def test_weak_duality_rejects_infeasible_point(lorentz_cert):
    inst = support.lorentz()
    from conedual.core import Solution
    fake = Solution(Status.OPTIMAL, x=np.array([2.0]),
                    y=np.array([0.0, 0.0]), obj=2.0)
    with pytest.raises(InfeasiblePoint):
        check_weak_duality(inst, lorentz_cert, fake)


def test_dual_feasibility_on_sampled_boundary(lorentz_cert):
    inst = support.lorentz()
    gens = sample_generators(inst, soc_samples=20)
    report = check_dual_feasibility(inst, lorentz_cert, gens)
    assert report.holds
    assert report.samples == len(report.rows)
    assert abs(report.zero_value) <= 1e-6
    for lhs, rhs, ok in report.rows:
        assert ok and lhs <= rhs + 1e-6 * (1.0 + abs(rhs))


def test_dual_feasibility_zero_generator_only(lorentz_cert):
    inst = support.lorentz()
    gens = GeneratingSet(((np.zeros(1), np.zeros(2)),), inst.cone,
                         inst.n1, inst.n2)
    report = check_dual_feasibility(inst, lorentz_cert, gens)
    assert report.holds


def test_dual_feasibility_pair_augmentation_agrees():
    rng = np.random.default_rng(7)
    inst, _ = support.boxed_instance(rng)
    alpha = rng.uniform(-3.0, 3.0, size=inst.m)
    cert = _cert(inst, alpha)
    r1 = check_dual_feasibility(inst, cert, support.unit_generators(inst))
    r2 = check_dual_feasibility(inst, cert,
                                support.unit_generators(inst, with_pairs=True))
    assert r1.holds == r2.holds


def test_generating_set_rejects_outside_points():
    inst = support.lorentz()
    with pytest.raises(InfeasiblePoint):
        GeneratingSet(((np.array([1.0]), np.array([2.0, 2.0])),),
                      inst.cone, inst.n1, inst.n2)
    with pytest.raises(InfeasiblePoint):
        GeneratingSet(((np.array([0.5]), np.zeros(2)),),
                      inst.cone, inst.n1, inst.n2)


def test_sample_generators_deterministic():
    inst = support.lorentz()
    g1 = sample_generators(inst, soc_samples=16, seed=42)
    g2 = sample_generators(inst, soc_samples=16, seed=42)
    assert len(g1.points) == len(g2.points)
    for (u1, v1), (u2, v2) in zip(g1.points, g2.points):
        assert np.array_equal(u1, u2) and np.array_equal(v1, v2)


def test_comp_slack_at_optimum(lorentz_cert):
    inst = support.lorentz()
    sol = solve_mip(inst, BnbConfig()).solution
    cfg = BnbConfig(tol=Tol(gap_eps=1e-4))
    assert check_complementary_slackness(inst, lorentz_cert, sol, cfg)


def test_comp_slack_fails_for_zero_alpha():
    # F_0(5) = 1 - sqrt(2), far from the objective value 2
    inst = support.lorentz()
    sol = solve_mip(inst, BnbConfig()).solution
    cfg = BnbConfig(tol=Tol(gap_eps=1e-4))
    assert not check_complementary_slackness(inst, _cert(inst, 0.0), sol, cfg)
    assert eval_generator(_cert(inst, 0.0), inst.b) == pytest.approx(
        1.0 - math.sqrt(2.0), abs=1e-6)


def test_comp_slack_degenerate_zero_objective():
    inst = ConicMip(np.array([[1.0]]), np.zeros((1, 0)), np.zeros(1),
                    np.zeros(1), np.zeros(0), cones.nonneg(1))
    sol = solve_mip(inst, BnbConfig()).solution
    assert sol.obj == pytest.approx(0.0, abs=1e-9)
    assert check_complementary_slackness(inst, _cert(inst, 0.0), sol)
