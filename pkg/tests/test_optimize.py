from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from soec_opt.errors import DomainError, EmptyFrontError
from soec_opt.optimize.constrained import NodeProblem, damped_newton, solve_constrained
from soec_opt.optimize.front import build_front, dominance_mask, filter_dominated, sweep_power
from soec_opt.optimize.vcell import contour_scan, objective_relationships, solve_vcell_for_su
from soec_opt.schemas.models import Q_AIR_FIXED, GridSpec, ObjectiveVector, ParetoSolution


def _solution(index: int, *values: float) -> ParetoSolution:
    return ParetoSolution(
        t_fur_index=index,
        su_index=0,
        t_fur=values[4],
        su=values[3],
        q_air=100.0,
        feasible=True,
        q_st=50.0,
        v_cell=values[2],
        objectives=ObjectiveVector(
            ih_i=values[0], ih_t=values[1], v_cell=values[2], su=values[3], t_fur=values[4], i_tot=values[5]
        ),
    )


def test_vcell_solve_hits_target(analytic_model) -> None:
    solve = solve_vcell_for_su(675.0, 100.0, 0.5, analytic_model)

    assert solve.status == "ok"
    assert solve.v_cell == pytest.approx(0.95 + math.log(2.0) / 2.0, abs=1e-8)
    assert solve.sign_changes == 1


def test_vcell_solve_reports_infeasible_sides(analytic_model) -> None:
    assert solve_vcell_for_su(675.0, 20.0, 0.01, analytic_model).status == "infeasible_low"
    assert solve_vcell_for_su(675.0, 150.0, 0.95, analytic_model).status == "infeasible_high"
    assert solve_vcell_for_su(675.0, 150.0, 0.95, analytic_model).v_cell is None


def test_vcell_rises_with_utilisation_target(analytic_model) -> None:
    volts = [solve_vcell_for_su(675.0, 60.0, target, analytic_model).v_cell for target in (0.2, 0.35, 0.5, 0.65, 0.8)]

    assert all(later > earlier for earlier, later in zip(volts, volts[1:]))


@pytest.mark.parametrize("target", [0.0, 1.0, -0.2])
def test_vcell_solve_rejects_target_outside_unit_interval(analytic_model, target: float) -> None:
    with pytest.raises(DomainError):
        solve_vcell_for_su(675.0, 100.0, target, analytic_model)


def test_vcell_solve_takes_smallest_root_and_warns(caplog) -> None:
    class _Humped:
        def predict_array(self, inputs: np.ndarray) -> np.ndarray:
            inputs = np.atleast_2d(inputs)
            q_st, v_cell = inputs[:, 2], inputs[:, 3]
            su = 0.5 + 0.3 * np.sin(6.0 * (v_cell - 1.0))
            i_tot = su * q_st * 0.13146
            return np.column_stack([inputs[:, 0] + 1, inputs[:, 0], i_tot / 3, i_tot / 3, i_tot / 3])

    with caplog.at_level(logging.WARNING):
        solve = solve_vcell_for_su(675.0, 100.0, 0.65, _Humped())

    assert solve.status == "ok"
    assert solve.sign_changes == 2
    assert solve.v_cell == pytest.approx(1.0 + np.pi / 36.0, abs=1e-3)
    assert "not monotone" in caplog.text


def test_contour_scan_keeps_infeasible_nodes(analytic_model) -> None:
    nodes = contour_scan((600.0, 750.0), (40.0, 100.0), (0.5, 0.6), analytic_model)

    assert len(nodes) == 8
    statuses = {(node.t_fur, node.q_st, node.su): node.status for node in nodes}
    assert statuses[(750.0, 40.0, 0.5)] == "ok"
    assert statuses[(600.0, 100.0, 0.6)] == "infeasible_high"
    for node in nodes:
        if node.status == "ok":
            assert node.q_h2 == pytest.approx(node.su * node.q_st, rel=1e-6)
        else:
            assert node.v_cell is None


def test_objective_relationships_directions(analytic_model) -> None:
    nodes = contour_scan((600.0, 675.0, 750.0), (40.0, 60.0, 80.0, 100.0), (0.5, 0.6), analytic_model)
    table = {(row["driver"], row["response"]): row for row in objective_relationships(nodes)}

    assert len(table) == 6
    assert table[("t_fur", "v_cell")]["steps"] > 0
    assert table[("t_fur", "v_cell")]["direction"] == -1
    assert table[("t_fur", "v_cell")]["relation"] == "conflict"
    assert table[("t_fur", "ih_i")]["relation"] == "accord"
    assert table[("su", "v_cell")]["direction"] == 1
    assert table[("su", "v_cell")]["relation"] == "conflict"


def test_objective_relationships_without_steps() -> None:
    rows = objective_relationships([])

    assert all(row["relation"] == "undetermined" and row["steps"] == 0 for row in rows)


def test_constrained_solve_meets_both_targets(analytic_model) -> None:
    solution = solve_constrained(1, 2, 675.0, 0.7, 10.0, analytic_model)

    assert solution.feasible
    assert (solution.t_fur_index, solution.su_index) == (1, 2)
    assert solution.v_cell == pytest.approx(1.413, abs=2e-3)
    assert solution.q_st == pytest.approx(76.9, abs=0.3)
    assert solution.power_residual < 1e-6
    assert solution.su_residual < 1e-6
    assert solution.objectives.su == pytest.approx(0.7, abs=1e-6)
    assert solution.objectives.v_cell * solution.objectives.i_tot == pytest.approx(10.0, rel=1e-6)


def test_constrained_solve_flags_unreachable_power(analytic_model) -> None:
    solution = solve_constrained(0, 0, 675.0, 0.7, 100.0, analytic_model)

    assert not solution.feasible
    assert solution.objectives is None
    assert solution.power_residual > 0
    assert solution.message


def test_constrained_solve_rejects_non_positive_power(analytic_model) -> None:
    with pytest.raises(DomainError):
        solve_constrained(0, 0, 675.0, 0.7, 0.0, analytic_model)


def test_damped_newton_stays_inside_box(analytic_model) -> None:
    problem = NodeProblem(analytic_model, 675.0, 0.7, 100.0, 100.0)
    outcome = damped_newton(problem, np.array([1.0, 20.0]))

    assert not outcome.converged
    assert np.all(outcome.x >= problem.lower)
    assert np.all(outcome.x <= problem.upper)


def test_dominance_mask_flags_only_dominated_rows() -> None:
    rows = np.array(
        [
            [0.2, 1.0, 1.3, 0.8, 650.0, 7.0],
            [0.3, 1.0, 1.3, 0.8, 650.0, 7.0],
            [0.1, 2.0, 1.3, 0.8, 650.0, 7.0],
            [0.2, 1.0, 1.3, 0.8, 650.0, 7.0],
            [0.2, 1.0, 1.3, 0.7, 650.0, 7.0],
        ]
    )

    assert dominance_mask(rows).tolist() == [False, True, False, False, True]


def test_filter_dominated_is_idempotent() -> None:
    solutions = [
        _solution(0, 0.2, 1.0, 1.3, 0.8, 650.0, 7.0),
        _solution(1, 0.3, 1.0, 1.3, 0.8, 650.0, 7.0),
        _solution(2, 0.1, 2.0, 1.3, 0.8, 650.0, 7.0),
        ParetoSolution(t_fur_index=3, su_index=0, t_fur=750.0, su=0.8, q_air=100.0, feasible=False),
    ]
    first, removed = filter_dominated(solutions)
    second, _ = filter_dominated(first)

    assert removed == [(1, 0)]
    assert [item.dominated for item in first] == [False, True, False, False]
    assert [item.dominated for item in second] == [item.dominated for item in first]


def test_build_front_members_are_mutually_non_dominated(analytic_model) -> None:
    grid = GridSpec.linear(600.0, 750.0, 3, 0.5, 0.8, 3)
    front = build_front(10.0, grid, analytic_model)

    assert [len(row) for row in front.solutions] == [3, 3, 3]
    members = front.members()
    assert members
    matrix = np.array([member.objectives.as_tuple() for member in members])
    assert not dominance_mask(matrix).any()
    for member in members:
        assert member.v_cell * member.objectives.i_tot == pytest.approx(10.0, rel=1e-6)
    keys = [(member.su_index, member.t_fur_index) for member in members]
    assert keys == sorted(keys)
    assert {node.q_air for node in front.nodes()} == {Q_AIR_FIXED}


def test_build_front_raises_when_nothing_is_feasible(analytic_model) -> None:
    grid = GridSpec.linear(650.0, 700.0, 2, 0.6, 0.7, 2)

    with pytest.raises(EmptyFrontError):
        build_front(100.0, grid, analytic_model)


def test_sweep_power_skips_empty_fronts(analytic_model, caplog) -> None:
    grid = GridSpec.linear(650.0, 700.0, 2, 0.6, 0.7, 2)

    with caplog.at_level(logging.ERROR):
        fronts = sweep_power([10.0, 100.0], grid, analytic_model)

    assert [front.p_ele for front in fronts] == [10.0]
    assert "Front failed" in caplog.text


@pytest.mark.parametrize("powers", [[], [10.0, 8.0], [10.0, 10.0]])
def test_sweep_power_validates_power_list(analytic_model, powers: list[float]) -> None:
    grid = GridSpec.linear(650.0, 700.0, 2, 0.6, 0.7, 2)

    with pytest.raises(DomainError):
        sweep_power(powers, grid, analytic_model)
