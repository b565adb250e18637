"""Pareto fronts over the furnace-temperature × steam-utilisation grid and the power sweep."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from soec_opt.errors import DomainError, EmptyFrontError
from soec_opt.optimize.constrained import solve_constrained
from soec_opt.schemas.models import MAXIMIZED_OBJECTIVES, OBJECTIVE_NAMES, Q_AIR_FIXED, GridSpec, ParetoFront, ParetoSolution
from soec_opt.surrogate.mlp import ResponseModel
from soec_opt.utils.parallel import ordered_map

LOGGER = logging.getLogger(__name__)

DOMINANCE_TOL = 1e-9
_ORIENTATION = np.array([-1.0 if name in MAXIMIZED_OBJECTIVES else 1.0 for name in OBJECTIVE_NAMES])


def dominance_mask(objectives: np.ndarray, tol: float = DOMINANCE_TOL) -> np.ndarray:
    """``mask[j]`` is True when some other row is no worse everywhere and better somewhere.

    Rows are raw objective vectors in ``OBJECTIVE_NAMES`` order; su and i_tot are maximised.
    """

    costs = np.atleast_2d(objectives) * _ORIENTATION
    no_worse = np.all(costs[:, None, :] <= costs[None, :, :] + tol, axis=2)
    better = np.any(costs[:, None, :] < costs[None, :, :] - tol, axis=2)
    # dominates[i, j]: row i dominates row j
    dominates = no_worse & better
    np.fill_diagonal(dominates, False)
    return dominates.any(axis=0)


def filter_dominated(solutions: list[ParetoSolution]) -> tuple[list[ParetoSolution], list[tuple[int, int]]]:
    """Flag dominated feasible solutions; infeasible ones pass through untouched."""

    feasible = [index for index, solution in enumerate(solutions) if solution.feasible and solution.objectives]
    if not feasible:
        return list(solutions), []
    matrix = np.array([solutions[index].objectives.as_tuple() for index in feasible])
    mask = dominance_mask(matrix)
    result = list(solutions)
    removed: list[tuple[int, int]] = []
    for index, dominated in zip(feasible, mask):
        if dominated:
            result[index] = solutions[index].model_copy(update={"dominated": True})
            removed.append((solutions[index].t_fur_index, solutions[index].su_index))
    return result, removed


@dataclass(frozen=True)
class _NodeTask:
    t_fur_index: int
    su_index: int
    t_fur: float
    su: float
    p_ele: float
    model: ResponseModel
    q_air: float


def _solve_node(task: _NodeTask) -> ParetoSolution:
    return solve_constrained(task.t_fur_index, task.su_index, task.t_fur, task.su, task.p_ele, task.model, q_air=task.q_air)


def build_front(
    p_ele: float,
    grid: GridSpec,
    model: ResponseModel,
    q_air: float = Q_AIR_FIXED,
    workers: int = 1,
) -> ParetoFront:
    """Constrained solve at every grid node, then strict-dominance filtering of the feasible nodes."""

    tasks = [
        _NodeTask(i, j, t_fur, su, p_ele, model, q_air)
        for i, t_fur in enumerate(grid.t_fur_levels)
        for j, su in enumerate(grid.su_levels)
    ]
    flat = ordered_map(_solve_node, tasks, workers=workers)
    if not any(solution.feasible for solution in flat):
        raise EmptyFrontError(f"No feasible grid node at {p_ele} W", p_ele=p_ele, nodes=len(flat))
    flat, removed = filter_dominated(flat)
    if removed:
        LOGGER.info("Dominated nodes removed from front", extra={"p_ele": p_ele, "count": len(removed)})
    n_su = len(grid.su_levels)
    rows = [flat[start : start + n_su] for start in range(0, len(flat), n_su)]
    front = ParetoFront(p_ele=p_ele, grid=grid, solutions=rows, dominated_log=removed)
    LOGGER.info(
        "Front built",
        extra={"p_ele": p_ele, "nodes": len(flat), "feasible": sum(node.feasible for node in flat), "members": len(front.members())},
    )
    return front


def sweep_power(
    powers: Sequence[float],
    grid: GridSpec,
    model: ResponseModel,
    q_air: float = Q_AIR_FIXED,
    workers: int = 1,
) -> list[ParetoFront]:
    """One front per power; powers whose grid is entirely infeasible are logged and skipped."""

    if not powers:
        raise DomainError("Power list must not be empty")
    if any(later <= earlier for earlier, later in zip(powers, powers[1:])):
        raise DomainError("Power list must be strictly ascending", powers=list(powers))
    fronts: list[ParetoFront] = []
    for p_ele in powers:
        try:
            fronts.append(build_front(p_ele, grid, model, q_air=q_air, workers=workers))
        except EmptyFrontError as error:
            LOGGER.error("Front failed", extra={"p_ele": p_ele, "code": error.code, "error": error.message})
    return fronts
