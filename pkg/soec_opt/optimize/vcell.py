"""Cell-voltage solves at fixed steam utilisation and the contour dataset built from them."""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Sequence

import numpy as np
from scipy.optimize import brentq

from soec_opt.core.indices import indices_array
from soec_opt.errors import DomainError
from soec_opt.schemas.models import INPUT_DOMAIN, Q_AIR_FIXED, ContourNode, VCellSolve
from soec_opt.surrogate.mlp import ResponseModel

LOGGER = logging.getLogger(__name__)
SCAN_POINTS = 57
ROOT_XTOL = 1e-10

# (response, preferred direction) for the relationship table; -1 means lower is better.
RESPONSES = (("v_cell", -1), ("ih_t", -1), ("ih_i", -1))
DRIVERS = (("t_fur", -1), ("su", +1))


def _indices_at(model: ResponseModel, t_fur: float, q_air: float, q_st: float, v_cell: np.ndarray) -> dict[str, np.ndarray]:
    v_cell = np.atleast_1d(np.asarray(v_cell, dtype=float))
    inputs = np.column_stack(
        [np.full_like(v_cell, t_fur), np.full_like(v_cell, q_air), np.full_like(v_cell, q_st), v_cell]
    )
    return indices_array(inputs, model.predict_array(inputs))


def solve_vcell_for_su(
    t_fur: float,
    q_st: float,
    su_target: float,
    model: ResponseModel,
    q_air: float = Q_AIR_FIXED,
    v_bounds: tuple[float, float] = INPUT_DOMAIN["v_cell"],
    scan_points: int = SCAN_POINTS,
) -> VCellSolve:
    """Find the cell voltage at which the predicted steam utilisation equals ``su_target``.

    The voltage interval is scanned first; the root is refined by Brent's method on the first
    bracketing sub-interval, so a non-monotone response yields its smallest root.
    """

    if not 0.0 < su_target < 1.0:
        raise DomainError("Steam utilisation target must lie in (0, 1)", su_target=su_target)
    grid = np.linspace(v_bounds[0], v_bounds[1], scan_points)
    gap = _indices_at(model, t_fur, q_air, q_st, grid)["su"] - su_target
    if np.all(gap > 0):
        return VCellSolve(v_cell=None, status="infeasible_low")
    if np.all(gap < 0):
        return VCellSolve(v_cell=None, status="infeasible_high")

    crossings = np.flatnonzero(np.sign(gap[:-1]) != np.sign(gap[1:]))
    exact = np.flatnonzero(gap == 0)
    candidates = sorted({*crossings.tolist(), *exact.tolist()})
    if len(candidates) > 1:
        LOGGER.warning(
            "Steam utilisation is not monotone in cell voltage",
            extra={"t_fur": t_fur, "q_st": q_st, "su_target": su_target, "sign_changes": len(candidates)},
        )
    first = candidates[0]
    if gap[first] == 0:
        root = float(grid[first])
    else:
        root = float(
            brentq(
                lambda v: float(_indices_at(model, t_fur, q_air, q_st, v)["su"][0] - su_target),
                grid[first],
                grid[first + 1],
                xtol=ROOT_XTOL,
            )
        )
    return VCellSolve(v_cell=root, status="ok", sign_changes=len(candidates))


def contour_scan(
    t_fur_levels: Sequence[float],
    q_st_levels: Sequence[float],
    su_levels: Sequence[float],
    model: ResponseModel,
    q_air: float = Q_AIR_FIXED,
) -> list[ContourNode]:
    """Solve V_cell at every (t_fur, q_st, su) node; infeasible nodes are kept and flagged."""

    nodes: list[ContourNode] = []
    for t_fur in t_fur_levels:
        for q_st in q_st_levels:
            for su in su_levels:
                solve = solve_vcell_for_su(t_fur, q_st, su, model, q_air=q_air)
                if solve.v_cell is None:
                    nodes.append(ContourNode(t_fur=t_fur, q_st=q_st, su=su, status=solve.status))
                    continue
                indices = _indices_at(model, t_fur, q_air, q_st, solve.v_cell)
                nodes.append(
                    ContourNode(
                        t_fur=t_fur,
                        q_st=q_st,
                        su=su,
                        status="ok",
                        v_cell=solve.v_cell,
                        ih_t=float(indices["ih_t"][0]),
                        ih_i=float(indices["ih_i"][0]),
                        q_h2=float(indices["q_h2"][0]),
                    )
                )
    feasible = sum(node.status == "ok" for node in nodes)
    LOGGER.info("Contour scan finished", extra={"nodes": len(nodes), "feasible": feasible})
    return nodes


def _furnace_steps(nodes: list[ContourNode]) -> dict[str, list[float]]:
    """Response changes along t_fur with q_st and su (hence q_h2) held."""

    groups: dict[tuple[float, float], list[ContourNode]] = defaultdict(list)
    for node in nodes:
        groups[(node.q_st, node.su)].append(node)
    steps: dict[str, list[float]] = defaultdict(list)
    for group in groups.values():
        ordered = sorted(group, key=lambda node: node.t_fur)
        for low, high in zip(ordered, ordered[1:]):
            for name, _ in RESPONSES:
                steps[name].append(getattr(high, name) - getattr(low, name))
    return steps


def _utilisation_steps(nodes: list[ContourNode]) -> dict[str, list[float]]:
    """Response changes along su with t_fur and q_h2 held, interpolating the next su row in q_st."""

    rows: dict[tuple[float, float], list[ContourNode]] = defaultdict(list)
    for node in nodes:
        rows[(node.t_fur, node.su)].append(node)
    steps: dict[str, list[float]] = defaultdict(list)
    for t_fur in sorted({node.t_fur for node in nodes}):
        levels = sorted(su for temp, su in rows if temp == t_fur)
        for su_low, su_high in zip(levels, levels[1:]):
            upper = sorted(rows[(t_fur, su_high)], key=lambda node: node.q_st)
            if len(upper) < 2:
                continue
            q_axis = np.array([node.q_st for node in upper])
            for node in rows[(t_fur, su_low)]:
                q_st_high = node.q_st * su_low / su_high
                if not q_axis[0] <= q_st_high <= q_axis[-1]:
                    continue
                for name, _ in RESPONSES:
                    values = np.array([getattr(item, name) for item in upper])
                    steps[name].append(float(np.interp(q_st_high, q_axis, values)) - getattr(node, name))
    return steps


def objective_relationships(nodes: list[ContourNode]) -> list[dict[str, object]]:
    """Classify how each response moves when t_fur or su is raised at constant hydrogen output.

    ``relation`` is ``accord`` when improving the driver also improves the response (both
    objectives pull the same way) and ``conflict`` otherwise; ``undetermined`` when no
    paired steps exist.
    """

    feasible = [node for node in nodes if node.status == "ok"]
    table: list[dict[str, object]] = []
    for (driver, driver_pref), steps in zip(DRIVERS, (_furnace_steps(feasible), _utilisation_steps(feasible))):
        for name, response_pref in RESPONSES:
            changes = np.asarray(steps.get(name, []), dtype=float)
            rising = int(np.sum(changes > 0))
            falling = int(np.sum(changes < 0))
            if rising == falling:
                direction, relation = 0, "undetermined"
            else:
                direction = 1 if rising > falling else -1
                relation = "accord" if direction * driver_pref == response_pref else "conflict"
            table.append(
                {
                    "driver": driver,
                    "response": name,
                    "steps": int(changes.size),
                    "increasing": rising,
                    "decreasing": falling,
                    "direction": direction,
                    "relation": relation,
                }
            )
    return table
