"""Steady-state three-segment cell simulator.

Steam flows up → mid → down along the fuel side. Each segment is isothermal and carries its own
current; the segments share the cell voltage and exchange heat with the furnace, the air stream and
their neighbours. Currents are solved segment by segment with their own steam consumption, and the
segment temperatures by a damped fixed point on the linear heat balance.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from soec_opt.core.units import celsius_to_kelvin, kelvin_to_celsius, sccm_to_mol_per_s
from soec_opt.errors import ConvergenceError, DomainError, SoecError, StarvationError
from soec_opt.physics.electrochem import Polarization, limiting_current_density, nernst_potential, polarization_voltage
from soec_opt.schemas.models import (
    CONSTANTS,
    SEGMENTS,
    CellParameters,
    CellResponse,
    CellSolution,
    CompositionClosure,
    IvPoint,
    OperatingPoint,
    PhysicalConstants,
    SegmentName,
    SegmentState,
)

LOGGER = logging.getLogger(__name__)

DOMAIN_MARGIN = 0.1
_MARGIN = 1e-12

# Neighbour pairs along the flow direction.
_ADJACENCY = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True, slots=True)
class CathodeFeed:
    """Fuel-side inlet: steam plus hydrogen carrier, total molar flow conserved along the cell."""

    n_steam: float
    n_total: float
    full_current: float

    @property
    def x_in(self) -> float:
        return self.n_steam / self.n_total


@dataclass(frozen=True, slots=True)
class _SegmentSolve:
    current: float
    x_in: float
    x_out: float
    polarization: Polarization


def cathode_feed(op: OperatingPoint, params: CellParameters, constants: PhysicalConstants = CONSTANTS) -> CathodeFeed:
    return _feed_for_flow(op.q_st, params, constants)


def _feed_for_flow(q_st: float, params: CellParameters, constants: PhysicalConstants) -> CathodeFeed:
    n_steam = sccm_to_mol_per_s(q_st, constants)
    if n_steam <= 0:
        raise DomainError("Steam flow must be positive", q_st=q_st)
    n_total = n_steam * (1.0 + params.h2_carrier_ratio)
    return CathodeFeed(n_steam=n_steam, n_total=n_total, full_current=2.0 * constants.faraday * n_total)


def utilisation_ceiling(q_st: float, params: CellParameters, constants: PhysicalConstants = CONSTANTS) -> float:
    """Largest steam utilisation the diffusion limit admits at steam flow ``q_st``, at any voltage.

    With ``k = j_lim·A / (2F·n_total)`` a diffusion-capped segment passes at most a fraction
    ``(1 - k/2)/(1 + k/2)`` (arithmetic closure) or ``exp(-k)`` (log-mean) of its inlet steam on.
    For ``k >= 2`` the arithmetic cap lies beyond depletion and the ceiling is 1; such flows can starve.
    """

    k = params.j_lim_h2o * params.seg_area / _feed_for_flow(q_st, params, constants).full_current
    if params.closure == "log-mean":
        passed = math.exp(-k)
    else:
        passed = max(0.0, (1.0 - k / 2.0) / (1.0 + k / 2.0))
    return 1.0 - passed ** len(SEGMENTS)


def mean_fraction(x_in: float, x_out: float, closure: CompositionClosure) -> float:
    """Representative steam fraction of a segment from its inlet and outlet."""

    if closure == "log-mean" and x_in - x_out > _MARGIN * x_in:
        return (x_in - x_out) / math.log(x_in / x_out)
    return 0.5 * (x_in + x_out)


def open_circuit_voltage(op: OperatingPoint, params: CellParameters, constants: PhysicalConstants = CONSTANTS) -> float:
    """Reversible voltage at the inlet composition and furnace temperature."""

    x_in = cathode_feed(op, params, constants).x_in
    return nernst_potential(
        celsius_to_kelvin(op.t_fur), x_in, 1.0 - x_in, params.x_o2, params.p_anode, params.e_ref_0, constants
    )


def _solve_segment(
    name: SegmentName,
    v_cell: float,
    t: float,
    x_in: float,
    feed: CathodeFeed,
    params: CellParameters,
    constants: PhysicalConstants,
) -> _SegmentSolve:
    def x_out(current: float) -> float:
        return x_in - current / feed.full_current

    def x_mean(current: float) -> float:
        return mean_fraction(x_in, x_out(current), params.closure)

    def polarization(current: float) -> Polarization:
        xm = x_mean(current)
        return polarization_voltage(current, t, xm, 1.0 - xm, params, constants)

    def residual(current: float) -> float:
        return polarization(current).total - v_cell

    if residual(0.0) >= 0:
        return _SegmentSolve(current=0.0, x_in=x_in, x_out=x_in, polarization=polarization(0.0))

    i_depleted = x_in * feed.full_current * (1.0 - _MARGIN)

    def diffusion_excess(current: float) -> float:
        return current - limiting_current_density(x_mean(current), params) * params.seg_area

    capped = diffusion_excess(i_depleted) >= 0
    if capped:
        i_cap = brentq(diffusion_excess, 0.0, i_depleted, xtol=1e-15, rtol=1e-15, maxiter=200)
        upper = i_cap * (1.0 - _MARGIN)
    else:
        upper = i_depleted

    try:
        at_upper = residual(upper)
    except DomainError:
        upper *= 1.0 - 1e-9
        at_upper = residual(upper)
    if at_upper < 0:
        if not capped:
            raise StarvationError(
                f"Steam fully depleted in the {name} segment",
                segment=name,
                v_cell=v_cell,
                x_h2o_in=x_in,
                temperature_k=t,
            )
        raise ConvergenceError(
            "Segment current not bracketed below the diffusion limit",
            segment=name,
            v_cell=v_cell,
            residual_at_limit=at_upper,
        )
    current = float(brentq(residual, 0.0, upper, xtol=1e-13, rtol=1e-13, maxiter=200))
    return _SegmentSolve(current=current, x_in=x_in, x_out=x_out(current), polarization=polarization(current))


def _sweep_segments(
    v_cell: float,
    temperatures: np.ndarray,
    feed: CathodeFeed,
    params: CellParameters,
    constants: PhysicalConstants,
) -> list[_SegmentSolve]:
    solved: list[_SegmentSolve] = []
    x_in = feed.x_in
    for index, name in enumerate(SEGMENTS):
        segment = _solve_segment(name, v_cell, float(temperatures[index]), x_in, feed, params, constants)
        solved.append(segment)
        x_in = segment.x_out
    return solved


def _heat_terms(solved: Sequence[_SegmentSolve], params: CellParameters, constants: PhysicalConstants) -> tuple[np.ndarray, np.ndarray]:
    """Heat of each segment as ``a - b·T``: irreversible losses minus reversible absorption."""

    losses = np.array([segment.current * segment.polarization.irreversible for segment in solved])
    absorption = np.array([segment.current * params.delta_s_r / (2.0 * constants.faraday) for segment in solved])
    return losses, absorption


def _conductance(op: OperatingPoint, params: CellParameters) -> float:
    return params.h_fur * params.seg_area + params.h_air * op.q_air


def thermal_residuals(
    temperatures: Sequence[float],
    heat: Sequence[float],
    op: OperatingPoint,
    params: CellParameters,
) -> np.ndarray:
    """Steady heat-balance residual of every segment in W (zero at a converged state)."""

    t = np.asarray(temperatures, dtype=float)
    t_fur = celsius_to_kelvin(op.t_fur)
    conduction = params.k_axial * (_ADJACENCY @ t - _ADJACENCY.sum(axis=1) * t)
    return np.asarray(heat, dtype=float) + conduction - _conductance(op, params) * (t - t_fur)


def simulate_cell_detailed(
    op: OperatingPoint,
    params: CellParameters,
    initial_temperatures: Sequence[float] | None = None,
    constants: PhysicalConstants = CONSTANTS,
    check_domain: bool = True,
) -> CellSolution:
    """Solve the coupled segment currents and temperatures at one operating point.

    ``initial_temperatures`` (kelvin) warm-starts the fixed point, e.g. from a neighbouring voltage.
    ``check_domain=False`` admits validation scenarios outside the sampling box.
    """

    if check_domain and not op.in_domain(DOMAIN_MARGIN):
        raise DomainError("Operating point outside the simulator validity box", **op.model_dump())
    feed = cathode_feed(op, params, constants)
    t_fur = celsius_to_kelvin(op.t_fur)
    solver = params.solver
    conductance = _conductance(op, params)
    degree = _ADJACENCY.sum(axis=1)

    temperatures = np.full(3, t_fur) if initial_temperatures is None else np.asarray(initial_temperatures, dtype=float)
    currents = np.full(3, np.nan)
    current_change = temperature_change = math.inf
    for iteration in range(1, solver.max_outer_iterations + 1):
        solved = _sweep_segments(op.v_cell, temperatures, feed, params, constants)
        new_currents = np.array([segment.current for segment in solved])
        losses, absorption = _heat_terms(solved, params, constants)

        matrix = np.diag(conductance + absorption + params.k_axial * degree) - params.k_axial * _ADJACENCY
        target = np.linalg.solve(matrix, losses + conductance * t_fur)

        current_change = float(np.max(np.abs(new_currents - currents))) if iteration > 1 else math.inf
        temperature_change = float(np.max(np.abs(target - temperatures)))
        currents = new_currents
        if current_change < solver.current_tol and temperature_change < solver.temperature_tol:
            return _assemble(op, solved, target, losses - absorption * target, feed, iteration)
        temperatures = temperatures + solver.temperature_damping * (target - temperatures)

    raise ConvergenceError(
        f"Cell fixed point did not converge after {solver.max_outer_iterations} iterations",
        iterations=solver.max_outer_iterations,
        current_change=current_change,
        temperature_change=temperature_change,
        **op.model_dump(),
    )


def _assemble(
    op: OperatingPoint,
    solved: Sequence[_SegmentSolve],
    temperatures: np.ndarray,
    heat: np.ndarray,
    feed: CathodeFeed,
    iterations: int,
) -> CellSolution:
    states = tuple(
        SegmentState(
            index=name,
            temperature=float(temperatures[index]),
            x_h2o_in=segment.x_in,
            x_h2o_out=segment.x_out,
            current=segment.current,
            eta_act_a=segment.polarization.eta_act_a,
            eta_act_c=segment.polarization.eta_act_c,
            eta_conc=segment.polarization.eta_conc,
            v_ohm=segment.polarization.v_ohm,
            e_ref=segment.polarization.e_ref,
            q_heat=float(heat[index]),
        )
        for index, (name, segment) in enumerate(zip(SEGMENTS, solved))
    )
    temps_c = [kelvin_to_celsius(float(value)) for value in temperatures]
    response = CellResponse(
        t_max=max(temps_c),
        t_min=min(temps_c),
        i_up=states[0].current,
        i_mid=states[1].current,
        i_down=states[2].current,
        extrapolated=not op.in_domain(),
    )
    LOGGER.debug("Cell converged", extra={"iterations": iterations, "i_tot": response.i_tot, "v_cell": op.v_cell})
    return CellSolution(
        response=response,
        segments=states,
        steam_in=feed.n_steam,
        steam_out=feed.n_total * solved[-1].x_out,
        iterations=iterations,
    )


def simulate_cell(op: OperatingPoint, params: CellParameters) -> CellResponse:
    """Temperatures and segment currents of the converged cell."""

    return simulate_cell_detailed(op, params).response


def iv_sweep(
    op_base: OperatingPoint,
    v_grid: Sequence[float],
    params: CellParameters,
    check_domain: bool = True,
) -> list[IvPoint]:
    """Simulate ``op_base`` at every voltage, warm-starting from the previous converged point.

    Failed voltages are kept with their error message.
    """

    if any(later < earlier for earlier, later in zip(v_grid, v_grid[1:])):
        raise DomainError("Voltage grid must be sorted ascending", v_grid=list(v_grid))
    points: list[IvPoint] = []
    warm: list[float] | None = None
    for v_cell in v_grid:
        op = op_base.model_copy(update={"v_cell": float(v_cell)})
        try:
            solution = simulate_cell_detailed(op, params, initial_temperatures=warm, check_domain=check_domain)
        except SoecError as error:
            LOGGER.warning("IV point failed", extra={"v_cell": v_cell, "code": error.code, "error": str(error)})
            points.append(IvPoint(v_cell=float(v_cell), error=str(error)))
            continue
        warm = [segment.temperature for segment in solution.segments]
        points.append(IvPoint(v_cell=float(v_cell), solution=solution))
    return points


def temperature_rise(solution: CellSolution, reference: CellSolution) -> tuple[float, float, float]:
    """Per-segment temperature change against a reference state such as open circuit."""

    rise = [state.temperature - base.temperature for state, base in zip(solution.segments, reference.segments)]
    return (rise[0], rise[1], rise[2])
