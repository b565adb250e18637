"""Constrained solve at one grid node: hit a power and a steam utilisation with (V_cell, Q_st)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from soec_opt.core.indices import indices_array
from soec_opt.errors import DomainError
from soec_opt.schemas.models import INPUT_DOMAIN, Q_AIR_FIXED, ObjectiveVector, ParetoSolution
from soec_opt.surrogate.mlp import ResponseModel

LOGGER = logging.getLogger(__name__)

MAX_NEWTON_ITERATIONS = 100
RESIDUAL_TOL = 1e-9
FD_FRACTION = 1e-4
MIN_DAMPING = 1.0 / 2**20


@dataclass(frozen=True)
class NewtonOutcome:
    x: np.ndarray
    residual: np.ndarray
    iterations: int
    converged: bool
    reason: str


class NodeProblem:
    """Scaled residuals ``(v·I_tot/p − 1, SU − su)`` over the (V_cell, Q_st) box."""

    def __init__(
        self,
        model: ResponseModel,
        t_fur: float,
        su_target: float,
        p_ele: float,
        q_air: float,
        v_bounds: tuple[float, float] = INPUT_DOMAIN["v_cell"],
        q_st_bounds: tuple[float, float] = INPUT_DOMAIN["q_st"],
    ) -> None:
        self.model = model
        self.t_fur = t_fur
        self.su_target = su_target
        self.p_ele = p_ele
        self.q_air = q_air
        self.lower = np.array([v_bounds[0], q_st_bounds[0]], dtype=float)
        self.upper = np.array([v_bounds[1], q_st_bounds[1]], dtype=float)

    def indices(self, points: np.ndarray) -> dict[str, np.ndarray]:
        points = np.atleast_2d(points)
        inputs = np.column_stack(
            [
                np.full(len(points), self.t_fur),
                np.full(len(points), self.q_air),
                points[:, 1],
                points[:, 0],
            ]
        )
        return indices_array(inputs, self.model.predict_array(inputs))

    def residuals(self, points: np.ndarray) -> np.ndarray:
        indices = self.indices(points)
        return np.column_stack([indices["p_ele"] / self.p_ele - 1.0, indices["su"] - self.su_target])

    def jacobian(self, x: np.ndarray, f_x: np.ndarray) -> np.ndarray:
        """Forward differences, stepping backward at an upper bound."""

        steps = FD_FRACTION * (self.upper - self.lower)
        steps = np.where(x + steps > self.upper, -steps, steps)
        shifted = np.repeat(x[None, :], 2, axis=0) + np.diag(steps)
        return ((self.residuals(shifted) - f_x[None, :]) / steps[:, None]).T

    def starts(self) -> list[np.ndarray]:
        """The four box corners, then the centre."""

        corners = [
            np.array([v, q]) for v in (self.lower[0], self.upper[0]) for q in (self.lower[1], self.upper[1])
        ]
        return [*corners, (self.lower + self.upper) / 2.0]


def damped_newton(problem: NodeProblem, x0: np.ndarray, max_iterations: int = MAX_NEWTON_ITERATIONS) -> NewtonOutcome:
    """Newton iterations clipped to the box; each step is halved until the residual norm falls."""

    x = np.clip(np.asarray(x0, dtype=float), problem.lower, problem.upper)
    f_x = problem.residuals(x)[0]
    for iteration in range(1, max_iterations + 1):
        if np.max(np.abs(f_x)) <= RESIDUAL_TOL:
            return NewtonOutcome(x, f_x, iteration - 1, True, "converged")
        jac = problem.jacobian(x, f_x)
        try:
            step = np.linalg.solve(jac, -f_x)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -f_x, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return NewtonOutcome(x, f_x, iteration, False, "singular jacobian")
        norm = float(np.linalg.norm(f_x))
        damping = 1.0
        while damping >= MIN_DAMPING:
            candidate = np.clip(x + damping * step, problem.lower, problem.upper)
            f_candidate = problem.residuals(candidate)[0]
            if np.all(np.isfinite(f_candidate)) and float(np.linalg.norm(f_candidate)) < norm:
                x, f_x = candidate, f_candidate
                break
            damping /= 2.0
        else:
            return NewtonOutcome(x, f_x, iteration, False, "no descent")
    converged = bool(np.max(np.abs(f_x)) <= RESIDUAL_TOL)
    return NewtonOutcome(x, f_x, max_iterations, converged, "converged" if converged else "max iterations")


def solve_constrained(
    t_fur_index: int,
    su_index: int,
    t_fur: float,
    su: float,
    p_ele: float,
    model: ResponseModel,
    q_air: float = Q_AIR_FIXED,
) -> ParetoSolution:
    """Operating point at furnace temperature ``t_fur`` that delivers ``p_ele`` at utilisation ``su``.

    Returns an infeasible solution carrying the best residual when no start converges in the box.
    """

    if p_ele <= 0:
        raise DomainError("Electrolysis power must be positive", p_ele=p_ele)
    problem = NodeProblem(model, t_fur, su, p_ele, q_air)
    best: NewtonOutcome | None = None
    for start in problem.starts():
        outcome = damped_newton(problem, start)
        if outcome.converged:
            best = outcome
            break
        if best is None or np.linalg.norm(outcome.residual) < np.linalg.norm(best.residual):
            best = outcome

    assert best is not None
    if not best.converged:
        LOGGER.debug(
            "Grid node infeasible",
            extra={"t_fur": t_fur, "su": su, "p_ele": p_ele, "residual": best.residual.tolist(), "reason": best.reason},
        )
        return ParetoSolution(
            t_fur_index=t_fur_index,
            su_index=su_index,
            t_fur=t_fur,
            su=su,
            q_air=q_air,
            feasible=False,
            power_residual=float(abs(best.residual[0])),
            su_residual=float(abs(best.residual[1])),
            message=f"{best.reason}; best residual {np.linalg.norm(best.residual):.3e} at v={best.x[0]:.4f}, q_st={best.x[1]:.2f}",
        )

    v_cell, q_st = (float(value) for value in best.x)
    indices = problem.indices(best.x)
    objectives = ObjectiveVector(
        ih_i=float(indices["ih_i"][0]),
        ih_t=float(indices["ih_t"][0]),
        v_cell=v_cell,
        su=float(indices["su"][0]),
        t_fur=t_fur,
        i_tot=float(indices["i_tot"][0]),
    )
    return ParetoSolution(
        t_fur_index=t_fur_index,
        su_index=su_index,
        t_fur=t_fur,
        su=su,
        q_air=q_air,
        feasible=True,
        q_st=q_st,
        v_cell=v_cell,
        objectives=objectives,
        power_residual=abs(v_cell * objectives.i_tot - p_ele) / p_ele,
        su_residual=abs(objectives.su - su),
        message=f"converged in {best.iterations} iterations",
    )
