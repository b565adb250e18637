"""LINMAP ranking of Pareto members and optimal operating curves across powers."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence

import numpy as np
import pandas as pd

from soec_opt.errors import EmptyFrontError
from soec_opt.schemas.models import (
    MAXIMIZED_OBJECTIVES,
    OBJECTIVE_NAMES,
    LinmapChoice,
    OperatingCurve,
    ParetoFront,
    WeightVector,
)

LOGGER = logging.getLogger(__name__)

DEGENERATE_VALUE = 0.5
_IDEAL = np.array([1.0 if name in MAXIMIZED_OBJECTIVES else 0.0 for name in OBJECTIVE_NAMES])


def objective_matrix(front: ParetoFront) -> np.ndarray:
    members = front.members()
    if not members:
        raise EmptyFrontError(f"Front at {front.p_ele} W has no feasible members", p_ele=front.p_ele)
    return np.array([member.objectives.as_tuple() for member in members], dtype=float)


def normalize_columns(matrix: np.ndarray, p_ele: float | None = None) -> np.ndarray:
    """Min-max scale each column to [0, 1]; a constant column becomes 0.5."""

    low, high = matrix.min(axis=0), matrix.max(axis=0)
    span = high - low
    degenerate = span <= 0
    if degenerate.any():
        LOGGER.warning(
            "Degenerate objective column in LINMAP normalisation",
            extra={"p_ele": p_ele, "objectives": [name for name, flag in zip(OBJECTIVE_NAMES, degenerate) if flag]},
        )
    scaled = (matrix - low) / np.where(degenerate, 1.0, span)
    scaled[:, degenerate] = DEGENERATE_VALUE
    return scaled


def linmap_normalize(front: ParetoFront) -> np.ndarray:
    """Normalised objectives of the front's members, rows in tie-break order."""

    return normalize_columns(objective_matrix(front), front.p_ele)


def weighted_distances(normalized: np.ndarray, weights: WeightVector) -> np.ndarray:
    """``sqrt(sum_i w_i (f_norm - f_ideal)^2)`` per row."""

    w = np.asarray(weights.as_tuple(), dtype=float)
    return np.sqrt(((normalized - _IDEAL) ** 2 * w).sum(axis=1))


def extremes(matrix: np.ndarray) -> tuple[dict[str, float], dict[str, float]]:
    """Best and worst value of each objective over the rows, honouring its orientation."""

    best, worst = {}, {}
    for column, name in enumerate(OBJECTIVE_NAMES):
        low, high = float(matrix[:, column].min()), float(matrix[:, column].max())
        best[name], worst[name] = (high, low) if name in MAXIMIZED_OBJECTIVES else (low, high)
    return best, worst


def relative_distances(
    value: Mapping[str, float],
    best: Mapping[str, float],
    worst: Mapping[str, float],
) -> tuple[dict[str, float], dict[str, float]]:
    """Fractions of the best-to-worst span separating ``value`` from the best and from the worst."""

    to_best: dict[str, float] = {}
    to_worst: dict[str, float] = {}
    for name in OBJECTIVE_NAMES:
        span = abs(worst[name] - best[name])
        to_best[name] = abs(value[name] - best[name]) / span if span > 0 else 0.0
        to_worst[name] = abs(worst[name] - value[name]) / span if span > 0 else 0.0
    return to_best, to_worst


def linmap_select(front: ParetoFront, weights: WeightVector) -> LinmapChoice:
    """Member closest to the ideal point; ties go to the lowest su index, then the lowest t_fur index."""

    members = front.members()
    matrix = objective_matrix(front)
    distances = weighted_distances(normalize_columns(matrix, front.p_ele), weights)
    chosen = int(np.argmin(distances))
    best, worst = extremes(matrix)
    value = dict(zip(OBJECTIVE_NAMES, matrix[chosen]))
    to_best, to_worst = relative_distances(value, best, worst)
    LOGGER.info(
        "LINMAP choice",
        extra={
            "p_ele": front.p_ele,
            "t_fur": members[chosen].t_fur,
            "su": members[chosen].su,
            "distance": float(distances[chosen]),
            "members": len(members),
        },
    )
    return LinmapChoice(
        p_ele=front.p_ele,
        solution=members[chosen],
        distance=float(distances[chosen]),
        distances=[float(d) for d in distances],
        best=best,
        worst=worst,
        rel_to_best=to_best,
        rel_to_worst=to_worst,
    )


def operating_curve(fronts: Sequence[ParetoFront], weights: WeightVector) -> OperatingCurve:
    curve = OperatingCurve(weights=weights)
    for front in fronts:
        try:
            curve.points.append(linmap_select(front, weights))
        except EmptyFrontError:
            LOGGER.warning("Skipping empty front", extra={"p_ele": front.p_ele})
    return curve


def decision_table(choice: LinmapChoice) -> pd.DataFrame:
    """Best, worst and chosen values with relative distances, one column per objective."""

    value = choice.solution.objectives.model_dump()
    rows = {
        "best": choice.best,
        "worst": choice.worst,
        "decision": value,
        "rel_to_best": choice.rel_to_best,
        "rel_to_worst": choice.rel_to_worst,
    }
    frame = pd.DataFrame.from_dict(rows, orient="index", columns=list(OBJECTIVE_NAMES))
    frame.index.name = "row"
    return frame
