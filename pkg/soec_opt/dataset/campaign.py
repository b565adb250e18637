"""Random sampling campaigns on the reduced-order simulator."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from soec_opt.config.settings import InputRanges
from soec_opt.errors import CampaignAbortedError, ConvergenceError, DomainError, StarvationError
from soec_opt.physics.cell import simulate_cell
from soec_opt.schemas.models import CellParameters, CellResponse, Dataset, OperatingPoint, SamplePoint
from soec_opt.utils.parallel import ordered_map

LOGGER = logging.getLogger(__name__)

REFERENCE_CAMPAIGN_SIZE = 1764
REFERENCE_TRAIN_SIZE = 1500
MAX_REDRAW_RATE = 0.2


def default_train_count(n: int) -> int:
    """Train-split size that keeps the 1500/1764 proportion."""

    return int(round(n * REFERENCE_TRAIN_SIZE / REFERENCE_CAMPAIGN_SIZE))


def split_indices(n: int, seed: int, train_count: int | None = None) -> tuple[list[int], list[int]]:
    """Sorted train and test indices, a pure function of ``(seed, n, train_count)``."""

    count = default_train_count(n) if train_count is None else train_count
    if not 0 <= count <= n:
        raise DomainError(f"Train count {count} outside [0, {n}]", train_count=count, n=n)
    order = np.random.default_rng(seed).permutation(n)
    return sorted(int(index) for index in order[:count]), sorted(int(index) for index in order[count:])


def build_dataset(points: Sequence[SamplePoint], seed: int, train_count: int | None = None) -> Dataset:
    train_idx, test_idx = split_indices(len(points), seed, train_count)
    return Dataset(points=list(points), seed=seed, train_idx=train_idx, test_idx=test_idx)


def draw_inputs(rng: np.random.Generator, count: int, ranges: InputRanges) -> np.ndarray:
    """Independent uniform draws per input dimension, shape ``(count, 4)``."""

    bounds = np.array(ranges.as_rows())
    return rng.uniform(bounds[:, 0], bounds[:, 1], size=(count, len(bounds)))


def _evaluate(task: tuple[OperatingPoint, CellParameters]) -> CellResponse | str:
    op, params = task
    try:
        return simulate_cell(op, params)
    except (StarvationError, ConvergenceError) as error:
        return f"{error.code}: {error}"


def sample_campaign(
    n: int,
    ranges: InputRanges,
    seed: int,
    params: CellParameters,
    train_count: int | None = None,
    workers: int = 1,
) -> Dataset:
    """Sample ``n`` operating points uniformly and fill their outputs with the simulator.

    Points whose simulation fails for starvation or non-convergence are replaced by fresh draws from
    the same generator, so the dataset depends only on ``seed``.
    """

    if n < 1:
        raise DomainError(f"Campaign size must be at least 1, got {n}", n=n)
    rng = np.random.default_rng(seed)
    pending = [OperatingPoint(t_fur=row[0], q_air=row[1], q_st=row[2], v_cell=row[3]) for row in draw_inputs(rng, n, ranges)]
    filled: list[SamplePoint | None] = [None] * n
    slots = list(range(n))
    redraws = 0
    failures: list[str] = []

    while slots:
        results = ordered_map(_evaluate, [(op, params) for op in pending], workers=workers)
        retry_slots: list[int] = []
        for slot, op, result in zip(slots, pending, results):
            if isinstance(result, CellResponse):
                filled[slot] = SamplePoint(inputs=op, outputs=result, source="reduced-model")
            else:
                retry_slots.append(slot)
                failures.append(result)
        if not retry_slots:
            break
        redraws += len(retry_slots)
        if redraws > MAX_REDRAW_RATE * n:
            raise CampaignAbortedError(
                f"Campaign aborted after {redraws} re-draws for {n} points",
                redraws=redraws,
                n=n,
                last_failures=failures[-5:],
            )
        slots = retry_slots
        pending = [
            OperatingPoint(t_fur=row[0], q_air=row[1], q_st=row[2], v_cell=row[3])
            for row in draw_inputs(rng, len(slots), ranges)
        ]

    if redraws:
        LOGGER.warning("Campaign re-drew failed points", extra={"redraws": redraws, "n": n})
    LOGGER.info("Campaign complete", extra={"n": n, "seed": seed, "redraws": redraws})
    return build_dataset([point for point in filled if point is not None], seed, train_count)


def dataset_arrays(points: Sequence[SamplePoint]) -> tuple[np.ndarray, np.ndarray]:
    """Inputs ``(n, 4)`` and outputs ``(n, 5)`` in canonical column order."""

    inputs = np.array([point.inputs.as_tuple() for point in points], dtype=float).reshape(-1, 4)
    outputs = np.array([point.outputs.as_tuple() for point in points], dtype=float).reshape(-1, 5)
    return inputs, outputs
