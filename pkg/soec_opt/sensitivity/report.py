"""Sensitivity of the performance indices to the four operating inputs."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np
import pandas as pd

from soec_opt.config.settings import InputRanges
from soec_opt.core.indices import indices_array
from soec_opt.schemas.models import INPUT_NAMES, SobolResult
from soec_opt.sensitivity.sobol import sobol_indices
from soec_opt.surrogate.mlp import ResponseModel

LOGGER = logging.getLogger(__name__)

DEFAULT_TARGETS = ("su", "ih_i", "ih_t")


def index_function(model: ResponseModel, target: str) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised map from operating points to one performance index."""

    def evaluate(inputs: np.ndarray) -> np.ndarray:
        return indices_array(inputs, model.predict_array(inputs))[target]

    return evaluate


def index_report(
    model: ResponseModel,
    ranges: InputRanges,
    n_base: int,
    seed: int,
    targets: Sequence[str] = DEFAULT_TARGETS,
) -> dict[str, SobolResult]:
    """Sobol indices of each target over the input box, same sample for every target."""

    results: dict[str, SobolResult] = {}
    for target in targets:
        results[target] = sobol_indices(index_function(model, target), ranges.as_rows(), n_base, seed)
        LOGGER.info(
            "Sobol indices computed",
            extra={"target": target, "s": results[target].s, "st": results[target].st, "n_base": n_base},
        )
    return results


def sobol_table(results: dict[str, SobolResult]) -> pd.DataFrame:
    """Two rows per target (S and ST), one column per input; small negatives shown as zero."""

    rows = []
    for target, result in results.items():
        for kind, values in (("S", result.s), ("ST", result.st)):
            row = {"target": target, "index": kind}
            row.update({name: max(value, 0.0) for name, value in zip(result.names, values)})
            rows.append(row)
    return pd.DataFrame(rows, columns=["target", "index", *INPUT_NAMES])
