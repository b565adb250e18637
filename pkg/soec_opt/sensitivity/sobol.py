"""Sobol first-order and total-effect indices by quasi-Monte-Carlo radial sampling."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np
from scipy.stats import norm, qmc

from soec_opt.errors import ConstantFunctionError, DomainError
from soec_opt.schemas.models import INPUT_NAMES, SobolResult

LOGGER = logging.getLogger(__name__)

MIN_BASE_SAMPLES = 256
VARIANCE_FLOOR = 1e-14

VectorFunction = Callable[[np.ndarray], np.ndarray]


def sample_matrices(ranges: Sequence[tuple[float, float]], n_base: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Base matrices A and B from one scrambled Sobol sequence of dimension ``2k``, scaled to ``ranges``."""

    k = len(ranges)
    sampler = qmc.Sobol(d=2 * k, scramble=True, seed=seed)
    if n_base & (n_base - 1) == 0:
        unit = sampler.random_base2(m=int(np.log2(n_base)))
    else:
        LOGGER.warning("Sobol base size is not a power of two", extra={"n_base": n_base})
        unit = sampler.random(n_base)
    bounds = np.asarray(ranges, dtype=float)
    low, high = np.tile(bounds[:, 0], 2), np.tile(bounds[:, 1], 2)
    scaled = qmc.scale(unit, low, high)
    return scaled[:, :k], scaled[:, k:]


def radial_matrices(a: np.ndarray, b: np.ndarray) -> list[np.ndarray]:
    """``A_B^(i)``: A with column i taken from B, one per input."""

    matrices = []
    for column in range(a.shape[1]):
        mixed = a.copy()
        mixed[:, column] = b[:, column]
        matrices.append(mixed)
    return matrices


def first_order(y_a: np.ndarray, y_b: np.ndarray, y_ab: np.ndarray, variance: np.ndarray | float) -> np.ndarray:
    return np.mean(y_b * (y_ab - y_a), axis=-1) / variance


def total_effect(y_a: np.ndarray, y_ab: np.ndarray, variance: np.ndarray | float) -> np.ndarray:
    return 0.5 * np.mean((y_a - y_ab) ** 2, axis=-1) / variance


def sobol_indices(
    f: VectorFunction,
    ranges: Sequence[tuple[float, float]],
    n_base: int,
    seed: int,
    names: Sequence[str] = INPUT_NAMES,
    n_bootstrap: int = 200,
    confidence: float = 0.95,
) -> SobolResult:
    """Estimate S_i and ST_i of a vectorised scalar function over a box.

    ``f`` maps an ``(n, k)`` array to ``(n,)``. All ``n_base·(k + 2)`` evaluations happen in one call,
    so the result does not depend on evaluation order. Confidence half-widths come from a seeded
    bootstrap over the base rows.
    """

    if n_base < MIN_BASE_SAMPLES:
        raise DomainError(f"n_base must be at least {MIN_BASE_SAMPLES}, got {n_base}", n_base=n_base)
    if len(names) != len(ranges):
        raise DomainError("names and ranges differ in length", names=list(names), ranges=len(ranges))
    k = len(ranges)
    a, b = sample_matrices(ranges, n_base, seed)
    stacked = np.vstack([a, b, *radial_matrices(a, b)])
    values = np.asarray(f(stacked), dtype=float).reshape(-1)
    if values.shape[0] != stacked.shape[0]:
        raise DomainError("Function returned the wrong number of values", expected=stacked.shape[0], got=values.shape[0])
    if not np.all(np.isfinite(values)):
        raise DomainError("Function returned non-finite values", count=int(np.sum(~np.isfinite(values))))

    y_a, y_b = values[:n_base], values[n_base : 2 * n_base]
    y_ab = values[2 * n_base :].reshape(k, n_base)
    variance = float(np.var(np.concatenate([y_a, y_b])))
    if variance < VARIANCE_FLOOR:
        raise ConstantFunctionError("Output variance is zero; Sobol indices are undefined", variance=variance)

    s = first_order(y_a, y_b, y_ab, variance)
    st = total_effect(y_a, y_ab, variance)

    rng = np.random.default_rng(seed)
    resample = rng.integers(0, n_base, size=(n_bootstrap, n_base))
    boot_a, boot_b = y_a[resample], y_b[resample]
    boot_var = np.var(np.concatenate([boot_a, boot_b], axis=1), axis=1)
    z = norm.ppf(0.5 + confidence / 2.0)
    s_conf, st_conf = [], []
    for column in range(k):
        boot_ab = y_ab[column][resample]
        s_conf.append(float(z * np.std(first_order(boot_a, boot_b, boot_ab, boot_var), ddof=1)))
        st_conf.append(float(z * np.std(total_effect(boot_a, boot_ab, boot_var), ddof=1)))

    return SobolResult(
        names=list(names),
        s=[float(value) for value in s],
        st=[float(value) for value in st],
        s_conf=s_conf,
        st_conf=st_conf,
        n_base=n_base,
        n_evaluations=int(values.shape[0]),
        variance=variance,
    )
