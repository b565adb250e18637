"""Ordered map over a process pool, capped by ``SOEC_THREADS``."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")

LOGGER = logging.getLogger(__name__)


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1, chunksize: int = 1) -> list[R]:
    """Apply ``func`` to every item and return results in input order.

    ``func`` and the items must be picklable when ``workers > 1``. Results never depend on the
    worker count.
    """

    batch = list(items)
    if workers <= 1 or len(batch) <= 1:
        return [func(item) for item in batch]
    max_workers = min(workers, len(batch))
    LOGGER.debug("Starting process pool", extra={"workers": max_workers, "tasks": len(batch)})
    with ProcessPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(func, batch, chunksize=chunksize))
