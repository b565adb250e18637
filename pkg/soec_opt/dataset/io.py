"""Canonical CSV files and ingestion of external (published) datasets."""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Literal

import pandas as pd
from pydantic import ValidationError

from soec_opt.config.settings import Settings
from soec_opt.dataset.campaign import build_dataset
from soec_opt.errors import (
    ArtifactIOError,
    DatasetFormatError,
    EmptyDatasetError,
    MissingColumnError,
    NonNumericCellError,
    OutOfRangeError,
)
from soec_opt.schemas.models import INPUT_DOMAIN, INPUT_NAMES, CellResponse, Dataset, OperatingPoint, SamplePoint
from soec_opt.utils.http import HttpClient

LOGGER = logging.getLogger(__name__)

INPUT_COLUMNS = ("t_fur_C", "q_air_sccm", "q_st_sccm", "v_cell_V")
OUTPUT_COLUMNS = ("t_max_C", "t_min_C", "i_up_A", "i_mid_A", "i_down_A")
CANONICAL_COLUMNS = INPUT_COLUMNS + OUTPUT_COLUMNS
_SHORT_NAMES = {column.rsplit("_", 1)[0]: column for column in CANONICAL_COLUMNS}
RANGE_TOLERANCE = 0.1


def parse_column_map(text: str | None) -> dict[str, str]:
    """Parse ``name=file_column,...`` into a mapping keyed by canonical column."""

    if not text:
        return {}
    mapping: dict[str, str] = {}
    for item in text.split(","):
        name, sep, source = item.partition("=")
        if not sep or not name.strip() or not source.strip():
            raise DatasetFormatError(f"Malformed column map entry {item!r}", entry=item)
        mapping[canonical_column(name.strip())] = source.strip()
    return mapping


def canonical_column(name: str) -> str:
    if name in CANONICAL_COLUMNS:
        return name
    if name in _SHORT_NAMES:
        return _SHORT_NAMES[name]
    raise DatasetFormatError(f"Unknown dataset column {name!r}", column=name, known=list(CANONICAL_COLUMNS))


def save_csv(ds: Dataset, path: Path) -> None:
    """Write the canonical schema: header plus one row per point, LF line endings."""

    rows = [point.inputs.as_tuple() + point.outputs.as_tuple() for point in ds.points]
    frame = pd.DataFrame(rows, columns=list(CANONICAL_COLUMNS))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as error:
        raise ArtifactIOError(f"Cannot write dataset to {path}", path=str(path)) from error
    LOGGER.info("Saved dataset", extra={"path": str(path), "rows": len(rows)})


def _read_text_frame(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError as error:
        raise ArtifactIOError(f"Dataset file not found: {path}", path=str(path)) from error
    except pd.errors.EmptyDataError as error:
        raise EmptyDatasetError(f"Dataset file is empty: {path}", path=str(path)) from error
    except (OSError, pd.errors.ParserError) as error:
        raise DatasetFormatError(f"Cannot parse dataset {path}: {error}", path=str(path)) from error


def _parse_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        return math.nan
    return value if math.isfinite(value) else math.nan


def _numeric_column(raw: pd.Series, column: str, path: Path) -> pd.Series:
    values = raw.map(_parse_float).astype(float)
    bad = values.isna().to_numpy()
    if bad.any():
        position = int(bad.nonzero()[0][0])
        raise NonNumericCellError(
            f"Non-numeric value {raw.iloc[position]!r} in column {column!r} at line {position + 2} of {path}",
            path=str(path),
            column=column,
            line=position + 2,
            value=raw.iloc[position],
        )
    return values.astype(float)


def _out_of_range_lines(frame: pd.DataFrame) -> list[int]:
    bad = pd.Series(False, index=frame.index)
    for name, column in zip(INPUT_NAMES, INPUT_COLUMNS):
        low, high = INPUT_DOMAIN[name]
        pad = RANGE_TOLERANCE * (high - low)
        bad |= (frame[column] < low - pad) | (frame[column] > high + pad)
    return [int(position) + 2 for position in bad.to_numpy().nonzero()[0]]


def load_external(
    path: Path,
    column_map: dict[str, str] | None = None,
    seed: int = 0,
    train_count: int | None = None,
    on_out_of_range: Literal["raise", "skip"] = "raise",
) -> Dataset:
    """Read a CSV with header into a split dataset.

    ``column_map`` maps canonical (or short) column names to the names used in the file. Rows whose
    inputs fall outside the surrogate input box by more than 10% of the range width are rejected with
    their file line numbers, or dropped with a warning when ``on_out_of_range="skip"``.
    """

    mapping = {canonical_column(key): value for key, value in (column_map or {}).items()}
    raw = _read_text_frame(path)
    if raw.empty:
        raise EmptyDatasetError(f"Dataset file has no data rows: {path}", path=str(path))

    sources = {column: mapping.get(column, column) for column in CANONICAL_COLUMNS}
    missing = [source for source in sources.values() if source not in raw.columns]
    if missing:
        raise MissingColumnError(
            f"Missing columns {missing} in {path}",
            path=str(path),
            missing=missing,
            available=list(raw.columns),
        )
    frame = pd.DataFrame({column: _numeric_column(raw[source], source, path) for column, source in sources.items()})

    rejected = _out_of_range_lines(frame)
    if rejected:
        if on_out_of_range == "raise":
            raise OutOfRangeError(
                f"{len(rejected)} rows out of range in {path} (lines {rejected[:10]})",
                path=str(path),
                lines=rejected,
            )
        LOGGER.warning("Skipped out-of-range rows", extra={"path": str(path), "lines": rejected, "count": len(rejected)})
        frame = frame.drop(index=[line - 2 for line in rejected])

    points: list[SamplePoint] = []
    for position, row in zip(frame.index, frame.itertuples(index=False)):
        values = tuple(float(value) for value in row)
        try:
            points.append(
                SamplePoint(
                    inputs=OperatingPoint(**dict(zip(INPUT_NAMES, values[:4]))),
                    outputs=CellResponse(t_max=values[4], t_min=values[5], i_up=values[6], i_mid=values[7], i_down=values[8]),
                    source="external",
                )
            )
        except ValidationError as error:
            raise DatasetFormatError(
                f"Invalid outputs at line {int(position) + 2} of {path}: {error.errors()[0]['msg']}",
                path=str(path),
                line=int(position) + 2,
            ) from error

    LOGGER.info("Loaded dataset", extra={"path": str(path), "rows": len(points), "skipped": len(rejected)})
    return build_dataset(points, seed, train_count)


def fetch_published(url: str, dest: Path, settings: Settings, client: HttpClient | None = None) -> Path:
    """Download a published dataset CSV to ``dest`` with retries."""

    owned = client is None
    client = client or HttpClient(timeout_seconds=settings.request_timeout_seconds, retry_config=settings.retry)
    try:
        client.download_file(url, dest)
    finally:
        if owned:
            client.close()
    return dest
