"""Loading of the versioned cell-parameter file."""

from __future__ import annotations

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from pydantic import ValidationError

from soec_opt.config.settings import DEFAULT_CELL_PARAMETERS
from soec_opt.errors import DomainError
from soec_opt.schemas.models import CellParameters

LOGGER = logging.getLogger(__name__)

SUPPORTED_VERSION = 1


def load_cell_parameters(path: Path | None = None) -> CellParameters:
    """Read cell parameters from a ``key = value`` TOML file (defaults to the packaged file)."""

    path = path or DEFAULT_CELL_PARAMETERS
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError as error:
        raise DomainError(f"Cell parameter file not found: {path}", path=str(path)) from error
    except tomllib.TOMLDecodeError as error:
        raise DomainError(f"Cell parameter file is not valid TOML: {path}", path=str(path)) from error

    version = raw.get("version")
    if version != SUPPORTED_VERSION:
        raise DomainError(
            f"Unsupported cell parameter version {version!r}",
            path=str(path),
            version=version,
            supported=SUPPORTED_VERSION,
        )
    try:
        params = CellParameters.model_validate(raw)
    except ValidationError as error:
        raise DomainError(f"Invalid cell parameters in {path}: {error}", path=str(path)) from error
    LOGGER.debug("Loaded cell parameters", extra={"path": str(path), "closure": params.closure})
    return params


def default_cell_parameters() -> CellParameters:
    return load_cell_parameters(DEFAULT_CELL_PARAMETERS)
