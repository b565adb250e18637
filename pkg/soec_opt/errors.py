"""Error hierarchy shared by every pipeline stage."""

from __future__ import annotations

from typing import Any


class SoecError(RuntimeError):
    """Base error with a machine-readable code and structured details."""

    code = "soec_error"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_payload(self) -> dict[str, Any]:
        """Return the CLI error shape."""

        return {"error": {"code": self.code, "message": self.message, "details": self.details}}


class DomainError(SoecError, ValueError):
    code = "domain_error"


class ConvergenceError(SoecError):
    code = "convergence_error"


class StarvationError(SoecError):
    """Steam fully depleted inside the cell."""

    code = "steam_starvation"

    def __init__(self, message: str, segment: str, **details: Any) -> None:
        super().__init__(message, segment=segment, **details)
        self.segment = segment


class CampaignAbortedError(SoecError):
    code = "campaign_aborted"


class DatasetFormatError(SoecError):
    code = "dataset_format"


class MissingColumnError(DatasetFormatError):
    code = "missing_column"


class NonNumericCellError(DatasetFormatError):
    code = "non_numeric_cell"


class EmptyDatasetError(DatasetFormatError):
    code = "empty_dataset"


class OutOfRangeError(DatasetFormatError):
    code = "out_of_range"


class TrainingError(SoecError):
    code = "training_error"


class ModelFileError(SoecError):
    code = "model_file"


class ConstantFunctionError(SoecError):
    code = "constant_function"


class EmptyFrontError(SoecError):
    code = "empty_front"


class DownloadError(SoecError):
    code = "download_failed"


class OutputExistsError(SoecError):
    code = "output_exists"


class ArtifactIOError(SoecError):
    """Reading or writing a file failed."""

    code = "io_error"
