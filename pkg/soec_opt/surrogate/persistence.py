"""Binary model files.

Layout (all little-endian)::

    magic      8 bytes  b"SOECMLP\\0"
    version    uint32
    n_models   uint32
    per model:
        name_len uint16, name (UTF-8)
        n_in uint32, n_hidden uint32
        float64 blocks: input center[n_in], input half-range[n_in], output center, output half-range,
                        W[n_hidden × n_in] row-major, b[n_hidden], w_out[n_hidden], b_out
        float64 train_rmse, float64 test_rmse, uint32 epochs

Every float is stored as its IEEE-754 bit pattern, so a save/load round trip is exact.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from pathlib import Path

import numpy as np

from soec_opt.errors import ArtifactIOError, ModelFileError
from soec_opt.schemas.models import OUTPUT_NAMES, TrainingReport
from soec_opt.surrogate.mlp import AffineScaling, MlpModel, SurrogateEnsemble

LOGGER = logging.getLogger(__name__)

MAGIC = b"SOECMLP\x00"
FORMAT_VERSION = 1


def _f64(values: np.ndarray | float) -> bytes:
    return np.asarray(values, dtype="<f8").ravel().tobytes()


def encode_ensemble(ens: SurrogateEnsemble) -> bytes:
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(OUTPUT_NAMES))]
    for name in OUTPUT_NAMES:
        model = ens.models[name]
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
        chunks.append(struct.pack("<II", model.n_in, model.n_hidden))
        chunks.append(_f64(model.input_scaling.center) + _f64(model.input_scaling.half_range))
        chunks.append(_f64(model.output_scaling.center) + _f64(model.output_scaling.half_range))
        chunks.append(_f64(model.weights_in) + _f64(model.bias_in) + _f64(model.weights_out) + _f64(model.bias_out))
        report = ens.reports.get(name)
        train_rmse = report.train_rmse if report else float("nan")
        test_rmse = report.test_rmse if report else float("nan")
        epochs = report.epochs if report else 0
        chunks.append(_f64(np.array([train_rmse, test_rmse])) + struct.pack("<I", epochs))
    return b"".join(chunks)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self._data):
            raise ModelFileError(
                f"Model file truncated at byte offset {self.offset} (needed {size} more bytes)",
                offset=self.offset,
                size=len(self._data),
            )
        chunk = self._data[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(float)

    @property
    def remaining(self) -> int:
        return len(self._data) - self.offset


def decode_ensemble(data: bytes) -> SurrogateEnsemble:
    reader = _Reader(data)
    if reader.take(len(MAGIC)) != MAGIC:
        raise ModelFileError("Not a surrogate model file (bad magic)", offset=0)
    version, n_models = reader.unpack("<II")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"Unsupported model file version {version}", version=version, supported=FORMAT_VERSION)

    models: dict[str, MlpModel] = {}
    reports: dict[str, TrainingReport] = {}
    for _ in range(n_models):
        (name_len,) = reader.unpack("<H")
        start = reader.offset
        try:
            name = reader.take(name_len).decode("utf-8")
        except UnicodeDecodeError as error:
            raise ModelFileError("Corrupt model name", offset=start) from error
        n_in, n_hidden = reader.unpack("<II")
        input_scaling = AffineScaling(center=reader.floats(n_in), half_range=reader.floats(n_in))
        output_scaling = AffineScaling(center=reader.floats(1), half_range=reader.floats(1))
        weights_in = reader.floats(n_hidden * n_in).reshape(n_hidden, n_in)
        bias_in = reader.floats(n_hidden)
        weights_out = reader.floats(n_hidden)
        bias_out = float(reader.floats(1)[0])
        train_rmse, test_rmse = (float(value) for value in reader.floats(2))
        (epochs,) = reader.unpack("<I")
        models[name] = MlpModel(
            target=name,
            weights_in=weights_in,
            bias_in=bias_in,
            weights_out=weights_out,
            bias_out=bias_out,
            input_scaling=input_scaling,
            output_scaling=output_scaling,
        )
        reports[name] = TrainingReport(
            target=name, n_hidden=n_hidden, train_rmse=train_rmse, test_rmse=test_rmse, epochs=epochs, stop_reason="loaded"
        )
    if reader.remaining:
        raise ModelFileError(f"Trailing bytes after model data at offset {reader.offset}", offset=reader.offset)
    try:
        return SurrogateEnsemble(models=models, reports=reports)
    except ValueError as error:
        raise ModelFileError(str(error), models=sorted(models)) from error


def save_model(ens: SurrogateEnsemble, path: Path) -> str:
    """Write the ensemble and return the SHA-256 of the file contents."""

    payload = encode_ensemble(ens)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as error:
        raise ArtifactIOError(f"Cannot write model file {path}", path=str(path)) from error
    digest = hashlib.sha256(payload).hexdigest()
    LOGGER.info("Saved surrogate ensemble", extra={"path": str(path), "bytes": len(payload), "sha256": digest})
    return digest


def load_model(path: Path) -> SurrogateEnsemble:
    try:
        data = path.read_bytes()
    except OSError as error:
        raise ArtifactIOError(f"Cannot read model file {path}", path=str(path)) from error
    return decode_ensemble(data)


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()
