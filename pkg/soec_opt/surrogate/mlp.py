"""One-hidden-layer sigmoid networks and the five-output ensemble."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.special import expit

from soec_opt.schemas.models import OUTPUT_NAMES, CellResponse, OperatingPoint, TrainingReport

N_INPUTS = 4


class ResponseModel(Protocol):
    """Anything that maps (n, 4) operating points to (n, 5) outputs; trained ensembles and test stubs alike."""

    def predict_array(self, inputs: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class AffineScaling:
    """Maps raw values to [-1, 1] via ``(x - center) / half_range``."""

    center: np.ndarray
    half_range: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "AffineScaling":
        """Min-max scaling from data; a constant column gets unit half-range."""

        values = np.atleast_2d(np.asarray(values, dtype=float))
        low, high = values.min(axis=0), values.max(axis=0)
        half = (high - low) / 2.0
        half = np.where(half > 1e-12 * np.maximum(1.0, np.abs(high)), half, 1.0)
        return cls(center=(high + low) / 2.0, half_range=half)

    def forward(self, values: np.ndarray) -> np.ndarray:
        return (values - self.center) / self.half_range

    def inverse(self, scaled: np.ndarray) -> np.ndarray:
        return scaled * self.half_range + self.center


def parameter_count(n_hidden: int, n_in: int = N_INPUTS) -> int:
    return n_hidden * (n_in + 2) + 1


@dataclass(frozen=True)
class MlpModel:
    """Sigmoid hidden layer, linear output, operating on scaled values.

    The flat parameter vector is ``[W (row-major, n_hidden × n_in), b, w_out, b_out]``.
    """

    target: str
    weights_in: np.ndarray
    bias_in: np.ndarray
    weights_out: np.ndarray
    bias_out: float
    input_scaling: AffineScaling
    output_scaling: AffineScaling

    @property
    def n_hidden(self) -> int:
        return int(self.weights_in.shape[0])

    @property
    def n_in(self) -> int:
        return int(self.weights_in.shape[1])

    def parameters(self) -> np.ndarray:
        return pack_parameters(self.weights_in, self.bias_in, self.weights_out, self.bias_out)

    def with_parameters(self, theta: np.ndarray) -> "MlpModel":
        weights_in, bias_in, weights_out, bias_out = unpack_parameters(theta, self.n_hidden, self.n_in)
        return MlpModel(
            target=self.target,
            weights_in=weights_in,
            bias_in=bias_in,
            weights_out=weights_out,
            bias_out=bias_out,
            input_scaling=self.input_scaling,
            output_scaling=self.output_scaling,
        )

    def predict_array(self, inputs: np.ndarray) -> np.ndarray:
        """Raw-unit predictions for an ``(n, n_in)`` array."""

        scaled = self.input_scaling.forward(np.atleast_2d(np.asarray(inputs, dtype=float)))
        out = forward_scaled(self.parameters(), scaled, self.n_hidden)
        return self.output_scaling.inverse(out[:, None])[:, 0]


def pack_parameters(weights_in: np.ndarray, bias_in: np.ndarray, weights_out: np.ndarray, bias_out: float) -> np.ndarray:
    return np.concatenate([weights_in.ravel(), bias_in, weights_out, [bias_out]])


def unpack_parameters(theta: np.ndarray, n_hidden: int, n_in: int = N_INPUTS) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    split_w = n_hidden * n_in
    weights_in = theta[:split_w].reshape(n_hidden, n_in)
    bias_in = theta[split_w : split_w + n_hidden]
    weights_out = theta[split_w + n_hidden : split_w + 2 * n_hidden]
    return weights_in, bias_in, weights_out, float(theta[-1])


def forward_scaled(theta: np.ndarray, scaled_inputs: np.ndarray, n_hidden: int) -> np.ndarray:
    weights_in, bias_in, weights_out, bias_out = unpack_parameters(theta, n_hidden, scaled_inputs.shape[1])
    hidden = expit(scaled_inputs @ weights_in.T + bias_in)
    return hidden @ weights_out + bias_out


def jacobian(theta: np.ndarray, scaled_inputs: np.ndarray, n_hidden: int) -> np.ndarray:
    """Analytic ``d output / d theta``, shape ``(n_rows, n_params)``."""

    n_rows, n_in = scaled_inputs.shape
    weights_in, bias_in, weights_out, _ = unpack_parameters(theta, n_hidden, n_in)
    hidden = expit(scaled_inputs @ weights_in.T + bias_in)
    delta = hidden * (1.0 - hidden) * weights_out
    d_weights = (delta[:, :, None] * scaled_inputs[:, None, :]).reshape(n_rows, n_hidden * n_in)
    return np.hstack([d_weights, delta, hidden, np.ones((n_rows, 1))])


@dataclass(frozen=True)
class SurrogateEnsemble:
    """Five networks keyed by output name plus their training reports."""

    models: dict[str, MlpModel]
    reports: dict[str, TrainingReport] = field(default_factory=dict)

    def __post_init__(self) -> None:
        missing = [name for name in OUTPUT_NAMES if name not in self.models]
        if missing:
            raise ValueError(f"ensemble is missing outputs {missing}")

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(self.models[name].n_hidden for name in OUTPUT_NAMES)

    def predict_array(self, inputs: np.ndarray) -> np.ndarray:
        """Raw outputs ``(n, 5)`` in canonical order for ``(n, 4)`` inputs."""

        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        return np.column_stack([self.models[name].predict_array(inputs) for name in OUTPUT_NAMES])

    def predict(self, op: OperatingPoint) -> CellResponse:
        return predict(self, op)


def predict(ens: SurrogateEnsemble, op: OperatingPoint) -> CellResponse:
    """Forward pass at one operating point.

    Negative currents are clipped to zero and ``t_min`` to at most ``t_max``; points outside the
    input box come back flagged ``extrapolated``.
    """

    t_max, t_min, i_up, i_mid, i_down = (float(value) for value in ens.predict_array(np.array([op.as_tuple()]))[0])
    return CellResponse(
        t_max=t_max,
        t_min=min(t_min, t_max),
        i_up=max(i_up, 0.0),
        i_mid=max(i_mid, 0.0),
        i_down=max(i_down, 0.0),
        extrapolated=not op.in_domain(),
    )
