"""Tests for the network maths, LM training and model files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from soec_opt.config.settings import LmConfig
from soec_opt.dataset.campaign import build_dataset
from soec_opt.errors import ModelFileError, TrainingError
from soec_opt.schemas.models import OUTPUT_NAMES, CellResponse, OperatingPoint, SamplePoint
from soec_opt.surrogate.mlp import (
    AffineScaling,
    MlpModel,
    SurrogateEnsemble,
    forward_scaled,
    jacobian,
    parameter_count,
    unpack_parameters,
)
from soec_opt.surrogate.persistence import MAGIC, decode_ensemble, encode_ensemble, load_model, save_model
from soec_opt.surrogate.training import lm_fit, parity_report, train_lm


def _model(target: str, n_hidden: int, rng: np.random.Generator, bias_out: float = 0.0) -> MlpModel:
    theta = rng.normal(size=parameter_count(n_hidden))
    theta[-1] = bias_out
    weights_in, bias_in, weights_out, _ = unpack_parameters(theta, n_hidden)
    return MlpModel(
        target=target,
        weights_in=weights_in,
        bias_in=bias_in,
        weights_out=weights_out,
        bias_out=bias_out,
        input_scaling=AffineScaling(center=np.array([675.0, 170.0, 85.0, 1.35]), half_range=np.array([75.0, 130.0, 65.0, 0.35])),
        output_scaling=AffineScaling(center=np.array([1.0]), half_range=np.array([2.0])),
    )


def _ensemble(seed: int = 0, sizes: tuple[int, ...] = (3, 3, 2, 2, 2)) -> SurrogateEnsemble:
    rng = np.random.default_rng(seed)
    return SurrogateEnsemble(models={name: _model(name, size, rng) for name, size in zip(OUTPUT_NAMES, sizes)})


def _smooth_dataset(n: int = 80, seed: int = 3):
    rng = np.random.default_rng(seed)
    points = []
    for t_fur, q_air, q_st, v_cell in zip(
        rng.uniform(600, 750, n), rng.uniform(40, 300, n), rng.uniform(20, 150, n), rng.uniform(1.0, 1.7, n)
    ):
        current = 0.02 * q_st * (v_cell - 0.95) * (1.0 + (t_fur - 600.0) / 300.0)
        points.append(
            SamplePoint(
                inputs=OperatingPoint(t_fur=t_fur, q_air=q_air, q_st=q_st, v_cell=v_cell),
                outputs=CellResponse(
                    t_max=t_fur + 4.0 * (v_cell - 1.2) + 2.0,
                    t_min=t_fur + 4.0 * (v_cell - 1.2),
                    i_up=1.2 * current,
                    i_mid=current,
                    i_down=0.8 * current,
                ),
            )
        )
    return build_dataset(points, seed=seed)


def test_affine_scaling_maps_range_to_unit_interval() -> None:
    values = np.array([[0.0, 5.0], [10.0, 5.0]])
    scaling = AffineScaling.fit(values)

    assert np.allclose(scaling.forward(values)[:, 0], [-1.0, 1.0])
    assert np.allclose(scaling.forward(values)[:, 1], [0.0, 0.0])
    assert np.allclose(scaling.inverse(scaling.forward(values)), values)


def test_analytic_jacobian_matches_finite_differences() -> None:
    rng = np.random.default_rng(7)
    n_hidden = 4
    theta = rng.normal(size=parameter_count(n_hidden))
    inputs = rng.uniform(-1, 1, size=(15, 4))

    analytic = jacobian(theta, inputs, n_hidden)
    numeric = np.empty_like(analytic)
    step = 1e-6
    for k in range(theta.size):
        shift = np.zeros_like(theta)
        shift[k] = step
        numeric[:, k] = (forward_scaled(theta + shift, inputs, n_hidden) - forward_scaled(theta - shift, inputs, n_hidden)) / (2 * step)

    assert np.max(np.abs(analytic - numeric)) <= 1e-5 * max(1.0, np.max(np.abs(analytic)))


def test_ensemble_requires_every_output() -> None:
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        SurrogateEnsemble(models={"t_max": _model("t_max", 2, rng)})


def test_predict_clips_currents_and_flags_extrapolation() -> None:
    rng = np.random.default_rng(1)
    models = {name: _model(name, 2, rng) for name in OUTPUT_NAMES}
    models["i_down"] = _model("i_down", 2, rng, bias_out=-50.0)
    ensemble = SurrogateEnsemble(models=models)

    inside = ensemble.predict(OperatingPoint(t_fur=700.0, q_air=100.0, q_st=80.0, v_cell=1.3))
    outside = ensemble.predict(OperatingPoint(t_fur=800.0, q_air=100.0, q_st=80.0, v_cell=1.3))

    assert inside.i_down == 0.0
    assert inside.t_min <= inside.t_max
    assert not inside.extrapolated
    assert outside.extrapolated


def test_lm_losses_never_increase() -> None:
    rng = np.random.default_rng(5)
    inputs = rng.uniform(-1, 1, size=(60, 4))
    targets = np.tanh(inputs[:, 0]) + 0.5 * inputs[:, 3] ** 2
    config = LmConfig(max_epochs=60)

    result = lm_fit(rng.uniform(-0.5, 0.5, parameter_count(4)), inputs, targets, 4, config)

    assert all(later <= earlier for earlier, later in zip(result.losses, result.losses[1:]))
    assert result.losses[-1] < result.losses[0]
    assert result.stop_reason in {"max_epochs", "gradient", "mu_max", "exact"}


def test_train_lm_fits_smooth_responses() -> None:
    dataset = _smooth_dataset()
    config = LmConfig(max_epochs=80, restarts=2)

    ensemble = train_lm(dataset, (3, 3, 3, 3, 3), config, seed=1)
    rows = parity_report(ensemble, dataset)

    assert set(ensemble.reports) == set(OUTPUT_NAMES)
    assert {row.split for row in rows} == {"train", "test"}
    assert all(row.r2 > 0.97 for row in rows if row.split == "train")


def test_train_lm_is_deterministic() -> None:
    dataset = _smooth_dataset(40)
    config = LmConfig(max_epochs=10, restarts=1)

    first = train_lm(dataset, (2, 2, 2, 2, 2), config, seed=4)
    second = train_lm(dataset, (2, 2, 2, 2, 2), config, seed=4)

    assert encode_ensemble(first) == encode_ensemble(second)


def test_train_lm_rejects_wrong_hidden_sizes() -> None:
    with pytest.raises(TrainingError):
        train_lm(_smooth_dataset(20), (2, 2), LmConfig(), seed=0)


def test_model_file_round_trip_is_exact(tmp_path: Path) -> None:
    ensemble = _ensemble()
    path = tmp_path / "model.bin"
    digest = save_model(ensemble, path)

    loaded = load_model(path)
    inputs = np.array([[650.0, 120.0, 60.0, 1.25], [720.0, 250.0, 140.0, 1.6]])

    assert len(digest) == 64
    assert loaded.hidden_sizes == ensemble.hidden_sizes
    assert np.array_equal(loaded.predict_array(inputs), ensemble.predict_array(inputs))


def test_model_file_errors_carry_location() -> None:
    payload = encode_ensemble(_ensemble())

    with pytest.raises(ModelFileError) as truncated:
        decode_ensemble(payload[:-10])
    assert "offset" in truncated.value.details

    with pytest.raises(ModelFileError):
        decode_ensemble(b"NOTMODEL" + payload[len(MAGIC) :])

    with pytest.raises(ModelFileError):
        decode_ensemble(payload + b"\x00")

    bumped = payload[: len(MAGIC)] + (99).to_bytes(4, "little") + payload[len(MAGIC) + 4 :]
    with pytest.raises(ModelFileError) as version:
        decode_ensemble(bumped)
    assert version.value.details["version"] == 99


def _input_slopes(model: MlpModel) -> np.ndarray:
    """Upper bound of ``|d output / d input_i|`` in raw units; the sigmoid slope never exceeds 1/4."""

    spread = np.abs(model.weights_out) @ np.abs(model.weights_in) / 4.0
    return model.output_scaling.half_range[0] * spread / model.input_scaling.half_range


def test_predict_is_lipschitz_in_every_input() -> None:
    ensemble = _ensemble(seed=4)
    slopes = {name: _input_slopes(model) for name, model in ensemble.models.items()}
    slopes["t_min"] = np.maximum(slopes["t_min"], slopes["t_max"])
    rng = np.random.default_rng(9)
    field = ("t_fur", "q_air", "q_st", "v_cell")

    for row in rng.uniform([600, 40, 20, 1.0], [750, 300, 150, 1.7], size=(20, 4)):
        op = OperatingPoint(**dict(zip(field, row)))
        base = ensemble.predict(op)
        for column, name in enumerate(field):
            for step in (1e-2, 1e-5):
                moved = ensemble.predict(op.model_copy(update={name: getattr(op, name) + step}))
                for target in OUTPUT_NAMES:
                    change = abs(getattr(moved, target) - getattr(base, target))
                    assert change <= slopes[target][column] * step * (1.0 + 1e-9) + 1e-12


def test_lm_fits_a_constant_target_exactly() -> None:
    rng = np.random.default_rng(12)
    inputs = rng.uniform(-1, 1, size=(50, 4))
    config = LmConfig(max_epochs=200, grad_tol=1e-14)

    result = lm_fit(rng.uniform(-0.5, 0.5, parameter_count(3)), inputs, np.zeros(50), 3, config)

    residual = forward_scaled(result.theta, inputs, 3)
    assert float(np.sqrt(np.mean(residual**2))) < 1e-10


def test_lm_fits_a_linear_target() -> None:
    rng = np.random.default_rng(13)
    inputs = rng.uniform(-1, 1, size=(80, 4))
    targets = inputs @ np.array([0.4, -0.2, 0.3, 0.1]) + 0.05

    result = lm_fit(rng.uniform(-0.5, 0.5, parameter_count(3)), inputs, targets, 3, LmConfig())

    residual = forward_scaled(result.theta, inputs, 3) - targets
    assert float(np.sqrt(np.mean(residual**2))) < 1e-3
