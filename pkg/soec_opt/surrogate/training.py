"""Levenberg-Marquardt training of the per-output networks."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from soec_opt.config.settings import LmConfig
from soec_opt.dataset.campaign import dataset_arrays
from soec_opt.errors import TrainingError
from soec_opt.schemas.models import OUTPUT_NAMES, Dataset, ParityRow, TrainingReport
from soec_opt.surrogate.mlp import (
    AffineScaling,
    MlpModel,
    SurrogateEnsemble,
    forward_scaled,
    jacobian,
    parameter_count,
    unpack_parameters,
)
from soec_opt.utils.parallel import ordered_map

LOGGER = logging.getLogger(__name__)

INIT_SPREAD = 0.5
_MU_FLOOR = 1e-20


@dataclass(frozen=True)
class LmResult:
    theta: np.ndarray
    epochs: int
    losses: list[float]
    stop_reason: str


def lm_fit(theta0: np.ndarray, scaled_x: np.ndarray, scaled_y: np.ndarray, n_hidden: int, config: LmConfig) -> LmResult:
    """Minimise the sum of squared residuals with an adaptive damping factor.

    ``losses`` holds the loss after every accepted step and never increases.
    """

    theta = np.array(theta0, dtype=float)
    identity = np.eye(theta.size)
    mu = config.mu0
    residual = scaled_y - forward_scaled(theta, scaled_x, n_hidden)
    loss = float(residual @ residual)
    losses = [loss]
    stop_reason = "max_epochs"
    epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        jac = jacobian(theta, scaled_x, n_hidden)
        gradient = jac.T @ residual
        if float(np.max(np.abs(gradient))) < config.grad_tol:
            stop_reason = "gradient"
            break
        normal = jac.T @ jac
        epochs = epoch
        accepted = False
        while not accepted:
            try:
                step = np.linalg.solve(normal + mu * identity, gradient)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                candidate = theta + step
                candidate_residual = scaled_y - forward_scaled(candidate, scaled_x, n_hidden)
                candidate_loss = float(candidate_residual @ candidate_residual)
                if np.isfinite(candidate_loss) and candidate_loss < loss:
                    theta, residual, loss = candidate, candidate_residual, candidate_loss
                    losses.append(loss)
                    mu = max(mu * config.mu_dec, _MU_FLOOR)
                    accepted = True
                    continue
            mu *= config.mu_inc
            if mu > config.mu_max:
                break
        if not accepted:
            stop_reason = "mu_max"
            break
        if loss == 0.0:
            stop_reason = "exact"
            break
    return LmResult(theta=theta, epochs=epochs, losses=losses, stop_reason=stop_reason)


def rmse(predicted: np.ndarray, observed: np.ndarray) -> float:
    if observed.size == 0:
        return float("nan")
    return float(np.sqrt(np.mean((predicted - observed) ** 2)))


@dataclass(frozen=True)
class _OutputTask:
    target: str
    n_hidden: int
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    input_scaling: AffineScaling
    output_scaling: AffineScaling
    config: LmConfig
    seed: np.random.SeedSequence


def _fit_output(task: _OutputTask) -> tuple[MlpModel, TrainingReport]:
    rng = np.random.default_rng(task.seed)
    scaled_x = task.input_scaling.forward(task.train_x)
    scaled_y = task.output_scaling.forward(task.train_y[:, None])[:, 0]
    n_params = parameter_count(task.n_hidden, task.train_x.shape[1])

    best: tuple[float, MlpModel, TrainingReport] | None = None
    for restart in range(task.config.restarts):
        theta0 = rng.uniform(-INIT_SPREAD, INIT_SPREAD, size=n_params)
        result = lm_fit(theta0, scaled_x, scaled_y, task.n_hidden, task.config)
        if not np.all(np.isfinite(result.theta)):
            LOGGER.warning("Restart produced non-finite weights", extra={"target": task.target, "restart": restart})
            continue
        weights_in, bias_in, weights_out, bias_out = unpack_parameters(result.theta, task.n_hidden, task.train_x.shape[1])
        model = MlpModel(
            target=task.target,
            weights_in=weights_in.copy(),
            bias_in=bias_in.copy(),
            weights_out=weights_out.copy(),
            bias_out=bias_out,
            input_scaling=task.input_scaling,
            output_scaling=task.output_scaling,
        )
        train_rmse = rmse(model.predict_array(task.train_x), task.train_y)
        test_rmse = rmse(model.predict_array(task.test_x), task.test_y) if task.test_y.size else float("nan")
        score = test_rmse if task.test_y.size else train_rmse
        LOGGER.info(
            "LM restart finished",
            extra={
                "target": task.target,
                "restart": restart,
                "epochs": result.epochs,
                "stop_reason": result.stop_reason,
                "train_rmse": train_rmse,
                "test_rmse": test_rmse,
            },
        )
        if best is None or score < best[0]:
            report = TrainingReport(
                target=task.target,
                n_hidden=task.n_hidden,
                train_rmse=train_rmse,
                test_rmse=test_rmse,
                epochs=result.epochs,
                restarts=task.config.restarts,
                stop_reason=result.stop_reason,
            )
            best = (score, model, report)
    if best is None:
        raise TrainingError(f"Training failed for output {task.target}", target=task.target)
    return best[1], best[2]


def train_lm(
    ds: Dataset,
    hidden_sizes: Sequence[int],
    config: LmConfig,
    seed: int,
    workers: int = 1,
) -> SurrogateEnsemble:
    """Train one network per output on the train split; RMSEs are reported in raw units."""

    if len(hidden_sizes) != len(OUTPUT_NAMES):
        raise TrainingError(f"Expected {len(OUTPUT_NAMES)} hidden sizes, got {len(hidden_sizes)}", hidden_sizes=list(hidden_sizes))
    train_x, train_y = dataset_arrays(ds.subset("train"))
    test_x, test_y = dataset_arrays(ds.subset("test"))
    if len(train_x) == 0:
        raise TrainingError("Training split is empty", points=len(ds.points))

    input_scaling = AffineScaling.fit(train_x)
    seeds = np.random.SeedSequence(seed).spawn(len(OUTPUT_NAMES))
    tasks: list[_OutputTask] = []
    for column, (target, n_hidden) in enumerate(zip(OUTPUT_NAMES, hidden_sizes)):
        recommended = 10 * parameter_count(n_hidden)
        if len(train_x) < recommended:
            LOGGER.warning(
                "Training split smaller than recommended",
                extra={"target": target, "rows": len(train_x), "recommended": recommended},
            )
        tasks.append(
            _OutputTask(
                target=target,
                n_hidden=int(n_hidden),
                train_x=train_x,
                train_y=train_y[:, column],
                test_x=test_x,
                test_y=test_y[:, column],
                input_scaling=input_scaling,
                output_scaling=AffineScaling.fit(train_y[:, column : column + 1]),
                config=config,
                seed=seeds[column],
            )
        )
    fitted = ordered_map(_fit_output, tasks, workers=workers)
    return SurrogateEnsemble(
        models={model.target: model for model, _ in fitted},
        reports={report.target: report for _, report in fitted},
    )


def parity_report(ens: SurrogateEnsemble, ds: Dataset) -> list[ParityRow]:
    """RMSE and coefficient of determination per output and split."""

    rows: list[ParityRow] = []
    for split in ("train", "test"):
        inputs, outputs = dataset_arrays(ds.subset(split))
        if len(inputs) == 0:
            continue
        predicted = ens.predict_array(inputs)
        for column, target in enumerate(OUTPUT_NAMES):
            observed = outputs[:, column]
            ss_res = float(np.sum((predicted[:, column] - observed) ** 2))
            ss_tot = float(np.sum((observed - observed.mean()) ** 2))
            if ss_tot > 0:
                r2 = 1.0 - ss_res / ss_tot
            else:
                r2 = 1.0 if ss_res == 0 else 0.0
            rows.append(
                ParityRow(target=target, split=split, count=len(observed), rmse=rmse(predicted[:, column], observed), r2=r2)
            )
    return rows
