"""Command-line entrypoint for the simulate → campaign → train → sobol → pareto → linmap pipeline."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from soec_opt.config.settings import RunConfig, Settings, get_settings, load_run_config
from soec_opt.dataset.campaign import sample_campaign
from soec_opt.dataset.io import fetch_published, load_external, parse_column_map, save_csv
from soec_opt.decision.linmap import decision_table, operating_curve
from soec_opt.errors import DomainError, SoecError
from soec_opt.optimize.front import sweep_power
from soec_opt.optimize.vcell import contour_scan, objective_relationships
from soec_opt.physics.cell import iv_sweep, open_circuit_voltage, simulate_cell_detailed, utilisation_ceiling
from soec_opt.physics.parameters import load_cell_parameters
from soec_opt.reports.writer import (
    ReportWriter,
    contour_frame,
    curve_frames,
    default_out_dir,
    front_frame,
    iv_frame,
    parity_frame,
    read_fronts,
)
from soec_opt.schemas.models import (
    SEGMENTS,
    CellParameters,
    CellSolution,
    GridSpec,
    IvPoint,
    OperatingPoint,
    ParetoFront,
    WeightVector,
)
from soec_opt.sensitivity.report import index_report, sobol_table
from soec_opt.surrogate.mlp import SurrogateEnsemble
from soec_opt.surrogate.persistence import load_model, save_model
from soec_opt.surrogate.training import parity_report, train_lm
from soec_opt.utils.logging import configure_logging

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# Validation rig conditions (t_fur °C, q_air sccm, q_st sccm); hydrogen carrier equals the steam flow.
SCENARIOS: dict[str, tuple[float, float, float]] = {
    "condition1": (660.0, 400.0, 40.0),
    "condition2": (660.0, 400.0, 120.0),
}


class UsageError(Exception):
    """Invalid combination of flags that argparse cannot express."""


class CommandContext:
    """Settings, run config and parsed flags shared by every command."""

    def __init__(self, args: argparse.Namespace, settings: Settings, config: RunConfig) -> None:
        self.args = args
        self.settings = settings
        self.config = config

    @property
    def workers(self) -> int:
        return self.settings.threads

    def seed(self, default: int) -> int:
        return self.args.seed if self.args.seed is not None else default

    def writer(self) -> ReportWriter:
        out = self.args.out or self.config.out_dir or default_out_dir()
        return ReportWriter(Path(out))

    def cell_parameters(self) -> CellParameters:
        return load_cell_parameters(self.config.cell_parameters_path)

    def model(self) -> SurrogateEnsemble:
        path = getattr(self.args, "model", None) or self.config.model_path
        if path is None:
            raise UsageError("--model is required (or model_path in the run config)")
        return load_model(Path(path))

    def grid(self) -> GridSpec:
        grid = self.config.grid
        return GridSpec.linear(grid.t_fur_min, grid.t_fur_max, grid.t_fur_count, grid.su_min, grid.su_max, grid.su_count)

    def powers(self) -> list[float]:
        overrides = {
            key: value
            for key, value in (
                ("power_min", self.args.power_min),
                ("power_max", self.args.power_max),
                ("power_step", self.args.power_step),
            )
            if value is not None
        }
        try:
            sweep = self.config.sweep.model_validate({**self.config.sweep.model_dump(), **overrides})
        except ValidationError as error:
            raise DomainError(f"Invalid power sweep: {error}", **overrides) from error
        return sweep.powers()

    def weight_cases(self) -> dict[str, WeightVector]:
        """Weight cases selected by ``--weights``; all configured cases when the flag is absent."""

        text = self.args.weights
        cases = self.config.weight_cases
        if text is None:
            return {name: WeightVector.from_sequence(values) for name, values in cases.items()}
        if text in cases:
            return {text: WeightVector.from_sequence(cases[text])}
        try:
            values = [float(part) for part in text.split(",")]
            return {"custom": WeightVector.from_sequence(values)}
        except ValueError as error:
            raise UsageError(f"--weights must be a case name ({', '.join(cases)}) or six positive numbers") from error


def _scenario_point(name: str, v_cell: float) -> OperatingPoint:
    t_fur, q_air, q_st = SCENARIOS[name]
    return OperatingPoint(t_fur=t_fur, q_air=q_air, q_st=q_st, v_cell=v_cell)


def _open_circuit_reference(op: OperatingPoint, params: CellParameters) -> CellSolution:
    reference = op.model_copy(update={"v_cell": open_circuit_voltage(op, params)})
    return simulate_cell_detailed(reference, params, check_domain=False)


def cmd_simulate(ctx: CommandContext) -> None:
    params = ctx.cell_parameters()
    op = _scenario_point(ctx.args.scenario, ctx.args.vcell)
    solution = simulate_cell_detailed(op, params, check_domain=False)
    reference = _open_circuit_reference(op, params)
    writer = ctx.writer()
    writer.write_frame(f"simulate_{ctx.args.scenario}.csv", iv_frame([IvPoint(v_cell=op.v_cell, solution=solution)], reference))
    writer.write_manifest("simulate", ctx.settings.app_version)
    response = solution.response
    summary = {
        "scenario": ctx.args.scenario,
        "v_cell": op.v_cell,
        **{f"i_{name}": getattr(response, f"i_{name}") for name in SEGMENTS},
        "t_max": response.t_max,
        "t_min": response.t_min,
        "su": (solution.steam_in - solution.steam_out) / solution.steam_in,
        "su_ceiling": utilisation_ceiling(op.q_st, params),
        "iterations": solution.iterations,
    }
    print(json.dumps(summary))


def _voltage_grid(v_min: float, v_max: float, v_step: float) -> list[float]:
    if v_step <= 0 or v_max < v_min:
        raise UsageError("--vstep must be positive and --vmax at least --vmin")
    count = int(round((v_max - v_min) / v_step)) + 1
    return [round(v_min + index * v_step, 10) for index in range(count)]


def cmd_iv(ctx: CommandContext) -> None:
    params = ctx.cell_parameters()
    grid = _voltage_grid(ctx.args.vmin, ctx.args.vmax, ctx.args.vstep)
    base = _scenario_point(ctx.args.scenario, grid[0])
    points = iv_sweep(base, grid, params, check_domain=False)
    reference = _open_circuit_reference(base, params)
    writer = ctx.writer()
    writer.write_frame(f"iv_{ctx.args.scenario}.csv", iv_frame(points, reference))
    writer.write_manifest("iv", ctx.settings.app_version)


def cmd_campaign(ctx: CommandContext) -> None:
    config = ctx.config
    writer = ctx.writer()
    n = ctx.args.n or config.campaign_size
    dataset = sample_campaign(
        n,
        config.ranges,
        ctx.seed(config.campaign_seed),
        ctx.cell_parameters(),
        train_count=config.train_count,
        workers=ctx.workers,
    )
    path = writer.path("dataset.csv")
    save_csv(dataset, path)
    writer.register(path)
    writer.write_manifest("campaign", ctx.settings.app_version)


def cmd_fetch(ctx: CommandContext) -> None:
    writer = ctx.writer()
    path = fetch_published(ctx.args.url, writer.path("published.csv"), ctx.settings)
    writer.register(path)
    writer.write_manifest("fetch", ctx.settings.app_version)


def cmd_train(ctx: CommandContext) -> None:
    config = ctx.config
    data = ctx.args.data or config.dataset_path
    if data is None:
        raise UsageError("--data is required (or dataset_path in the run config)")
    column_map = {**config.column_map, **parse_column_map(ctx.args.map)}
    dataset = load_external(
        Path(data),
        column_map=column_map or None,
        seed=config.split_seed,
        train_count=config.train_count,
        on_out_of_range=ctx.args.on_out_of_range,
    )
    writer = ctx.writer()
    ensemble = train_lm(dataset, config.hidden_sizes, config.lm, ctx.seed(config.train_seed), workers=ctx.workers)
    model_path = writer.path("model.bin")
    save_model(ensemble, model_path)
    writer.register(model_path)
    writer.write_frame("surrogate_parity.csv", parity_frame(parity_report(ensemble, dataset), ensemble.reports))
    writer.write_manifest("train", ctx.settings.app_version)


def _write_sobol(ctx: CommandContext, writer: ReportWriter, model: SurrogateEnsemble) -> None:
    results = index_report(model, ctx.config.ranges, ctx.config.sobol_n_base, ctx.seed(ctx.config.sobol_seed))
    writer.write_frame("sobol_indices.csv", sobol_table(results))
    raw = [
        {"target": target, "input": name, "s": s, "st": st, "s_conf": s_conf, "st_conf": st_conf, "n_base": result.n_base}
        for target, result in results.items()
        for name, s, st, s_conf, st_conf in zip(result.names, result.s, result.st, result.s_conf, result.st_conf)
    ]
    writer.write_frame("sobol_estimates.csv", pd.DataFrame(raw))


def cmd_sobol(ctx: CommandContext) -> None:
    model = ctx.model()
    writer = ctx.writer()
    _write_sobol(ctx, writer, model)
    writer.write_manifest("sobol", ctx.settings.app_version)


def _write_contour(ctx: CommandContext, writer: ReportWriter, model: SurrogateEnsemble) -> None:
    contour = ctx.config.contour
    nodes = contour_scan(contour.t_fur_levels, contour.q_st_levels, contour.su_levels, model, q_air=ctx.config.q_air_fixed)
    writer.write_frame("contour.csv", contour_frame(nodes))
    writer.write_frame("objective_relationships.csv", pd.DataFrame(objective_relationships(nodes)))


def cmd_contour(ctx: CommandContext) -> None:
    model = ctx.model()
    writer = ctx.writer()
    _write_contour(ctx, writer, model)
    writer.write_manifest("contour", ctx.settings.app_version)


def _build_fronts(ctx: CommandContext, model: SurrogateEnsemble) -> list[ParetoFront]:
    return sweep_power(ctx.powers(), ctx.grid(), model, q_air=ctx.config.q_air_fixed, workers=ctx.workers)


def cmd_pareto(ctx: CommandContext) -> None:
    model = ctx.model()
    writer = ctx.writer()
    fronts = _build_fronts(ctx, model)
    writer.write_frame("pareto_fronts.csv", front_frame(fronts))
    writer.write_manifest("pareto", ctx.settings.app_version)


def _write_curves(ctx: CommandContext, writer: ReportWriter, fronts: Sequence[ParetoFront]) -> None:
    for case, weights in ctx.weight_cases().items():
        curve = operating_curve(fronts, weights)
        chosen, best, worst = curve_frames(curve)
        writer.write_frame(f"operating_curve_{case}.csv", chosen)
        writer.write_frame(f"operating_curve_{case}_best.csv", best)
        writer.write_frame(f"operating_curve_{case}_worst.csv", worst)
        for point in curve.points:
            if abs(point.p_ele - ctx.config.decision_power) < 1e-9:
                writer.write_frame(f"decision_table_{case}.csv", decision_table(point), index=True)


def cmd_linmap(ctx: CommandContext) -> None:
    fronts = read_fronts(Path(ctx.args.fronts), q_air=ctx.config.q_air_fixed)
    writer = ctx.writer()
    _write_curves(ctx, writer, fronts)
    writer.write_manifest("linmap", ctx.settings.app_version)


def cmd_report(ctx: CommandContext) -> None:
    """Contour tables, sensitivity table, fronts, operating curves and decision tables in one directory."""

    model = ctx.model()
    writer = ctx.writer()
    _write_contour(ctx, writer, model)
    _write_sobol(ctx, writer, model)
    fronts = _build_fronts(ctx, model)
    writer.write_frame("pareto_fronts.csv", front_frame(fronts))
    _write_curves(ctx, writer, fronts)
    data = ctx.args.data or ctx.config.dataset_path
    if data is not None:
        column_map = {**ctx.config.column_map, **parse_column_map(ctx.args.map)}
        dataset = load_external(Path(data), column_map=column_map or None, seed=ctx.config.split_seed, train_count=ctx.config.train_count)
        writer.write_frame("surrogate_parity.csv", parity_frame(parity_report(model, dataset), model.reports))
    writer.write_manifest("report", ctx.settings.app_version)


COMMANDS: dict[str, Callable[[CommandContext], None]] = {
    "simulate": cmd_simulate,
    "iv": cmd_iv,
    "campaign": cmd_campaign,
    "fetch": cmd_fetch,
    "train": cmd_train,
    "sobol": cmd_sobol,
    "contour": cmd_contour,
    "pareto": cmd_pareto,
    "linmap": cmd_linmap,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--out", type=Path, help="output directory (must be new or empty)")
    common.add_argument("--seed", type=int, help="override the command's seed")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="soec-opt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="simulate a validation scenario")
    simulate.add_argument("--scenario", choices=sorted(SCENARIOS), required=True)
    simulate.add_argument("--vcell", type=float, required=True)

    iv = sub.add_parser("iv", parents=[common], help="polarisation sweep of a validation scenario")
    iv.add_argument("--scenario", choices=sorted(SCENARIOS), required=True)
    iv.add_argument("--vmin", type=float, default=1.0)
    iv.add_argument("--vmax", type=float, default=1.7)
    iv.add_argument("--vstep", type=float, default=0.02)

    campaign = sub.add_parser("campaign", parents=[common], help="sample the simulator into a dataset")
    campaign.add_argument("--n", type=int, help="number of points")

    fetch = sub.add_parser("fetch", parents=[common], help="download a published dataset")
    fetch.add_argument("--url", required=True)

    data_flags = argparse.ArgumentParser(add_help=False)
    data_flags.add_argument("--data", type=Path, help="dataset CSV")
    data_flags.add_argument("--map", help="column map, e.g. t_fur=Tfur,q_st=Qst")

    train = sub.add_parser("train", parents=[common, data_flags], help="train the surrogate ensemble")
    train.add_argument("--on-out-of-range", choices=["raise", "skip"], default="raise")

    model_flag = argparse.ArgumentParser(add_help=False)
    model_flag.add_argument("--model", type=Path, help="surrogate model file")

    sub.add_parser("sobol", parents=[common, model_flag], help="Sobol indices of SU, IH_I and IH_T")
    sub.add_parser("contour", parents=[common, model_flag], help="V_cell contour scan")

    power_flags = argparse.ArgumentParser(add_help=False)
    power_flags.add_argument("--power-min", type=float)
    power_flags.add_argument("--power-max", type=float)
    power_flags.add_argument("--power-step", type=float)

    weight_flag = argparse.ArgumentParser(add_help=False)
    weight_flag.add_argument("--weights", help="case1, case2 or six comma-separated weights")

    sub.add_parser("pareto", parents=[common, model_flag, power_flags], help="Pareto fronts over the power sweep")
    linmap = sub.add_parser("linmap", parents=[common, weight_flag], help="LINMAP operating curves from a front file")
    linmap.add_argument("--fronts", type=Path, required=True)
    sub.add_parser(
        "report",
        parents=[common, model_flag, power_flags, weight_flag, data_flags],
        help="every table in one directory with a manifest",
    )
    return parser


def _defaults(args: argparse.Namespace) -> argparse.Namespace:
    for name in ("seed", "model", "data", "map", "weights", "power_min", "power_max", "power_step", "n", "fronts"):
        if not hasattr(args, name):
            setattr(args, name, None)
    if not hasattr(args, "on_out_of_range"):
        args.on_out_of_range = "raise"
    return args


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = _defaults(parser.parse_args(argv))
    settings = get_settings()
    configure_logging(args.log_level or settings.log_level)

    try:
        config = load_run_config(args.config)
        ctx = CommandContext(args, settings, config)
        LOGGER.info("Command started", extra={"command": args.command})
        COMMANDS[args.command](ctx)
    except UsageError as error:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except SoecError as error:
        LOGGER.error("Command failed", extra={"command": args.command, "code": error.code})
        print(json.dumps(error.to_payload(), default=str), file=sys.stderr)
        return EXIT_FAILURE
    LOGGER.info("Command finished", extra={"command": args.command})
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
