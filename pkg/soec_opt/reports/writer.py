"""Write-once artifact directories, CSV layouts of every result, and the run manifest."""

from __future__ import annotations

import hashlib
import json
import logging
from collections.abc import Iterable, Sequence
from datetime import datetime, timezone

UTC = timezone.utc
from pathlib import Path
from typing import Any

import pandas as pd

from soec_opt.core.units import kelvin_to_celsius
from soec_opt.errors import ArtifactIOError, DatasetFormatError, OutputExistsError
from soec_opt.physics.cell import temperature_rise
from soec_opt.schemas.models import (
    OBJECTIVE_NAMES,
    Q_AIR_FIXED,
    SEGMENTS,
    CellSolution,
    ContourNode,
    GridSpec,
    IvPoint,
    ObjectiveVector,
    OperatingCurve,
    ParetoFront,
    ParetoSolution,
    ParityRow,
    TrainingReport,
)

LOGGER = logging.getLogger(__name__)

FRONT_COLUMNS = ["p_ele_W", "t_fur_C", "su", "q_st_sccm", "v_cell_V", "i_tot_A", "ih_i", "ih_t_C", "feasible", "dominated"]
CURVE_COLUMNS = ["p_ele_W", "t_fur_C", "su", "q_st_sccm", "v_cell_V", "i_tot_A", "ih_i", "ih_t_C", "d"]
CONTOUR_COLUMNS = ["t_fur_C", "q_st_sccm", "su", "status", "v_cell_V", "ih_t_C", "ih_i", "q_h2_sccm"]


def default_out_dir(base: Path = Path("runs"), now: datetime | None = None) -> Path:
    stamp = (now or datetime.now(UTC)).strftime("%Y%m%dT%H%M%SZ")
    return base / stamp


class ReportWriter:
    """Collects artifacts in a fresh directory and lists them in ``manifest.json``."""

    def __init__(self, out_dir: Path) -> None:
        if out_dir.exists() and any(out_dir.iterdir()):
            raise OutputExistsError(f"Output directory {out_dir} is not empty", path=str(out_dir))
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as error:
            raise ArtifactIOError(f"Cannot create output directory {out_dir}", path=str(out_dir)) from error
        self.out_dir = out_dir
        self.artifacts: list[Path] = []

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def register(self, path: Path) -> Path:
        if path not in self.artifacts:
            self.artifacts.append(path)
        return path

    def write_frame(self, name: str, frame: pd.DataFrame, index: bool = False) -> Path:
        target = self.path(name)
        if target.exists():
            raise OutputExistsError(f"Artifact {target} already written", path=str(target))
        try:
            frame.to_csv(target, index=index, lineterminator="\n")
        except OSError as error:
            raise ArtifactIOError(f"Cannot write {target}", path=str(target)) from error
        LOGGER.info("Wrote artifact", extra={"path": str(target), "rows": len(frame)})
        return self.register(target)

    def write_json(self, name: str, payload: Any) -> Path:
        target = self.path(name)
        try:
            target.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
        except OSError as error:
            raise ArtifactIOError(f"Cannot write {target}", path=str(target)) from error
        return self.register(target)

    def write_manifest(self, command: str, version: str) -> Path:
        """Relative path, size and SHA-256 of every registered artifact."""

        entries = []
        for artifact in self.artifacts:
            data = artifact.read_bytes()
            entries.append(
                {
                    "path": artifact.relative_to(self.out_dir).as_posix(),
                    "bytes": len(data),
                    "sha256": hashlib.sha256(data).hexdigest(),
                }
            )
        target = self.write_json("manifest.json", {"command": command, "version": version, "artifacts": entries})
        LOGGER.info("Wrote manifest", extra={"path": str(target), "artifacts": len(entries)})
        return target


def _objective(solution: ParetoSolution, name: str) -> float | None:
    return getattr(solution.objectives, name) if solution.objectives else None


def front_frame(fronts: Iterable[ParetoFront]) -> pd.DataFrame:
    """One row per grid node and power, infeasible nodes included with blank values."""

    rows = []
    for front in fronts:
        for node in front.nodes():
            rows.append(
                [
                    front.p_ele,
                    node.t_fur,
                    node.su,
                    node.q_st,
                    node.v_cell,
                    _objective(node, "i_tot"),
                    _objective(node, "ih_i"),
                    _objective(node, "ih_t"),
                    node.feasible,
                    node.dominated,
                ]
            )
    return pd.DataFrame(rows, columns=FRONT_COLUMNS)


def _as_bool(value: object) -> bool:
    return str(value).strip().lower() in {"true", "1"}


def read_fronts(path: Path, q_air: float = Q_AIR_FIXED) -> list[ParetoFront]:
    """Rebuild fronts from the front CSV; grid levels are recovered from the distinct values."""

    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as error:
        raise ArtifactIOError(f"Front file not found: {path}", path=str(path)) from error
    missing = [column for column in FRONT_COLUMNS if column not in frame.columns]
    if missing:
        raise DatasetFormatError(f"Front file {path} lacks columns {missing}", path=str(path), missing=missing)

    fronts = []
    for p_ele, group in frame.groupby("p_ele_W", sort=True):
        grid = GridSpec(
            t_fur_levels=tuple(sorted(group["t_fur_C"].unique())),
            su_levels=tuple(sorted(group["su"].unique())),
        )
        t_index = {value: index for index, value in enumerate(grid.t_fur_levels)}
        su_index = {value: index for index, value in enumerate(grid.su_levels)}
        rows: list[list[ParetoSolution | None]] = [[None] * len(grid.su_levels) for _ in grid.t_fur_levels]
        dominated_log = []
        for record in group.itertuples(index=False):
            i, j = t_index[record.t_fur_C], su_index[record.su]
            feasible = _as_bool(record.feasible)
            dominated = _as_bool(record.dominated)
            fields: dict[str, Any] = {}
            if feasible:
                fields = {
                    "q_st": float(record.q_st_sccm),
                    "v_cell": float(record.v_cell_V),
                    "objectives": ObjectiveVector(
                        ih_i=float(record.ih_i),
                        ih_t=float(record.ih_t_C),
                        v_cell=float(record.v_cell_V),
                        su=float(record.su),
                        t_fur=float(record.t_fur_C),
                        i_tot=float(record.i_tot_A),
                    ),
                }
            if dominated:
                dominated_log.append((i, j))
            rows[i][j] = ParetoSolution(
                t_fur_index=i,
                su_index=j,
                t_fur=float(record.t_fur_C),
                su=float(record.su),
                q_air=q_air,
                feasible=feasible,
                dominated=dominated,
                **fields,
            )
        if any(node is None for row in rows for node in row):
            raise DatasetFormatError(f"Front at {p_ele} W in {path} does not cover its grid", path=str(path), p_ele=p_ele)
        fronts.append(ParetoFront(p_ele=float(p_ele), grid=grid, solutions=rows, dominated_log=dominated_log))
    return fronts


def curve_frames(curve: OperatingCurve) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """Chosen points plus the best and worst objective envelopes per power."""

    chosen, best, worst = [], [], []
    for point in curve.points:
        node = point.solution
        chosen.append(
            [
                point.p_ele,
                node.t_fur,
                node.su,
                node.q_st,
                node.v_cell,
                _objective(node, "i_tot"),
                _objective(node, "ih_i"),
                _objective(node, "ih_t"),
                point.distance,
            ]
        )
        best.append([point.p_ele, *(point.best[name] for name in OBJECTIVE_NAMES)])
        worst.append([point.p_ele, *(point.worst[name] for name in OBJECTIVE_NAMES)])
    envelope_columns = ["p_ele_W", *OBJECTIVE_NAMES]
    return (
        pd.DataFrame(chosen, columns=CURVE_COLUMNS),
        pd.DataFrame(best, columns=envelope_columns),
        pd.DataFrame(worst, columns=envelope_columns),
    )


def contour_frame(nodes: Sequence[ContourNode]) -> pd.DataFrame:
    rows = [[n.t_fur, n.q_st, n.su, n.status, n.v_cell, n.ih_t, n.ih_i, n.q_h2] for n in nodes]
    return pd.DataFrame(rows, columns=CONTOUR_COLUMNS)


def parity_frame(rows: Sequence[ParityRow], reports: dict[str, TrainingReport]) -> pd.DataFrame:
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=["target", "split", "count", "rmse", "r2"])
    frame["n_hidden"] = [reports[row.target].n_hidden if row.target in reports else None for row in rows]
    frame["epochs"] = [reports[row.target].epochs if row.target in reports else None for row in rows]
    return frame


def iv_frame(points: Sequence[IvPoint], reference: CellSolution | None = None) -> pd.DataFrame:
    """Polarisation sweep with per-segment currents, temperatures and rise over ``reference``."""

    columns = ["v_cell_V", "i_tot_A"]
    columns += [f"i_{name}_A" for name in SEGMENTS]
    columns += [f"t_{name}_C" for name in SEGMENTS]
    columns += [f"dt_{name}_K" for name in SEGMENTS]
    columns += ["error"]
    rows = []
    for point in points:
        if point.solution is None:
            rows.append([point.v_cell, *([None] * (len(columns) - 2)), point.error])
            continue
        segments = point.solution.segments
        rise = temperature_rise(point.solution, reference) if reference else (None, None, None)
        rows.append(
            [
                point.v_cell,
                point.solution.response.i_tot,
                *(segment.current for segment in segments),
                *(kelvin_to_celsius(segment.temperature) for segment in segments),
                *rise,
                "",
            ]
        )
    return pd.DataFrame(rows, columns=columns)
