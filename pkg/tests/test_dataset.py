"""Tests for sampling campaigns and dataset CSV files."""

from __future__ import annotations

from pathlib import Path

import pytest

from soec_opt.config.settings import InputRanges
from soec_opt.dataset import campaign as campaign_module
from soec_opt.dataset.campaign import build_dataset, default_train_count, sample_campaign, split_indices
from soec_opt.dataset.io import CANONICAL_COLUMNS, load_external, parse_column_map, save_csv
from soec_opt.errors import (
    CampaignAbortedError,
    DatasetFormatError,
    EmptyDatasetError,
    MissingColumnError,
    NonNumericCellError,
    OutOfRangeError,
    StarvationError,
)
from soec_opt.physics.parameters import default_cell_parameters
from soec_opt.schemas.models import CellResponse, OperatingPoint, SamplePoint

PARAMS = default_cell_parameters()
HEADER = ",".join(CANONICAL_COLUMNS)


def _point(v_cell: float = 1.3) -> SamplePoint:
    return SamplePoint(
        inputs=OperatingPoint(t_fur=700.0, q_air=100.0, q_st=80.0, v_cell=v_cell),
        outputs=CellResponse(t_max=701.5, t_min=700.25, i_up=1.0 + v_cell, i_mid=1.0, i_down=0.5),
        source="reduced-model",
    )


def _write(tmp_path: Path, lines: list[str]) -> Path:
    path = tmp_path / "data.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_default_train_count_keeps_published_proportion() -> None:
    assert default_train_count(1764) == 1500
    assert default_train_count(200) == 170


def test_split_is_a_seeded_partition() -> None:
    train, test = split_indices(50, seed=4)

    assert sorted(train + test) == list(range(50))
    assert len(train) == default_train_count(50)
    assert split_indices(50, seed=4) == (train, test)
    assert split_indices(50, seed=5) != (train, test)


def test_campaign_is_deterministic_and_in_range() -> None:
    ranges = InputRanges()
    first = sample_campaign(8, ranges, seed=21, params=PARAMS, train_count=6)
    second = sample_campaign(8, ranges, seed=21, params=PARAMS, train_count=6)

    assert first == second
    assert len(first.train_idx) == 6
    for point in first.points:
        assert point.inputs.in_domain()
        assert point.source == "reduced-model"


def test_campaign_redraws_failed_points(monkeypatch) -> None:
    calls = {"count": 0}
    real = campaign_module.simulate_cell

    def _flaky(op, params):
        calls["count"] += 1
        if calls["count"] == 2:
            raise StarvationError("starved", segment="down")
        return real(op, params)

    monkeypatch.setattr(campaign_module, "simulate_cell", _flaky)
    dataset = sample_campaign(6, InputRanges(), seed=2, params=PARAMS)

    assert len(dataset.points) == 6
    assert calls["count"] == 7


def test_campaign_aborts_when_failures_dominate(monkeypatch) -> None:
    def _always_starved(op, params):
        raise StarvationError("starved", segment="up")

    monkeypatch.setattr(campaign_module, "simulate_cell", _always_starved)
    with pytest.raises(CampaignAbortedError) as caught:
        sample_campaign(10, InputRanges(), seed=2, params=PARAMS)

    assert caught.value.details["redraws"] > 2


def test_save_and_load_preserve_values(tmp_path: Path) -> None:
    dataset = build_dataset([_point(1.1), _point(1.2), _point(1.3)], seed=1, train_count=2)
    path = tmp_path / "dataset.csv"
    save_csv(dataset, path)

    loaded = load_external(path, seed=1, train_count=2)

    assert path.read_text(encoding="utf-8").splitlines()[0] == HEADER
    assert [p.inputs for p in loaded.points] == [p.inputs for p in dataset.points]
    assert [p.outputs for p in loaded.points] == [p.outputs for p in dataset.points]
    assert loaded.train_idx == dataset.train_idx
    assert all(point.source == "external" for point in loaded.points)


def test_column_map_renames_file_columns(tmp_path: Path) -> None:
    columns = ["Tfur", "q_air_sccm", "Qst", "v_cell_V", "t_max_C", "t_min_C", "i_up_A", "i_mid_A", "i_down_A"]
    path = _write(tmp_path, [",".join(columns), "700,100,80,1.3,701,700,2,1.5,1"])

    loaded = load_external(path, column_map=parse_column_map("t_fur=Tfur,q_st=Qst"))

    assert loaded.points[0].inputs.t_fur == 700.0
    assert loaded.points[0].inputs.q_st == 80.0


def test_missing_column_is_named(tmp_path: Path) -> None:
    path = _write(tmp_path, [HEADER.replace(",i_down_A", ""), "700,100,80,1.3,701,700,2,1.5"])

    with pytest.raises(MissingColumnError) as caught:
        load_external(path)

    assert caught.value.details["missing"] == ["i_down_A"]


def test_non_numeric_cell_reports_line_and_column(tmp_path: Path) -> None:
    path = _write(tmp_path, [HEADER, "700,100,80,1.3,701,700,2,1.5,1", "700,100,abc,1.3,701,700,2,1.5,1"])

    with pytest.raises(NonNumericCellError) as caught:
        load_external(path)

    assert caught.value.details["line"] == 3
    assert caught.value.details["column"] == "q_st_sccm"


@pytest.mark.parametrize("content", ["", HEADER + "\n"])
def test_empty_files_are_rejected(tmp_path: Path, content: str) -> None:
    path = tmp_path / "empty.csv"
    path.write_text(content, encoding="utf-8")

    with pytest.raises(EmptyDatasetError):
        load_external(path)


def test_out_of_range_rows_raise_or_skip(tmp_path: Path) -> None:
    path = _write(tmp_path, [HEADER, "700,100,80,1.3,701,700,2,1.5,1", "950,100,80,1.3,951,950,2,1.5,1"])

    with pytest.raises(OutOfRangeError) as caught:
        load_external(path)
    assert caught.value.details["lines"] == [3]

    loaded = load_external(path, on_out_of_range="skip", train_count=1)
    assert len(loaded.points) == 1


def test_inconsistent_outputs_are_rejected(tmp_path: Path) -> None:
    path = _write(tmp_path, [HEADER, "700,100,80,1.3,699,700,2,1.5,1"])

    with pytest.raises(DatasetFormatError) as caught:
        load_external(path)

    assert caught.value.details["line"] == 2


def test_malformed_column_map_is_rejected() -> None:
    with pytest.raises(DatasetFormatError):
        parse_column_map("t_fur")


def test_empty_dataset_saves_header_only(tmp_path: Path) -> None:
    path = tmp_path / "empty.csv"

    save_csv(build_dataset([], seed=1), path)

    assert path.read_text(encoding="utf-8") == HEADER + "\n"


def test_single_point_campaign_goes_to_train_split() -> None:
    dataset = sample_campaign(1, InputRanges(), seed=8, params=PARAMS)

    assert len(dataset.points) == 1
    assert dataset.train_idx == [0]
    assert dataset.test_idx == []
