"""Application settings loaded from environment variables and run-config files."""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from soec_opt.errors import DomainError
from soec_opt.schemas.models import Q_AIR_FIXED

DEFAULT_CELL_PARAMETERS = Path(__file__).with_name("cell_parameters.toml")


class RetryConfig(BaseModel):
    """Retry behavior for dataset downloads."""

    attempts: int = Field(default=3, ge=1, le=10)
    min_seconds: float = Field(default=0.5, ge=0.1, le=10.0)
    max_seconds: float = Field(default=4.0, ge=0.1, le=20.0)


class InputRanges(BaseModel):
    """Box of the four surrogate inputs (furnace °C, air sccm, steam sccm, volts)."""

    t_fur: tuple[float, float] = (600.0, 750.0)
    q_air: tuple[float, float] = (40.0, 300.0)
    q_st: tuple[float, float] = (20.0, 150.0)
    v_cell: tuple[float, float] = (1.0, 1.7)

    @field_validator("t_fur", "q_air", "q_st", "v_cell")
    @classmethod
    def _ordered(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not value[0] < value[1]:
            raise ValueError("range lower bound must be below upper bound")
        return value

    def as_rows(self) -> list[tuple[float, float]]:
        """Return ranges in the canonical input order."""

        return [self.t_fur, self.q_air, self.q_st, self.v_cell]


class LmConfig(BaseModel):
    """Levenberg-Marquardt trainer settings."""

    max_epochs: int = Field(default=500, ge=1)
    mu0: float = Field(default=1e-3, gt=0)
    mu_dec: float = Field(default=0.1, gt=0, lt=1)
    mu_inc: float = Field(default=10.0, gt=1)
    mu_max: float = Field(default=1e10, gt=0)
    grad_tol: float = Field(default=1e-8, gt=0)
    restarts: int = Field(default=8, ge=1)


class GridConfig(BaseModel):
    """Furnace-temperature × steam-utilisation levels of the front grid."""

    t_fur_min: float = 600.0
    t_fur_max: float = 750.0
    t_fur_count: int = Field(default=16, ge=1)
    su_min: float = 0.5
    su_max: float = 0.9
    su_count: int = Field(default=17, ge=1)


class ContourConfig(BaseModel):
    """Three-axis grid of the V_cell contour scan."""

    t_fur_levels: tuple[float, ...] = (600.0, 650.0, 700.0, 750.0)
    q_st_levels: tuple[float, ...] = tuple(float(q) for q in range(20, 151, 10))
    su_levels: tuple[float, ...] = (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9)


class PowerSweep(BaseModel):
    """Electrolysis power list in watts."""

    power_min: float = Field(default=2.0, gt=0)
    power_max: float = Field(default=27.0, gt=0)
    power_step: float = Field(default=1.0, gt=0)

    def powers(self) -> list[float]:
        """Return the ascending power list, inclusive of both ends."""

        count = int(round((self.power_max - self.power_min) / self.power_step)) + 1
        return [round(self.power_min + index * self.power_step, 10) for index in range(max(count, 0))]


class RunConfig(BaseModel):
    """Everything a pipeline run needs; loaded from ``--config`` and overridden by flags."""

    out_dir: Path | None = None
    dataset_path: Path | None = None
    model_path: Path | None = None
    cell_parameters_path: Path = DEFAULT_CELL_PARAMETERS
    column_map: dict[str, str] = Field(default_factory=dict)

    campaign_size: int = Field(default=1764, ge=1)
    train_count: int | None = None
    ranges: InputRanges = InputRanges()

    hidden_sizes: tuple[int, int, int, int, int] = (10, 10, 10, 5, 5)
    lm: LmConfig = LmConfig()

    sobol_n_base: int = Field(default=4096, ge=256)
    grid: GridConfig = GridConfig()
    contour: ContourConfig = ContourConfig()
    decision_power: float = Field(default=10.0, gt=0)
    sweep: PowerSweep = PowerSweep()
    q_air_fixed: float = Field(default=Q_AIR_FIXED, gt=0)
    weight_cases: dict[str, tuple[float, float, float, float, float, float]] = Field(
        default_factory=lambda: {
            "case1": (1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
            "case2": (1.0, 1.0, 1.0, 5.0, 1.0, 1.0),
        },
    )

    campaign_seed: int = 2023
    split_seed: int = 7
    train_seed: int = 11
    sobol_seed: int = 5


class Settings(BaseSettings):
    """Runtime application settings."""

    model_config = SettingsConfigDict(env_prefix="SOEC_", env_file=".env", env_file_encoding="utf-8", extra="ignore")

    app_name: str = "soec-opt"
    app_version: str = "1.0.0"
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    threads: int = Field(default=1, ge=1, le=256)
    request_timeout_seconds: float = Field(default=30.0, ge=1, le=600)
    retry: RetryConfig = RetryConfig()


def get_settings() -> Settings:
    """Return application settings."""

    return Settings()


def load_run_config(path: Path | None) -> RunConfig:
    """Load a TOML run configuration; a missing path means all defaults."""

    if path is None:
        return RunConfig()
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
        return RunConfig.model_validate(raw)
    except FileNotFoundError as error:
        raise DomainError(f"Run config not found: {path}", path=str(path)) from error
    except (tomllib.TOMLDecodeError, ValidationError) as error:
        raise DomainError(f"Invalid run config {path}: {error}", path=str(path)) from error
