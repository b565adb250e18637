"""Pydantic schemas used across the simulator, surrogates, optimiser, and reports."""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SegmentName = Literal["up", "mid", "down"]
SampleSource = Literal["reduced-model", "external"]
Electrode = Literal["anode", "cathode"]
CompositionClosure = Literal["arithmetic", "log-mean"]
VCellStatus = Literal["ok", "infeasible_low", "infeasible_high"]

SEGMENTS: tuple[SegmentName, ...] = ("up", "mid", "down")
INPUT_NAMES: tuple[str, ...] = ("t_fur", "q_air", "q_st", "v_cell")
OUTPUT_NAMES: tuple[str, ...] = ("t_max", "t_min", "i_up", "i_mid", "i_down")
# Objective column order used in every table; su and i_tot are maximised, the rest minimised.
OBJECTIVE_NAMES: tuple[str, ...] = ("ih_i", "ih_t", "v_cell", "su", "t_fur", "i_tot")
MAXIMIZED_OBJECTIVES: frozenset[str] = frozenset({"su", "i_tot"})

INPUT_DOMAIN: dict[str, tuple[float, float]] = {
    "t_fur": (600.0, 750.0),
    "q_air": (40.0, 300.0),
    "q_st": (20.0, 150.0),
    "v_cell": (1.0, 1.7),
}

# Air flow held fixed on every optimisation node, sccm.
Q_AIR_FIXED = 100.0


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


class PhysicalConstants(_Frozen):
    """Physical constants in SI units (molar volume in cm³/mol at 25 °C, 1 atm)."""

    faraday: float = 96485.33
    gas_constant: float = 8.314462618
    molar_volume_ref: float = 24465.0
    p_atm: float = 101325.0


CONSTANTS = PhysicalConstants()


class OperatingPoint(_Frozen):
    """The four surrogate inputs."""

    t_fur: float
    q_air: float
    q_st: float
    v_cell: float

    @field_validator("t_fur", "q_air", "q_st", "v_cell")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("operating point values must be finite")
        return value

    def in_domain(self, margin: float = 0.0) -> bool:
        """Whether every input lies inside the surrogate input box, optionally widened by ``margin``."""

        for name in INPUT_NAMES:
            low, high = INPUT_DOMAIN[name]
            pad = margin * (high - low)
            if not low - pad <= getattr(self, name) <= high + pad:
                return False
        return True

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.t_fur, self.q_air, self.q_st, self.v_cell)


class CellResponse(_Frozen):
    """The five surrogate outputs: temperatures in °C, segment currents in A."""

    t_max: float
    t_min: float
    i_up: float
    i_mid: float
    i_down: float
    extrapolated: bool = False

    @model_validator(mode="after")
    def _physical(self) -> "CellResponse":
        if self.t_max < self.t_min:
            raise ValueError("t_max must not be below t_min")
        if min(self.i_up, self.i_mid, self.i_down) < 0:
            raise ValueError("segment currents must be non-negative")
        return self

    @property
    def i_tot(self) -> float:
        return self.i_up + self.i_mid + self.i_down

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.t_max, self.t_min, self.i_up, self.i_mid, self.i_down)


class PerformanceIndices(_Frozen):
    """Inhomogeneity, utilisation, and derived electrical quantities of one state."""

    ih_i: float | None
    ih_t: float
    su: float
    i_tot: float
    q_h2: float
    p_ele: float
    open_circuit: bool = False
    steam_starved: bool = False


class SolverSettings(_Frozen):
    """Fixed-point controls of the three-segment simulator."""

    max_outer_iterations: int = Field(default=200, ge=1)
    current_tol: float = Field(default=1e-8, gt=0)
    temperature_tol: float = Field(default=1e-8, gt=0)
    temperature_damping: float = Field(default=0.5, gt=0, le=1)


class CellParameters(_Frozen):
    """Reduced-order cell parameters, SI units throughout."""

    version: int = 1
    e_ref_0: float = Field(gt=0)
    alpha: float = Field(gt=0, lt=1)
    i0_a_pre: float = Field(gt=0)
    i0_c_pre: float = Field(gt=0)
    e_act_a: float = Field(gt=0)
    e_act_c: float = Field(gt=0)
    asr_ohm_pre: float = Field(gt=0)
    j_lim_h2o: float = Field(gt=0)
    e_act_ohm: float = Field(gt=0)
    delta_s_r: float = Field(gt=0)
    h_fur: float = Field(gt=0)
    k_axial: float = Field(gt=0)
    h_air: float = Field(gt=0)
    seg_area: float = Field(gt=0)
    x_ref_h2: float = Field(gt=0, le=1)
    x_ref_h2o: float = Field(gt=0, le=1)
    x_ref_o2: float = Field(gt=0, le=1)
    x_o2: float = Field(default=0.21, gt=0, le=1)
    p_anode: float = Field(default=101325.0, gt=0)
    h2_carrier_ratio: float = Field(default=1.0, gt=0)
    closure: CompositionClosure = "arithmetic"
    solver: SolverSettings = SolverSettings()


class SegmentState(_Frozen):
    """Converged state of one anode segment."""

    index: SegmentName
    temperature: float
    x_h2o_in: float
    x_h2o_out: float
    current: float
    eta_act_a: float
    eta_act_c: float
    eta_conc: float
    v_ohm: float
    e_ref: float
    q_heat: float

    @model_validator(mode="after")
    def _consumption(self) -> "SegmentState":
        if not 0 < self.x_h2o_out <= self.x_h2o_in < 1:
            raise ValueError("steam fractions must satisfy 0 < x_out <= x_in < 1")
        if self.current < 0:
            raise ValueError("segment current must be non-negative")
        return self


class CellSolution(_Frozen):
    """Detailed simulator output: the response plus per-segment states."""

    response: CellResponse
    segments: tuple[SegmentState, SegmentState, SegmentState]
    steam_in: float
    steam_out: float
    iterations: int


class IvPoint(_Frozen):
    """One voltage of a polarisation sweep; ``solution`` is None for failed points."""

    v_cell: float
    solution: CellSolution | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.solution is None


class SamplePoint(_Frozen):
    """A simulated or ingested input/output pair."""

    inputs: OperatingPoint
    outputs: CellResponse
    source: SampleSource = "reduced-model"


class Dataset(BaseModel):
    """Ordered sample points with a reproducible train/test split."""

    points: list[SamplePoint] = Field(default_factory=list)
    seed: int = 0
    train_idx: list[int] = Field(default_factory=list)
    test_idx: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _split_partition(self) -> "Dataset":
        train, test = set(self.train_idx), set(self.test_idx)
        if train & test:
            raise ValueError("train and test indices overlap")
        if len(train) + len(test) != len(self.points) or train | test != set(range(len(self.points))):
            raise ValueError("train and test indices must partition the points")
        return self

    def subset(self, which: Literal["train", "test"]) -> list[SamplePoint]:
        indices = self.train_idx if which == "train" else self.test_idx
        return [self.points[index] for index in indices]


class SobolResult(BaseModel):
    """First-order and total-effect indices with bootstrap half-widths."""

    names: list[str]
    s: list[float]
    st: list[float]
    s_conf: list[float]
    st_conf: list[float]
    n_base: int
    n_evaluations: int
    variance: float

    def first_order(self, name: str) -> float:
        return self.s[self.names.index(name)]

    def total(self, name: str) -> float:
        return self.st[self.names.index(name)]


class TrainingReport(_Frozen):
    """Outcome of training one output network."""

    target: str
    n_hidden: int
    train_rmse: float
    test_rmse: float
    epochs: int
    restarts: int = 1
    stop_reason: str = ""


class ParityRow(_Frozen):
    """Prediction quality of one output on one split."""

    target: str
    split: Literal["train", "test"]
    count: int
    rmse: float
    r2: float


class VCellSolve(_Frozen):
    """Result of solving the cell voltage that hits a steam-utilisation target."""

    v_cell: float | None
    status: VCellStatus
    sign_changes: int = 0


class ContourNode(_Frozen):
    """One node of the T_fur × Q_st × SU contour grid."""

    t_fur: float
    q_st: float
    su: float
    status: VCellStatus
    v_cell: float | None = None
    ih_t: float | None = None
    ih_i: float | None = None
    q_h2: float | None = None


class GridSpec(_Frozen):
    """Furnace-temperature and steam-utilisation levels of a front grid."""

    t_fur_levels: tuple[float, ...]
    su_levels: tuple[float, ...]

    @field_validator("t_fur_levels", "su_levels")
    @classmethod
    def _increasing(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("grid axis must not be empty")
        if any(later <= earlier for earlier, later in zip(value, value[1:])):
            raise ValueError("grid levels must be strictly increasing")
        return value

    @model_validator(mode="after")
    def _bounds(self) -> "GridSpec":
        low, high = INPUT_DOMAIN["t_fur"]
        if self.t_fur_levels[0] < low or self.t_fur_levels[-1] > high:
            raise ValueError("furnace temperature levels outside the input domain")
        if self.su_levels[0] <= 0 or self.su_levels[-1] >= 1:
            raise ValueError("steam utilisation levels must lie in (0, 1)")
        return self

    @classmethod
    def linear(cls, t_min: float, t_max: float, t_count: int, su_min: float, su_max: float, su_count: int) -> "GridSpec":
        """Evenly spaced levels, both ends included."""

        def _levels(low: float, high: float, count: int) -> tuple[float, ...]:
            if count == 1:
                return (low,)
            step = (high - low) / (count - 1)
            return tuple(round(low + index * step, 10) for index in range(count))

        return cls(t_fur_levels=_levels(t_min, t_max, t_count), su_levels=_levels(su_min, su_max, su_count))

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.t_fur_levels), len(self.su_levels))


class ObjectiveVector(_Frozen):
    """The six objectives of one operating point, raw units."""

    ih_i: float
    ih_t: float
    v_cell: float
    su: float
    t_fur: float
    i_tot: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in OBJECTIVE_NAMES)


class ParetoSolution(_Frozen):
    """Constrained-optimal point at one grid node (infeasible nodes keep their place)."""

    t_fur_index: int
    su_index: int
    t_fur: float
    su: float
    q_air: float
    feasible: bool
    q_st: float | None = None
    v_cell: float | None = None
    objectives: ObjectiveVector | None = None
    power_residual: float | None = None
    su_residual: float | None = None
    dominated: bool = False
    message: str = ""


class ParetoFront(BaseModel):
    """All grid nodes at one electrolysis power, with dominance bookkeeping."""

    p_ele: float
    grid: GridSpec
    solutions: list[list[ParetoSolution]]
    dominated_log: list[tuple[int, int]] = Field(default_factory=list)

    def nodes(self) -> list[ParetoSolution]:
        """Every node, ordered by steam-utilisation index then furnace-temperature index."""

        flat = [solution for row in self.solutions for solution in row]
        return sorted(flat, key=lambda item: (item.su_index, item.t_fur_index))

    def members(self) -> list[ParetoSolution]:
        """Feasible, non-dominated nodes in tie-break order."""

        return [node for node in self.nodes() if node.feasible and not node.dominated]


class WeightVector(_Frozen):
    """Positive LINMAP weights in objective column order."""

    ih_i: float = Field(default=1.0, gt=0)
    ih_t: float = Field(default=1.0, gt=0)
    v_cell: float = Field(default=1.0, gt=0)
    su: float = Field(default=1.0, gt=0)
    t_fur: float = Field(default=1.0, gt=0)
    i_tot: float = Field(default=1.0, gt=0)

    @classmethod
    def from_sequence(cls, values: list[float] | tuple[float, ...]) -> "WeightVector":
        if len(values) != len(OBJECTIVE_NAMES):
            raise ValueError(f"expected {len(OBJECTIVE_NAMES)} weights, got {len(values)}")
        return cls(**dict(zip(OBJECTIVE_NAMES, values)))

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in OBJECTIVE_NAMES)


class LinmapChoice(BaseModel):
    """Chosen solution of one front and the supporting distance table."""

    p_ele: float
    solution: ParetoSolution
    distance: float
    distances: list[float]
    best: dict[str, float]
    worst: dict[str, float]
    rel_to_best: dict[str, float]
    rel_to_worst: dict[str, float]


class OperatingCurve(BaseModel):
    """LINMAP choices across a power sweep."""

    weights: WeightVector
    points: list[LinmapChoice] = Field(default_factory=list)
