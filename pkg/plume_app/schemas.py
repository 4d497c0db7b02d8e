import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import DOMAIN_LENGTH


# --- Flow ---
class SpectrumConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    peak_lengthscale: float = Field(0.31, gt=0, lt=DOMAIN_LENGTH, description="Lengthscale of the most energetic modes")
    rms_velocity: float = Field(0.25, ge=0)
    # Mean flow along +y.
    mean_flow: Tuple[float, float] = (0.0, 0.6)
    correlation_time: float = Field(0.2, gt=0)
    modes: int = Field(128, ge=4, description="Spectral grid points per axis")

    @field_validator('modes')
    def validate_modes(cls, v):
        if v & (v - 1):
            raise ValueError('modes must be a power of two')
        return v

    @model_validator(mode='after')
    def validate_resolution(self):
        if self.peak_lengthscale <= 2 * DOMAIN_LENGTH / self.modes:
            raise ValueError('peak_lengthscale must exceed two grid spacings of the spectral grid')
        return self

    @property
    def mean_speed(self) -> float:
        return math.hypot(*self.mean_flow)


# --- Scalar ---
class ScalarConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    grid_size: int = Field(512, ge=64)
    source: Tuple[float, float] = (0.5, 0.1)
    source_amplitude: float = Field(1.0, ge=0)
    decay_rate: float = Field(4.0, ge=0)
    source_width: float = Field(2.0, ge=1.0, description="Gaussian source width in grid cells")

    @field_validator('source')
    def validate_source(cls, v):
        if not all(0.0 <= c < DOMAIN_LENGTH for c in v):
            raise ValueError('source must lie inside the domain')
        return v


# --- Swarm ---
ZoneResponse = Literal['trigonometric', 'linear']


class SwarmConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_agents: int = Field(60, ge=1)
    speed: float = Field(1.6, gt=0)
    turn_cap: float = Field(140.0, gt=0, description="Maximum angular speed, rad per time unit")
    turn_gain: float = Field(140.0, gt=0, description="Turn rate per radian of heading error")
    repulsion_radius: float = Field(2e-3, gt=0)
    r_orient_max: float = Field(0.075, gt=0)
    r_attract_max: float = Field(0.125, gt=0, lt=DOMAIN_LENGTH / 2)
    memory_timescale: float = Field(12.5e-3, ge=0, description="alpha; 0 disables memory")
    dt: float = Field(2.5e-4, gt=0)
    concentration_floor: float = Field(1e-6, gt=0, description="Fraction of the steady source peak")
    zone_response: ZoneResponse = 'trigonometric'

    @model_validator(mode='after')
    def validate_zones(self):
        if not self.repulsion_radius < self.r_orient_max < self.r_attract_max:
            raise ValueError('zone ordering requires repulsion_radius < r_orient_max < r_attract_max')
        if self.dt * self.turn_cap >= math.pi:
            raise ValueError('dt * turn_cap must stay below pi')
        return self


# --- Trials ---
class TrialConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    swarm: SwarmConfig = SwarmConfig()
    flow: SpectrumConfig = SpectrumConfig()
    scalar: ScalarConfig = ScalarConfig()
    spin_up_time: float = Field(2.0, ge=0)
    max_time: float = Field(3.0, gt=0)
    success_radius: float = Field(0.025, gt=0)
    start_distance: float = Field(0.8, gt=0, lt=DOMAIN_LENGTH)
    n_trials: int = Field(1000, ge=1)
    base_seed: int = Field(0, ge=0)
    record_interval: float = Field(0.375, gt=0)

    @model_validator(mode='after')
    def validate_trial(self):
        net = self.swarm.speed - self.flow.mean_speed
        if net <= 0:
            raise ValueError('speed must exceed the mean flow speed for upstream travel')
        if self.max_time < self.start_distance / net:
            raise ValueError('max_time must cover start_distance / (speed - mean flow speed)')
        if self.swarm.dt > self.flow.correlation_time / 10:
            raise ValueError('dt must not exceed correlation_time / 10')
        return self


class SweepPlan(BaseModel):
    """Axis values; an empty list means the trial configuration's own value."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_agents: List[int] = []
    repulsion_radius: List[float] = []
    alpha: List[float] = []
    correlation_time: List[float] = []
    decay_rate: List[float] = []


# --- Outputs ---
class OutputConfig(BaseModel):
    """What a command writes besides its primary table."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_transects: int = Field(10, ge=1)
    snapshot_format: Literal['csv', 'bin'] = 'csv'
    # Field dumps and agent GeoJSON with every record of a run.
    snapshots: bool = False
    # Per-trial time series next to the sweep table.
    write_series: bool = False


class SimulationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    trial: TrialConfig = TrialConfig()
    sweep: SweepPlan = SweepPlan()
    output: OutputConfig = OutputConfig()


# --- Results ---
class TrialResult(BaseModel):
    trial_index: int
    seed: int
    n_agents: int
    n_success: int
    # Time since release, None for agents that did not arrive.
    arrival_times: List[Optional[float]]
    times: List[float] = []
    polarity_series: List[Optional[float]] = []
    nnd_series: List[Optional[float]] = []
    cluster_series: List[int] = []
    area_series: List[float] = []

    @property
    def fraction_arrived_given_success(self) -> Optional[float]:
        if self.n_success == 0:
            return None
        return self.n_success / self.n_agents


class TrialOutcome(BaseModel):
    """What a sweep worker hands back: a result or the reason the trial failed."""
    cell_index: int
    trial_index: int
    result: Optional[TrialResult] = None
    error: Optional[str] = None


class RunManifest(BaseModel):
    config: SimulationConfig
    code_version: str
    command: str
    base_seed: int
    timestamp: str
    outputs: List[str] = []
    notes: List[str] = []
