"""Run configuration.

Every value defaults to the experiment the package was built to reproduce, so
``RunConfig()`` is a complete configuration. Unknown keys are rejected.

"""
from typing import List, Optional, Tuple
import math
import json
from pathlib import Path

from pydantic import Field, validator, root_validator

from .gas import (EXPERIMENT_N_PER_SPIN, EXPERIMENT_N_SPINS, EXPERIMENT_TRAP, SR87, SpeciesParams,
                  TrapGeometry)
from .models import ConfigModel
from .observables import DetectionAxis
from .optics import DriveParams
from .profile import GridSpec
from .schemas import Method, Weighting
from .util import config_hash


def _check_positive(v, field):
    if not (v > 0 and math.isfinite(v)):
        raise ValueError(f"{field.name} must be finite and > 0, got {v}")
    return v


class SpeciesBlock(ConfigModel):
    mass: float = Field(SR87.mass, description="kg")
    wavelength: float = Field(SR87.wavelength, description="Transition wavelength, m")
    linewidth: float = Field(SR87.linewidth, description="Natural linewidth Γ, rad/s")
    i_sat: float = Field(SR87.i_sat, description="Saturation intensity, W/m²")

    _positive = validator("mass", "wavelength", "linewidth", "i_sat", allow_reuse=True)(_check_positive)

    def to_species(self) -> SpeciesParams:
        return SpeciesParams(**self.dict())


class TrapBlock(ConfigModel):
    omega_x: float = Field(EXPERIMENT_TRAP.omega_x, description="rad/s")
    omega_y: float = Field(EXPERIMENT_TRAP.omega_y, description="rad/s")
    omega_z: float = Field(EXPERIMENT_TRAP.omega_z, description="rad/s, imaging axis")
    n_per_spin: int = Field(EXPERIMENT_N_PER_SPIN, description="Atoms per spin component")
    n_spins: int = Field(EXPERIMENT_N_SPINS, description="Populated spin components")

    _positive = validator("omega_x", "omega_y", "omega_z", "n_per_spin", "n_spins",
                          allow_reuse=True)(_check_positive)

    def to_trap(self) -> TrapGeometry:
        return TrapGeometry(omega_x=self.omega_x, omega_y=self.omega_y, omega_z=self.omega_z)

    @property
    def n_atoms_total(self) -> int:
        return self.n_per_spin * self.n_spins


class StateBlock(ConfigModel):
    t_over_tf: float = Field(0.13, description="T/T_F of the sample")

    _positive = validator("t_over_tf", allow_reuse=True)(_check_positive)


class DriveBlock(ConfigModel):
    saturation: float = Field(5.0, description="I/I_sat")
    detuning_gamma: float = Field(40.0, description="Δ/Γ")
    pulse_duration: float = Field(1e-6, description="s")

    _positive = validator("saturation", "pulse_duration", allow_reuse=True)(_check_positive)

    def to_drive(self) -> DriveParams:
        return DriveParams(**self.dict())


class AxisBlock(ConfigModel):
    alpha: float = Field(..., description="Angle to the drive axis, degrees")
    numerical_aperture: float = 0.23
    quantum_efficiency: float = 1.0
    label: Optional[str] = None

    def to_axis(self) -> DetectionAxis:
        return DetectionAxis(**self.dict())

    @root_validator(skip_on_failure=True)
    def check_axis(cls, values):
        DetectionAxis(**values)
        return values


class SuppressionTask(ConfigModel):
    k_over_kf: Optional[float] = Field(None, description="Defaults to the first axis angle")
    kf_over_kr: Optional[float] = Field(None, description="Defaults to the derived value")
    method: Method = Method.quadrature
    n_samples: int = 10 ** 6
    max_terms: int = 2000
    seed: int = 0


class TemperatureSweepTask(ConfigModel):
    grid: List[float] = [round(0.1 + 0.05 * i, 10) for i in range(13)]
    kf_over_kr: float = 0.93
    relative_uncertainty_t: float = 0.0
    relative_uncertainty_kf: float = 0.0
    cone_average: bool = False


class FermiSweepTask(ConfigModel):
    grid: List[float] = [round(0.57 + 0.04 * i, 10) for i in range(10)]
    t_over_tf: float = 0.13
    relative_uncertainty_t: float = 0.0
    relative_uncertainty_kf: float = 0.0
    cone_average: bool = False


class AngularMapTask(ConfigModel):
    t_over_tf: float = 0.1
    kf_over_kr: Optional[float] = None
    n_alpha: int = 37


class LifetimeTask(ConfigModel):
    t_over_tf: float = 0.1
    kf_over_kr: Optional[float] = 0.93
    weighting: Weighting = Weighting.isotropic
    n_nodes: int = 16


class RadialProfileTask(ConfigModel):
    t_over_tf: float = 0.12
    n_x: int = 64
    n_y: int = 64
    pixel_size: float = 0.9e-6
    blur_e2_width: float = 3e-6
    bin_width: float = 0.9e-6
    axis_index: int = 0
    n_nodes: int = 64

    def grid(self) -> GridSpec:
        return GridSpec(n_x=self.n_x, n_y=self.n_y, pixel_size=self.pixel_size)


class PrepulseTask(ConfigModel):
    t_over_tf: float = 0.11
    scatter_rate: float = Field(3e7, description="Events per s per atom")
    durations: List[float] = [0.0, 1e-6, 2e-6, 3e-6, 4e-6, 5e-6]
    axis_index: int = 0
    n_atoms_sim: int = 200_000
    bins: Tuple[int, int, int] = (8, 24, 12)
    seed: int = 0


class BudgetTask(ConfigModel):
    axis_index: int = 0


class TaskBlock(ConfigModel):
    suppression: SuppressionTask = SuppressionTask()
    sweep_temperature: TemperatureSweepTask = TemperatureSweepTask()
    sweep_fermi: FermiSweepTask = FermiSweepTask()
    angular_map: AngularMapTask = AngularMapTask()
    lifetime: LifetimeTask = LifetimeTask()
    radial_profile: RadialProfileTask = RadialProfileTask()
    prepulse: PrepulseTask = PrepulseTask()
    budget: BudgetTask = BudgetTask()


class RunConfig(ConfigModel):
    """All inputs of a run."""
    species: SpeciesBlock = SpeciesBlock()
    trap: TrapBlock = TrapBlock()
    state: StateBlock = StateBlock()
    drive: DriveBlock = DriveBlock()
    detection: List[AxisBlock] = [AxisBlock(alpha=24.0), AxisBlock(alpha=72.0)]
    task: TaskBlock = TaskBlock()

    @validator("detection")
    def check_detection(cls, v):
        if not v:
            raise ValueError("At least one detection axis is required")
        return v

    @root_validator(skip_on_failure=True)
    def check_axis_indices(cls, values):
        n_axes = len(values["detection"])
        task = values["task"]
        for name in ("radial_profile", "prepulse", "budget"):
            index = getattr(task, name).axis_index
            if not 0 <= index < n_axes:
                raise ValueError(f"task.{name}.axis_index {index} outside 0..{n_axes - 1}")
        return values

    def axes(self) -> List[DetectionAxis]:
        return [x.to_axis() for x in self.detection]

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy with every task seed replaced by `seed`."""
        data = json.loads(self.json())
        for name in ("suppression", "prepulse"):
            data["task"][name]["seed"] = seed
        return RunConfig.parse_obj(data)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON of the resolved configuration."""
        return config_hash(json.loads(self.json()))


def load_config(path: Optional[Path] = None) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.parse_file(path)
