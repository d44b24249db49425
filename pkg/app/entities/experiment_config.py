from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field, field_validator

from app.entities.trajectory import BoundaryKind


class ExperimentKind(str, Enum):
    simulate = "simulate"
    commutation = "commutation"
    theta = "theta"
    alpha = "alpha"
    trace = "trace"
    resample = "resample"
    chains = "chains"
    audit = "audit"
    tailcheck = "tailcheck"
    neverflip = "neverflip"


TRANSPORT_RULES = ("identity", "larger_neighbor", "nearest_below")
DEFAULT_COMMUTATION_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


class ExperimentConfig(BaseModel):
    """One batch experiment. Unknown keys are rejected."""
    kind: ExperimentKind
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    replicas: int = Field(default=1000, gt=0)
    radius: int = Field(default=8, ge=0)
    horizon: float = Field(default=4.0, ge=0)
    p: Optional[float] = Field(default=None, ge=0, le=1)
    p_grid: Optional[tuple[float, ...]] = None
    boundary: BoundaryKind = BoundaryKind.frozen_initial
    sign: int = Field(default=1, ge=-1, le=1)
    depth: int = Field(default=8, ge=0)
    r: int = Field(default=0, ge=0)
    distances: tuple[int, ...] = (2, 4, 6, 8)
    window: int = Field(default=4, ge=0)
    epsilon: float = Field(default=0.01, gt=0, lt=0.5)
    step: float = Field(default=0.02, gt=0, le=0.5)
    length: int = Field(default=20, gt=0)
    times: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    rule: Optional[str] = None
    miss_tolerance: float = Field(default=0.01, ge=0, le=1)
    label_time: float = Field(default=1.0, ge=0)
    r_schedule: Optional[tuple[int, ...]] = None
    fixation: bool = True
    target: str = ""
    resample_clock: bool = False
    cross_check: bool = False
    model_config = {
        'extra': 'forbid',
        'frozen': True,
    }

    @field_validator("p_grid", "distances", "times", "r_schedule", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return tuple(item.strip() for item in value.split(",") if item.strip())
        return value

    @field_validator("rule")
    @classmethod
    def _check_rule(cls, rule):
        if rule is not None and rule not in TRANSPORT_RULES:
            raise ValueError(f"rule must be one of {', '.join(TRANSPORT_RULES)}")
        return rule

    @field_validator("sign")
    @classmethod
    def _check_sign(cls, sign):
        if sign == 0:
            raise ValueError("sign must be -1 or +1")
        return sign

    @field_validator("p_grid")
    @classmethod
    def _check_grid(cls, grid):
        if grid is not None and any(not 0 <= p <= 1 for p in grid):
            raise ValueError("every grid density must lie in [0, 1]")
        return grid

    @field_validator("r_schedule")
    @classmethod
    def _check_schedule(cls, schedule):
        if schedule is not None and (not schedule or list(schedule) != sorted(set(schedule)) or schedule[0] < 0):
            raise ValueError("radius schedule must be nonempty and strictly increasing")
        return schedule

    @property
    def densities(self) -> tuple[float, ...]:
        if self.p_grid is not None:
            return self.p_grid
        if self.p is not None:
            return (self.p,)
        return DEFAULT_COMMUTATION_GRID
