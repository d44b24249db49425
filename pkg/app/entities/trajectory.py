from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, model_validator

from app.entities.ball import Ball
from app.entities.seed_manifest import SeedManifest
from app.entities.spin import HIGH_ORIGIN, LOW_ORIGIN, Spin

# origin codes of the sentinel spins; nonnegative codes are ball indices
LOW_CODE = -1
HIGH_CODE = -2
NO_ORIGIN = -3


class BoundaryKind(str, Enum):
    free = "free"
    frozen_initial = "frozen_initial"
    frozen_low = "frozen_low"
    frozen_high = "frozen_high"
    frozen_discrete = "frozen_discrete"


class BoundaryCondition(BaseModel):
    kind: BoundaryKind
    sign: Optional[int] = None
    model_config = {
        'frozen': True
    }

    @model_validator(mode="after")
    def _check_sign(self):
        if self.kind == BoundaryKind.frozen_discrete and self.sign not in (-1, 1):
            raise ValueError("frozen_discrete needs sign -1 or +1")
        if self.kind != BoundaryKind.frozen_discrete and self.sign is not None:
            raise ValueError(f"{self.kind.value} takes no sign")
        return self

    @classmethod
    def free(cls):
        return cls(kind=BoundaryKind.free)

    @classmethod
    def frozen_initial(cls):
        return cls(kind=BoundaryKind.frozen_initial)

    @classmethod
    def frozen_low(cls):
        return cls(kind=BoundaryKind.frozen_low)

    @classmethod
    def frozen_high(cls):
        return cls(kind=BoundaryKind.frozen_high)

    @classmethod
    def frozen_discrete(cls, sign: int):
        return cls(kind=BoundaryKind.frozen_discrete, sign=sign)

    @property
    def is_frozen(self) -> bool:
        return self.kind != BoundaryKind.free


class ModeKind(str, Enum):
    median = "median"
    discrete = "discrete"


class RunMode(BaseModel):
    kind: ModeKind
    p: Optional[float] = None
    model_config = {
        'frozen': True
    }

    @model_validator(mode="after")
    def _check_density(self):
        if self.kind == ModeKind.discrete and (self.p is None or not 0.0 <= self.p <= 1.0):
            raise ValueError("discrete mode needs a density p in [0, 1]")
        return self

    @classmethod
    def median(cls):
        return cls(kind=ModeKind.median)

    @classmethod
    def discrete(cls, p: float):
        return cls(kind=ModeKind.discrete, p=p)


@dataclass
class FlipLog:
    """Columnar flip log. Discrete logs carry signs in the value columns and no origins."""
    discrete: bool = False
    vertex: list[int] = field(default_factory=list)
    time: list[float] = field(default_factory=list)
    old_origin: list[int] = field(default_factory=list)
    new_origin: list[int] = field(default_factory=list)
    old_value: list[float] = field(default_factory=list)
    new_value: list[float] = field(default_factory=list)
    neighbor_origins: list[tuple[int, int, int]] = field(default_factory=list)
    neighbor_values: list[tuple[float, float, float]] = field(default_factory=list)

    def __len__(self):
        return len(self.vertex)

    def append(self, vertex, time, old_origin, new_origin, old_value, new_value, neighbor_origins, neighbor_values):
        self.vertex.append(vertex)
        self.time.append(time)
        self.old_origin.append(old_origin)
        self.new_origin.append(new_origin)
        self.old_value.append(old_value)
        self.new_value.append(new_value)
        self.neighbor_origins.append(neighbor_origins)
        self.neighbor_values.append(neighbor_values)

    def extend(self, other: "FlipLog"):
        for name in ("vertex", "time", "old_origin", "new_origin", "old_value", "new_value",
                     "neighbor_origins", "neighbor_values"):
            getattr(self, name).extend(getattr(other, name))


@dataclass
class Trajectory:
    """One run on one ball with one boundary condition.

    ``ball`` is the simulated lattice: the requested ball of radius ``radius`` plus, for frozen
    boundaries, the frozen layer at distance ``radius + 1``. Median trajectories store values and
    origin codes; discrete trajectories store signs in ``initial_values`` / ``final_values``.
    """
    manifest: SeedManifest
    ball: Ball
    radius: int
    boundary: BoundaryCondition
    mode: RunMode
    horizon: float
    initial_values: np.ndarray
    initial_origins: Optional[np.ndarray]
    final_values: np.ndarray
    final_origins: Optional[np.ndarray]
    flips: FlipLog
    event_count: int

    @property
    def is_discrete(self) -> bool:
        return self.initial_origins is None

    @property
    def dynamic_mask(self) -> np.ndarray:
        return self.ball.distance <= self.radius

    @property
    def dynamic_indices(self) -> np.ndarray:
        return np.flatnonzero(self.dynamic_mask)

    @property
    def window_boundary(self) -> np.ndarray:
        """Indices of the outermost simulated layer (distance == radius)."""
        return np.flatnonzero(self.ball.distance == self.radius)

    def origin_address(self, code: int) -> str:
        if code == LOW_CODE:
            return LOW_ORIGIN
        if code == HIGH_CODE:
            return HIGH_ORIGIN
        return self.ball.addresses[code]

    def _spin(self, value, origin):
        if origin is None or origin == NO_ORIGIN:
            return int(value)
        return Spin(value=float(value), origin=self.origin_address(int(origin)))

    def state_at(self, time: float) -> tuple[np.ndarray, Optional[np.ndarray]]:
        """Configuration at ``time`` (after every flip at or before it)."""
        if time >= self.horizon:
            values = self.final_values.copy()
            origins = None if self.final_origins is None else self.final_origins.copy()
            return values, origins
        values = self.initial_values.copy()
        origins = None if self.initial_origins is None else self.initial_origins.copy()
        log = self.flips
        for k, t in enumerate(log.time):
            if t > time:
                break
            values[log.vertex[k]] = log.new_value[k]
            if origins is not None:
                origins[log.vertex[k]] = log.new_origin[k]
        return values, origins

    def spin_at(self, address: str, time: Optional[float] = None):
        values, origins = self.state_at(self.horizon if time is None else time)
        i = self.ball.code(address)
        return self._spin(values[i], None if origins is None else origins[i])

    def final_configuration(self) -> dict:
        origins = self.final_origins
        return {
            self.ball.addresses[i]: self._spin(self.final_values[i], None if origins is None else origins[i])
            for i in self.dynamic_indices
        }

    def to_frame(self) -> pd.DataFrame:
        """Flip log in the exported CSV layout."""
        log = self.flips
        addresses = self.ball.addresses
        if log.discrete:
            old_origin = new_origin = [""] * len(log)
        else:
            old_origin = [self.origin_address(c) for c in log.old_origin]
            new_origin = [self.origin_address(c) for c in log.new_origin]
        return pd.DataFrame({
            "vertex_address": [addresses[i] for i in log.vertex],
            "time": [f"{t:.9f}" for t in log.time],
            "old_origin": old_origin,
            "new_origin": new_origin,
            "old_value": log.old_value,
            "new_value": log.new_value,
        })
