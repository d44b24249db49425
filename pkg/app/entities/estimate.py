import bisect
import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

Z_95 = 1.96


class EstimateWithCI(BaseModel):
    """A Monte Carlo estimate with its 95% normal-approximation halfwidth.

    ``lower`` and ``upper`` bracket the estimate when undetermined replicas are counted as 0 and as 1.
    """
    estimate: float
    replicas: int
    halfwidth: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    undetermined_fraction: float = 0.0
    boundary_fraction: float = 0.0
    flags: list[str] = Field(default_factory=list)

    @property
    def sigma(self) -> float:
        return self.halfwidth / Z_95

    def overlaps(self, other: "EstimateWithCI", sigmas: float = 3.0) -> bool:
        return abs(self.estimate - other.estimate) <= sigmas * (self.sigma + other.sigma)

    def row(self) -> dict:
        return {
            "estimate": self.estimate,
            "ci": self.halfwidth,
            "replicas": self.replicas,
            "lower": self.lower,
            "upper": self.upper,
            "undetermined_fraction": self.undetermined_fraction,
            "boundary_fraction": self.boundary_fraction,
            "flags": ";".join(self.flags),
        }


class SamplerKind(str, Enum):
    sandwich = "sandwich"
    backward = "backward"


class SamplerPolicy(BaseModel):
    kind: SamplerKind = SamplerKind.sandwich
    r_schedule: Optional[tuple[int, ...]] = None
    fixation: bool = True
    model_config = {
        'frozen': True
    }


class ThetaCurve(BaseModel):
    """Empirical CDF of certified root values.

    The point estimate uses certified replicas only; ``bounds`` adds the undetermined replicas as all
    below or all above p.
    """
    horizon: float
    samples: list[float]
    undetermined: int = 0
    proxy_failures: int = 0

    @field_validator("samples")
    @classmethod
    def _sorted(cls, samples):
        return sorted(samples)

    @property
    def replicas(self) -> int:
        return len(self.samples) + self.undetermined

    @property
    def certified(self) -> int:
        return len(self.samples)

    def count_below(self, p: float) -> int:
        return bisect.bisect_right(self.samples, p)

    def cdf(self, p: float) -> float:
        if not self.samples:
            return 0.0
        return self.count_below(p) / len(self.samples)

    def bounds(self, p: float) -> tuple[float, float]:
        if self.replicas == 0:
            return 0.0, 1.0
        below = self.count_below(p)
        return below / self.replicas, (below + self.undetermined) / self.replicas

    def halfwidth(self, p: float) -> float:
        if not self.samples:
            return float("nan")
        theta = self.cdf(p)
        return Z_95 * math.sqrt(theta * (1 - theta) / len(self.samples))

    def flags(self) -> list[str]:
        flags = []
        if not self.samples:
            flags.append("no_certified")
        if self.undetermined:
            flags.append("undetermined")
        if self.proxy_failures:
            flags.append("proxy_failure")
        return flags

    def evaluate(self, grid) -> np.ndarray:
        return np.asarray([self.cdf(p) for p in grid])
