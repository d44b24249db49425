from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from app.entities.ball import Ball
from app.entities.spin import Spin


class Verdict(str, Enum):
    certified = "certified"
    undetermined = "undetermined"


class InfluenceSet(BaseModel):
    target: str
    horizon: float
    members: frozenset[str]
    max_depth: int = 0

    @property
    def size(self) -> int:
        return len(self.members)


class Certificate(BaseModel):
    """Outcome of sandwich certification of one vertex at one time.

    ``bracket_gap`` counts vertices of the smallest scheduled ball where the frozen-low and
    frozen-high runs disagree; ``gap_history`` lists (radius, gap) for every radius tried.
    """
    vertex: str
    horizon: float
    radius: int
    verdict: Verdict
    spin: Optional[Spin] = None
    bracket_gap: int = 0
    gap_history: list[tuple[int, int]] = Field(default_factory=list)
    fixated: Optional[bool] = None

    @property
    def is_certified(self) -> bool:
        return self.verdict == Verdict.certified

    def to_row(self) -> dict:
        return {
            "vertex": self.vertex,
            "T": self.horizon,
            "R_used": self.radius,
            "verdict": self.verdict.value,
            "spin_origin": self.spin.origin if self.spin else "",
            "spin_value": self.spin.value if self.spin else float("nan"),
            "bracket_gap": self.bracket_gap,
        }


class TailCheck(BaseModel):
    horizon: float
    length: int
    replicas: int
    hits: int
    frequency: float
    sigma: float
    bound: float

    @property
    def vacuous(self) -> bool:
        return self.bound >= 1.0

    @property
    def passed(self) -> bool:
        return self.vacuous or self.frequency <= self.bound + 3 * self.sigma


@dataclass
class CertifiedRegion:
    """Frozen-low / frozen-high bracketing of a whole ball.

    ``certified`` marks vertices where both runs agree at ``horizon``; ``fixated`` marks those that
    are also certified at twice the horizon with the same spin. ``values`` and ``origins`` hold the
    frozen-low state at ``horizon``, exact wherever ``certified`` holds.
    """
    ball: Ball
    radius: int
    horizon: float
    certified: np.ndarray
    fixated: np.ndarray
    values: np.ndarray
    origins: np.ndarray

    @property
    def bracket_gap(self) -> int:
        return int((~self.certified[self.ball.distance <= self.radius]).sum())
