"""Automorphism-equivariant mass transport rules on the labelled tree.

A rule sends mass from ``x`` to vertices within its ``reach`` as a deterministic function of the
labels and tie-break marks around ``x``. Labels are median-process values at a fixed time.
"""
import logging
from abc import ABC, abstractmethod
from typing import Optional

from app.entities.seed_manifest import SeedManifest
from app.use_cases.services import topology
from app.use_cases.services.exactness_service import BackwardOracle
from app.use_cases.services.randomness_service import RandomnessService

logger = logging.getLogger(__name__)


class LabelField:
    """Lazily evaluated labels U_v(time) and tie-break marks of one replica."""

    def __init__(self, manifest: SeedManifest, time: float, budget: Optional[int] = None):
        self.time = time
        self.randomness = RandomnessService(manifest)
        self.oracle = BackwardOracle(manifest, budget)
        self._labels: dict[str, float] = {}
        self.decisions: dict[tuple[str, str], Optional[dict[str, float]]] = {}

    def label(self, address: str) -> float:
        value = self._labels.get(address)
        if value is None:
            if self.time == 0:
                value = self.randomness.initial_uniform(address)
            else:
                value = self.oracle.state(address, self.time).value
            self._labels[address] = value
        return value

    def mark(self, address: str) -> float:
        return self.randomness.tie_break(address)


def sphere(center: str, radius: int) -> list[str]:
    """Vertices at exactly distance ``radius`` from ``center``."""
    if radius == 0:
        return [center]
    layer, previous = [center], {center}
    for _ in range(radius):
        nxt = []
        for vertex in layer:
            for neighbor in topology.neighbors(vertex):
                if neighbor not in previous:
                    nxt.append(neighbor)
        previous = set(layer)
        layer = nxt
    return layer


class TransportRule(ABC):
    name: str
    reach: int

    @abstractmethod
    def targets(self, field: LabelField, x: str) -> Optional[dict[str, float]]:
        """Mass sent from ``x``, or None when the rule cannot decide within its reach."""

    def mass_out(self, field: LabelField, x: str) -> Optional[float]:
        sent = self.targets(field, x)
        return None if sent is None else sum(sent.values())

    def mass_in(self, field: LabelField, y: str) -> Optional[float]:
        """Mass received by ``y``, or None when some vertex within reach of ``y`` is undecided."""
        received = 0.0
        for radius in range(self.reach + 1):
            for x in sphere(y, radius):
                sent = self.targets(field, x)
                if sent is None:
                    return None
                received += sent.get(y, 0.0)
        return received


class IdentityRule(TransportRule):
    name = "identity"
    reach = 0

    def targets(self, field, x):
        return {x: 1.0}


class LargerNeighborRule(TransportRule):
    """Unit mass to every neighbor with a larger initial uniform."""
    name = "larger_neighbor"
    reach = 1

    def targets(self, field, x):
        own = field.randomness.initial_uniform(x)
        return {y: 1.0 for y in topology.neighbors(x) if field.randomness.initial_uniform(y) > own}


class NearestBelowRule(TransportRule):
    """Unit mass to the closest vertex whose label is at most ``level``; ties go to the largest mark."""
    name = "nearest_below"

    def __init__(self, reach: int, level: float = 0.5):
        self.reach = reach
        self.level = level

    def targets(self, field, x):
        key = (self.name, x)
        if key in field.decisions:
            return field.decisions[key]
        found = None
        for radius in range(self.reach + 1):
            candidates = [y for y in sphere(x, radius) if field.label(y) <= self.level]
            if candidates:
                found = {max(candidates, key=field.mark): 1.0}
                break
        field.decisions[key] = found
        return found
