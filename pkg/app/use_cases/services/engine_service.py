"""Forward event-driven simulation of the median process and of majority dynamics on a finite ball."""
import bisect
import heapq
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import BudgetExceededError
from app.entities.ball import Ball
from app.entities.seed_manifest import SeedManifest
from app.entities.spin import HIGH_ORIGIN, HIGH_VALUE, LOW_ORIGIN, LOW_VALUE, Spin
from app.entities.trajectory import (HIGH_CODE, LOW_CODE, NO_ORIGIN, BoundaryCondition, BoundaryKind, FlipLog,
                                     ModeKind, RunMode, Trajectory)
from app.use_cases.services import topology
from app.use_cases.services.randomness_service import RandomnessService

logger = logging.getLogger(__name__)


def median_update(current: Spin, n1: Spin, n2: Spin, n3: Spin) -> Spin:
    """Middle of the three neighbor spins in value order, ties broken by origin address.

    ``current`` does not influence the result; it is accepted so callers can log the flip.
    """
    return sorted((n1, n2, n3), key=Spin.sort_key)[1]


def discrete_update(current: int, n1: int, n2: int, n3: int) -> int:
    # e_x = -s_x * sum of neighbor signs; the spin flips iff e_x > 0
    energy = -current * (n1 + n2 + n3)
    return -current if energy > 0 else current


def project(config, p: float):
    """Threshold projection: +1 where the value is at most ``p``, else -1.

    Accepts an array of values, a mapping of addresses to spins, or a single spin.
    """
    if isinstance(config, Spin):
        return 1 if config.value <= p else -1
    if isinstance(config, Mapping):
        return {address: (1 if spin.value <= p else -1) for address, spin in config.items()}
    values = np.asarray(config, dtype=np.float64)
    return np.where(values <= p, 1, -1).astype(np.int64)


def simulated_ball(ball: Ball, boundary: BoundaryCondition) -> Ball:
    """The lattice actually simulated: frozen boundaries add the layer at distance radius + 1."""
    if boundary.is_frozen:
        return topology.ball(ball.center, ball.radius + 1)
    return ball


def _median_slot(va: float, vb: float, vc: float) -> int:
    if va < vb:
        if vb < vc:
            return 1
        return 2 if va < vc else 0
    if va < vc:
        return 0
    return 2 if vb < vc else 1


@dataclass
class Lattice:
    """A simulated ball together with its ring schedule over (start, horizon]."""
    ball: Ball
    radius: int
    boundary: BoundaryCondition
    neighbors: list[tuple[int, int, int]]
    schedule: list[tuple[float, str, int]]
    start: float
    horizon: float
    # free boundary only: vertex -> the in-ball neighbor it copies (-1: none)
    sources: dict[int, int] = field(default_factory=dict)

    @property
    def frozen_layer(self) -> np.ndarray:
        return self.ball.distance > self.radius

    def origin_name(self, code: int) -> str:
        if code == LOW_CODE:
            return LOW_ORIGIN
        if code == HIGH_CODE:
            return HIGH_ORIGIN
        return self.ball.addresses[code]


class MedianState:
    """Mutable median-process configuration on a lattice."""

    def __init__(self, lattice: Lattice, values, origins, log: Optional[FlipLog] = None):
        self.lattice = lattice
        self.values = list(map(float, values))
        self.origins = list(map(int, origins))
        self.log = log
        self._neighbors = lattice.neighbors
        self._sources = lattice.sources

    def _name(self, code):
        return self.lattice.origin_name(code)

    def update(self, i: int, time: float) -> bool:
        values, origins = self.values, self.origins
        source = self._sources.get(i)
        if source is not None:
            if source < 0:
                return False
            a = b = c = source
        else:
            a, b, c = self._neighbors[i]
        va, vb, vc = values[a], values[b], values[c]
        oa, ob, oc = origins[a], origins[b], origins[c]
        if va != vb and vb != vc and va != vc:
            slot = _median_slot(va, vb, vc)
        else:
            keyed = sorted(((va, self._name(oa), 0), (vb, self._name(ob), 1), (vc, self._name(oc), 2)))
            slot = keyed[1][2]
        new_origin = (oa, ob, oc)[slot]
        if new_origin == origins[i]:
            return False
        new_value = (va, vb, vc)[slot]
        if self.log is not None:
            self.log.append(i, time, origins[i], new_origin, values[i], new_value, (oa, ob, oc), (va, vb, vc))
        values[i] = new_value
        origins[i] = new_origin
        return True


class DiscreteState:
    """Mutable +-1 configuration updated directly by the energy rule."""

    def __init__(self, lattice: Lattice, signs, held=(), log: Optional[FlipLog] = None):
        self.lattice = lattice
        self.signs = list(map(int, signs))
        self.held = set(held)
        self.log = log
        self._neighbors = lattice.neighbors
        self._sources = lattice.sources

    def update(self, i: int, time: float) -> bool:
        if i in self.held:
            return False
        signs = self.signs
        source = self._sources.get(i)
        if source is not None:
            if source < 0:
                return False
            a = b = c = source
        else:
            a, b, c = self._neighbors[i]
        current = signs[i]
        new = discrete_update(current, signs[a], signs[b], signs[c])
        if new == current:
            return False
        if self.log is not None:
            self.log.append(i, time, NO_ORIGIN, NO_ORIGIN, current, new, (NO_ORIGIN,) * 3,
                            (signs[a], signs[b], signs[c]))
        signs[i] = new
        return True


def project_trajectory(trajectory: Trajectory, p: float) -> Trajectory:
    """Discrete trajectory obtained by projecting a median trajectory at density ``p``."""
    if trajectory.is_discrete:
        raise ValueError("Only median trajectories can be projected")
    current = project(trajectory.initial_values, p).tolist()
    median_log = trajectory.flips
    log = FlipLog(discrete=True)
    for k in range(len(median_log)):
        i = median_log.vertex[k]
        new = 1 if median_log.new_value[k] <= p else -1
        if new == current[i]:
            continue
        around = tuple(1 if v <= p else -1 for v in median_log.neighbor_values[k])
        log.append(i, median_log.time[k], NO_ORIGIN, NO_ORIGIN, current[i], new, (NO_ORIGIN,) * 3, around)
        current[i] = new
    return Trajectory(manifest=trajectory.manifest, ball=trajectory.ball, radius=trajectory.radius,
                      boundary=trajectory.boundary, mode=RunMode.discrete(p), horizon=trajectory.horizon,
                      initial_values=project(trajectory.initial_values, p), initial_origins=None,
                      final_values=project(trajectory.final_values, p), final_origins=None,
                      flips=log, event_count=trajectory.event_count)


class EngineService:

    def __init__(self, max_events: Optional[int] = None):
        self.max_events = max_events or settings.max_events

    def lattice(self, clocks: RandomnessService, ball: Ball, boundary: BoundaryCondition, horizon: float,
                start: float = 0.0) -> Lattice:
        """Build the simulated lattice and merge the ring streams of its dynamic vertices."""
        if horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {horizon}")
        simulated = simulated_ball(ball, boundary)
        table = [tuple(row) for row in simulated.neighbors.tolist()]
        sources = {}
        if not boundary.is_frozen:
            for i in ball.boundary.tolist():
                inside = [j for j in table[i] if j >= 0]
                sources[i] = inside[0] if inside else -1
        streams = []
        for i in np.flatnonzero(simulated.distance <= ball.radius).tolist():
            address = simulated.addresses[i]
            times = clocks.rings(address, horizon)
            if start > 0:
                times = times[bisect.bisect_right(times, start):]
            streams.append([(t, address, i) for t in times])
        schedule = list(heapq.merge(*streams))
        if len(schedule) > self.max_events:
            logger.error(f"Run on radius {ball.radius} to T={horizon} needs {len(schedule)} events")
            raise BudgetExceededError("engine event", self.max_events)
        return Lattice(ball=simulated, radius=ball.radius, boundary=boundary, neighbors=table,
                       schedule=schedule, start=start, horizon=horizon, sources=sources)

    @staticmethod
    def median_initial(spins: RandomnessService, lattice: Lattice,
                       boundary: Optional[BoundaryCondition] = None) -> tuple[np.ndarray, np.ndarray]:
        """Initial values and origin codes on the lattice, frozen layer filled per ``boundary``."""
        boundary = boundary or lattice.boundary
        simulated = lattice.ball
        outer = lattice.frozen_layer
        values = np.empty(simulated.size, dtype=np.float64)
        origins = np.arange(simulated.size, dtype=np.int64)
        if boundary.kind in (BoundaryKind.free, BoundaryKind.frozen_initial):
            values[:] = spins.initial_uniforms(simulated.addresses)
        else:
            inner = np.flatnonzero(~outer)
            values[inner] = spins.initial_uniforms([simulated.addresses[i] for i in inner])
        if boundary.kind == BoundaryKind.frozen_low:
            values[outer], origins[outer] = LOW_VALUE, LOW_CODE
        elif boundary.kind == BoundaryKind.frozen_high:
            values[outer], origins[outer] = HIGH_VALUE, HIGH_CODE
        elif boundary.kind == BoundaryKind.frozen_discrete:
            raise ValueError("frozen_discrete boundaries apply to discrete runs only")
        return values, origins

    @staticmethod
    def discrete_initial(spins: RandomnessService, lattice: Lattice, p: float, initial=None,
                         boundary: Optional[BoundaryCondition] = None) -> np.ndarray:
        """Initial signs on the lattice: projected uniforms unless ``initial`` is given.

        The extremal frozen layers are the projections of the sentinels: low is +1, high is -1.
        """
        boundary = boundary or lattice.boundary
        simulated = lattice.ball
        if initial is None:
            signs = project(spins.initial_uniforms(simulated.addresses), p)
        else:
            signs = np.asarray(initial, dtype=np.int64).copy()
            if signs.shape != (simulated.size,):
                raise ValueError(f"initial configuration must cover all {simulated.size} simulated vertices")
        outer = lattice.frozen_layer
        if boundary.kind == BoundaryKind.frozen_low:
            signs[outer] = 1
        elif boundary.kind == BoundaryKind.frozen_high:
            signs[outer] = -1
        elif boundary.kind == BoundaryKind.frozen_discrete:
            signs[outer] = boundary.sign
        return signs

    def run(self, manifest: SeedManifest, ball: Ball, boundary: BoundaryCondition, mode: RunMode,
            horizon: float, resume_from: Optional[Trajectory] = None) -> Trajectory:
        """Simulate the median process on ``ball`` to ``horizon``.

        Args:
            manifest (SeedManifest): Randomness of the replica.
            ball (Ball): Dynamic region; frozen boundaries add one frozen layer around it.
            boundary (BoundaryCondition): How the region is closed.
            mode (RunMode): Median, or Discrete(p) which projects the median run at p.
            horizon (float): Final time T.
            resume_from (Trajectory): Median trajectory of the same replica and ball to extend.

        Returns:
            Trajectory: Full trajectory including the flip log with neighbor snapshots.
        """
        randomness = RandomnessService(manifest)
        start = 0.0
        if resume_from is not None:
            if resume_from.is_discrete or resume_from.manifest != manifest or resume_from.boundary != boundary:
                raise ValueError("Can only resume a median trajectory of the same replica and boundary")
            if horizon < resume_from.horizon:
                raise ValueError(f"Cannot resume backwards from T={resume_from.horizon} to T={horizon}")
            start = resume_from.horizon
        lattice = self.lattice(randomness, ball, boundary, horizon, start)
        if resume_from is None:
            initial_values, initial_origins = self.median_initial(randomness, lattice)
            values, origins = initial_values, initial_origins
            log = FlipLog()
        else:
            initial_values, initial_origins = resume_from.initial_values, resume_from.initial_origins
            values, origins = resume_from.final_values, resume_from.final_origins
            log = FlipLog()
            log.extend(resume_from.flips)
        state = MedianState(lattice, values, origins, log)
        for time, _, i in lattice.schedule:
            state.update(i, time)
        event_count = len(lattice.schedule) + (resume_from.event_count if resume_from is not None else 0)
        logger.debug(f"Median run R={ball.radius} T={horizon}: {event_count} events, {len(log)} flips")
        trajectory = Trajectory(manifest=manifest, ball=lattice.ball, radius=ball.radius, boundary=boundary,
                                mode=RunMode.median(), horizon=horizon,
                                initial_values=initial_values, initial_origins=initial_origins,
                                final_values=np.asarray(state.values), final_origins=np.asarray(state.origins),
                                flips=log, event_count=event_count)
        if mode.kind == ModeKind.discrete:
            return project_trajectory(trajectory, mode.p)
        return trajectory

    def run_discrete(self, manifest: SeedManifest, ball: Ball, boundary: BoundaryCondition, p: float,
                     horizon: float, initial=None, frozen: Optional[dict[str, int]] = None,
                     clock_manifest: Optional[SeedManifest] = None,
                     forced: Optional[dict[str, int]] = None) -> Trajectory:
        """Direct majority-dynamics run by the energy rule, independent of the median code path.

        ``frozen`` holds chosen in-ball vertices at a fixed sign for all time. ``forced`` overrides the
        initial sign of chosen vertices only. ``clock_manifest`` drives the clocks from a different
        manifest than the initial spins.
        """
        spins = RandomnessService(manifest)
        clocks = spins if clock_manifest is None else RandomnessService(clock_manifest)
        lattice = self.lattice(clocks, ball, boundary, horizon)
        signs = self.discrete_initial(spins, lattice, p, initial)
        for address, sign in (forced or {}).items():
            signs[lattice.ball.code(address)] = sign
        held = set()
        for address, sign in (frozen or {}).items():
            i = lattice.ball.code(address)
            signs[i] = sign
            held.add(i)
        initial_signs = signs.copy()
        state = DiscreteState(lattice, signs, held, FlipLog(discrete=True))
        for time, _, i in lattice.schedule:
            state.update(i, time)
        return Trajectory(manifest=manifest, ball=lattice.ball, radius=ball.radius, boundary=boundary,
                          mode=RunMode.discrete(p), horizon=horizon,
                          initial_values=initial_signs, initial_origins=None,
                          final_values=np.asarray(state.signs, dtype=np.int64), final_origins=None,
                          flips=state.log, event_count=len(lattice.schedule))


def run(manifest: SeedManifest, ball: Union[Ball, int], boundary: BoundaryCondition, mode: RunMode,
        horizon: float) -> Trajectory:
    if isinstance(ball, int):
        ball = topology.ball(topology.ROOT, ball)
    return EngineService().run(manifest, ball, boundary, mode, horizon)
