"""Exact infinite-tree values: the backward chronological-path oracle and sandwich certification."""
import bisect
import logging
import math
from typing import Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import BudgetExceededError
from app.entities.certificate import Certificate, CertifiedRegion, InfluenceSet, TailCheck, Verdict
from app.entities.seed_manifest import SeedManifest
from app.entities.spin import Spin
from app.entities.trajectory import BoundaryCondition
from app.use_cases.services import topology
from app.use_cases.services.engine_service import EngineService, MedianState
from app.use_cases.services.randomness_service import RandomnessService

logger = logging.getLogger(__name__)


def chronological_bound(horizon: float, length: int) -> float:
    """Union bound on a chronological path of at least ``length`` vertices through the root."""
    return 5.0 * math.exp(4.0 * horizon) / 4.0 * 0.8 ** length


class BackwardOracle:
    """Exact median-process values on the infinite tree by backward recursion over ring times.

    The state of ``v`` right after its ``k``-th ring is the median of its neighbors just before that
    ring; memo entries are keyed on (vertex, ring index).
    """

    def __init__(self, manifest: SeedManifest, budget: Optional[int] = None):
        self.manifest = manifest
        self.budget = budget or settings.backward_budget
        self.randomness = RandomnessService(manifest)
        self.visited: set[str] = set()
        self._memo: dict[tuple[str, int], tuple[float, str]] = {}
        self._rings: dict[str, list[float]] = {}
        self._horizon = 0.0

    def _ring_times(self, address: str) -> list[float]:
        times = self._rings.get(address)
        if times is None:
            times = self.randomness.rings(address, self._horizon)
            self._rings[address] = times
        return times

    def _initial(self, address: str) -> tuple[float, str]:
        return self.randomness.initial_uniform(address), address

    def _after_ring(self, address: str, ring: int) -> tuple[float, str]:
        memo = self._memo
        stack = [(address, ring)]
        while stack:
            node = stack[-1]
            if node in memo:
                stack.pop()
                continue
            vertex, k = node
            self.visited.add(vertex)
            time = self._ring_times(vertex)[k]
            inputs, pending = [], []
            for neighbor in topology.neighbors(vertex):
                self.visited.add(neighbor)
                before = bisect.bisect_left(self._ring_times(neighbor), time) - 1
                if before < 0:
                    inputs.append(self._initial(neighbor))
                elif (neighbor, before) in memo:
                    inputs.append(memo[(neighbor, before)])
                else:
                    pending.append((neighbor, before))
            if pending:
                stack.extend(pending)
                continue
            memo[node] = sorted(inputs)[1]
            if len(memo) > self.budget:
                raise BudgetExceededError("backward oracle memo", self.budget)
            stack.pop()
        return memo[(address, ring)]

    def state(self, address: str, time: float) -> Spin:
        if time < 0:
            raise ValueError(f"time must be nonnegative, got {time}")
        topology.validate(address)
        if time > self._horizon:
            self._horizon = time
            self._rings.clear()
        self.visited.add(address)
        count = bisect.bisect_right(self._ring_times(address), time)
        if count == 0:
            value, origin = self._initial(address)
        else:
            value, origin = self._after_ring(address, count - 1)
        return Spin(value=value, origin=origin)


def _longest_walk(randomness: RandomnessService, start: str, horizon: float, forward: bool,
                  budget: int) -> int:
    """Vertex count of the longest chronological walk for [0, horizon] starting (or ending) at ``start``."""
    rings: dict[str, list[float]] = {}

    def ring_times(address):
        if address not in rings:
            rings[address] = randomness.rings(address, horizon)
        return rings[address]

    own = ring_times(start)
    if not own:
        return 0
    root = (start, 0 if forward else len(own) - 1)
    memo: dict[tuple[str, int], int] = {}
    stack = [root]
    while stack:
        node = stack[-1]
        if node in memo:
            stack.pop()
            continue
        vertex, k = node
        time = ring_times(vertex)[k]
        best, pending = 0, []
        for neighbor in topology.neighbors(vertex):
            times = ring_times(neighbor)
            if forward:
                j = bisect.bisect_right(times, time)
                if j >= len(times):
                    continue
            else:
                j = bisect.bisect_left(times, time) - 1
                if j < 0:
                    continue
            if (neighbor, j) in memo:
                best = max(best, memo[(neighbor, j)])
            else:
                pending.append((neighbor, j))
        if pending:
            stack.extend(pending)
            continue
        memo[node] = best + 1
        if len(memo) > budget:
            raise BudgetExceededError("chronological path memo", budget)
        stack.pop()
    return memo[root]


class ExactnessService:

    def __init__(self, engine: Optional[EngineService] = None, backward_budget: Optional[int] = None,
                 r_schedule: Optional[Sequence[int]] = None):
        self.engine = engine or EngineService()
        self.backward_budget = backward_budget or settings.backward_budget
        self.r_schedule = tuple(r_schedule or settings.r_schedule)

    def backward_state(self, manifest: SeedManifest, address: str, time: float,
                       budget: Optional[int] = None) -> Spin:
        return BackwardOracle(manifest, budget or self.backward_budget).state(address, time)

    def influence_set(self, manifest: SeedManifest, address: str, horizon: float,
                      budget: Optional[int] = None) -> InfluenceSet:
        oracle = BackwardOracle(manifest, budget or self.backward_budget)
        oracle.state(address, horizon)
        depth = max(topology.distance(address, member) for member in oracle.visited)
        return InfluenceSet(target=address, horizon=horizon, members=frozenset(oracle.visited), max_depth=depth)

    def longest_chronological_path(self, manifest: SeedManifest, address: str, horizon: float) -> tuple[int, int]:
        """(longest walk starting at ``address``, longest walk ending at ``address``) for [0, horizon]."""
        randomness = RandomnessService(manifest)
        return (_longest_walk(randomness, address, horizon, True, self.backward_budget),
                _longest_walk(randomness, address, horizon, False, self.backward_budget))

    def tail_check(self, horizon: float, length: int, replicas: int, seed: int = 0) -> TailCheck:
        """
        Empirical frequency of a chronological path of at least ``length`` vertices from or to the root.

        Args:
            horizon (float): Window [0, T].
            length (int): Minimal number of vertices k.
            replicas (int): Number of independent replicas N.
            seed (int): Master seed of replica 0.

        Returns:
            TailCheck: Frequency, its standard error and the analytic bound.
        """
        base = SeedManifest(master_seed=seed)
        hits = 0
        for index in range(replicas):
            forward, backward = self.longest_chronological_path(base.replica(index), topology.ROOT, horizon)
            hits += max(forward, backward) >= length
        frequency = hits / replicas if replicas else 0.0
        sigma = math.sqrt(frequency * (1 - frequency) / replicas) if replicas else 0.0
        bound = chronological_bound(horizon, length)
        result = TailCheck(horizon=horizon, length=length, replicas=replicas, hits=hits, frequency=frequency,
                           sigma=sigma, bound=bound)
        if result.vacuous:
            logger.warning(f"Chronological bound at T={horizon}, k={length} is {bound:.3f} >= 1: vacuous")
        return result

    def _bracket(self, manifest: SeedManifest, center: str, radius: int, horizon: float,
                 checkpoints: Sequence[float]) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Lockstep frozen-low and frozen-high runs; (low values, low origins, high origins) at each checkpoint."""
        randomness = RandomnessService(manifest)
        ball = topology.ball(center, radius)
        lattice = self.engine.lattice(randomness, ball, BoundaryCondition.frozen_low(), horizon)
        low = MedianState(lattice, *self.engine.median_initial(randomness, lattice, BoundaryCondition.frozen_low()))
        high = MedianState(lattice, *self.engine.median_initial(randomness, lattice, BoundaryCondition.frozen_high()))
        snapshots = []
        pending = sorted(checkpoints)

        def snapshot():
            snapshots.append((np.asarray(low.values), np.asarray(low.origins), np.asarray(high.origins)))

        for time, _, i in lattice.schedule:
            while pending and time > pending[0]:
                pending.pop(0)
                snapshot()
            low.update(i, time)
            high.update(i, time)
        while pending:
            pending.pop(0)
            snapshot()
        return snapshots

    def sandwich_certify(self, manifest: SeedManifest, address: str, horizon: float,
                         r_schedule: Optional[Sequence[int]] = None, fixation: bool = False) -> Certificate:
        """Certify the infinite-tree value at ``address`` by bracketing between extremal frozen boundaries.

        With ``fixation`` the runs continue to twice the horizon and the certificate records whether
        the vertex is certified there with the same spin.
        """
        schedule = tuple(r_schedule or self.r_schedule)
        if list(schedule) != sorted(set(schedule)):
            raise ValueError(f"radius schedule must be strictly increasing, got {schedule}")
        reference = topology.ball(address, schedule[0])
        history = []
        checkpoints = (horizon, 2 * horizon) if fixation else (horizon,)
        for radius in schedule:
            snapshots = self._bracket(manifest, address, radius, checkpoints[-1], checkpoints)
            low_values, low_origins, high_origins = snapshots[0]
            ball = topology.ball(address, radius + 1)
            in_reference = np.fromiter((a in reference for a in ball.addresses), dtype=bool, count=ball.size)
            gap = int((low_origins != high_origins)[in_reference].sum())
            history.append((radius, gap))
            # the center has index 0 in a ball built around it
            if low_origins[0] == high_origins[0]:
                spin = Spin(value=float(low_values[0]), origin=ball.addresses[int(low_origins[0])])
                fixated = None
                if fixation:
                    late_values, late_low, late_high = snapshots[1]
                    fixated = bool(late_low[0] == late_high[0] == low_origins[0])
                return Certificate(vertex=address, horizon=horizon, radius=radius, verdict=Verdict.certified,
                                   spin=spin, bracket_gap=gap, gap_history=history, fixated=fixated)
            logger.info(f"Certification of {address!r} at T={horizon} undetermined at R={radius}, gap {gap}")
        logger.warning(f"Certification of {address!r} at T={horizon} undetermined up to R={schedule[-1]}")
        return Certificate(vertex=address, horizon=horizon, radius=schedule[-1], verdict=Verdict.undetermined,
                           bracket_gap=history[-1][1], gap_history=history, fixated=False if fixation else None)

    def certify_region(self, manifest: SeedManifest, center: str, horizon: float, radius: int) -> CertifiedRegion:
        """Bracket a whole ball at ``horizon`` and ``2 * horizon``."""
        (values, low, high), (_, late_low, late_high) = self._bracket(
            manifest, center, radius, 2 * horizon, (horizon, 2 * horizon))
        certified = low == high
        fixated = certified & (late_low == late_high) & (late_low == low)
        ball = topology.ball(center, radius + 1)
        logger.debug(f"Region R={radius} T={horizon}: {int(certified.sum())} certified, {int(fixated.sum())} fixated")
        return CertifiedRegion(ball=ball, radius=radius, horizon=horizon, certified=certified, fixated=fixated,
                               values=values, origins=low)


def backward_state(manifest: SeedManifest, address: str, time: float, budget: Optional[int] = None) -> Spin:
    return BackwardOracle(manifest, budget).state(address, time)
