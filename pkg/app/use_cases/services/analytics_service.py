"""Structural analysis of trajectories: clusters, traces, threshold projections, chains and ends."""
import heapq
import logging
from collections import Counter
from typing import Optional

import networkx as nx
import numpy as np

from app.entities.ball import Ball
from app.entities.certificate import CertifiedRegion
from app.entities.cluster_report import Cluster, ClusterReport, ThresholdPair, TraceSet
from app.entities.seed_manifest import SeedManifest
from app.entities.trajectory import BoundaryCondition, RunMode, Trajectory
from app.use_cases.services import topology
from app.use_cases.services.engine_service import EngineService, project_trajectory
from app.utils.union_find import UnionFind

logger = logging.getLogger(__name__)


class Snapshot:
    """A median configuration restricted to the vertices under analysis.

    ``known`` marks the vertices whose spin is exact (certified vertices of a region, every vertex of
    a trajectory). Neighbor checks read spins from the known set, not only from the analysed one.
    """

    def __init__(self, ball: Ball, radius: int, horizon: float, values: np.ndarray, origins: np.ndarray,
                 analysed: np.ndarray, pre_fixation: bool, known: Optional[np.ndarray] = None):
        self.ball = ball
        self.radius = radius
        self.horizon = horizon
        self.values = values
        self.origins = origins
        self.analysed = analysed
        self.pre_fixation = pre_fixation
        self.known = np.ones(ball.size, dtype=bool) if known is None else np.asarray(known, dtype=bool)
        self._member = np.zeros(ball.size, dtype=bool)
        self._member[analysed] = True

    @classmethod
    def of(cls, trajectory: Trajectory, time: Optional[float] = None) -> "Snapshot":
        if trajectory.is_discrete:
            raise ValueError("Cluster analyses need a median trajectory")
        time = trajectory.horizon if time is None else time
        values, origins = trajectory.state_at(time)
        return cls(trajectory.ball, trajectory.radius, time, values, origins, trajectory.dynamic_indices, True)

    @classmethod
    def of_region(cls, region: CertifiedRegion) -> "Snapshot":
        return cls(region.ball, region.radius, region.horizon, region.values, region.origins,
                   np.flatnonzero(region.fixated), False, known=region.certified)

    def edges(self):
        """Edges of the ball with both endpoints under analysis, each once."""
        member = self._member
        for i in self.analysed.tolist():
            for j in self.ball.neighbors[i].tolist():
                if j > i and member[j]:
                    yield i, j

    def boundary_contact(self, members) -> int:
        return int(sum(self.ball.distance[i] == self.radius for i in members))


def dyadic_tail(sizes) -> list[tuple[int, float]]:
    """(2**j, fraction of sizes >= 2**j) for every dyadic level up to the largest size."""
    sizes = np.asarray(list(sizes), dtype=np.int64)
    if sizes.size == 0:
        return []
    tail = []
    level = 1
    while level <= sizes.max():
        tail.append((level, float((sizes >= level).mean())))
        level *= 2
    return tail


def _ever_differ(first: Trajectory, second: Trajectory) -> set[int]:
    """Vertices whose signs differ at some time between two discrete trajectories on the same lattice."""
    a = first.initial_values.astype(np.int64).tolist()
    b = second.initial_values.astype(np.int64).tolist()
    differ = {i for i in range(len(a)) if a[i] != b[i]}
    events = heapq.merge(
        ((t, 0, i, s) for t, i, s in zip(first.flips.time, first.flips.vertex, first.flips.new_value)),
        ((t, 1, i, s) for t, i, s in zip(second.flips.time, second.flips.vertex, second.flips.new_value)),
    )
    pending_time, touched = None, []
    for time, side, i, sign in events:
        if time != pending_time:
            differ.update(j for j in touched if a[j] != b[j])
            pending_time, touched = time, []
        (a if side == 0 else b)[i] = int(sign)
        touched.append(i)
    differ.update(j for j in touched if a[j] != b[j])
    return differ


class AnalyticsService:

    def __init__(self, engine: Optional[EngineService] = None):
        self.engine = engine or EngineService()

    @staticmethod
    def agreement_clusters(snapshot: Snapshot, by_value: bool = False) -> ClusterReport:
        """Connected components of the equal-spin relation on edges.

        Spins are compared by origin, or with ``by_value`` by exact value equality.
        """
        keys = snapshot.values if by_value else snapshot.origins
        forest = UnionFind(snapshot.ball.size)
        for i, j in snapshot.edges():
            if keys[i] == keys[j]:
                forest.union(i, j)
        clusters = []
        for group in forest.groups(snapshot.analysed.tolist()):
            code = int(snapshot.origins[group[0]])
            label = snapshot.ball.addresses[code] if code >= 0 else ("-" if code == -1 else "+")
            clusters.append(Cluster(label=label, members=tuple(snapshot.ball.addresses[i] for i in group),
                                    boundary_contact=snapshot.boundary_contact(group)))
        return ClusterReport(kind="agreement", horizon=snapshot.horizon, analysed=len(snapshot.analysed),
                             pre_fixation=snapshot.pre_fixation, clusters=clusters)

    @staticmethod
    def disagreement_components(snapshot: Snapshot) -> ClusterReport:
        """Components of the graph of disagreeing edges, with max degree and a simple-path verdict."""
        graph = nx.Graph()
        graph.add_edges_from((i, j) for i, j in snapshot.edges() if snapshot.origins[i] != snapshot.origins[j])
        clusters = []
        for component in sorted(nx.connected_components(graph), key=min):
            sub = graph.subgraph(component)
            max_degree = max(degree for _, degree in sub.degree())
            simple = max_degree <= 2 and nx.is_tree(sub)
            members = sorted(component)
            clusters.append(Cluster(label="disagreement", members=tuple(snapshot.ball.addresses[i] for i in members),
                                    boundary_contact=snapshot.boundary_contact(members),
                                    max_degree=max_degree, is_simple_path=simple))
        return ClusterReport(kind="disagreement", horizon=snapshot.horizon, analysed=len(snapshot.analysed),
                             pre_fixation=snapshot.pre_fixation, clusters=clusters)

    @staticmethod
    def lonely_vertices(snapshot: Snapshot) -> tuple[int, list[str]]:
        """
        Checks every analysed vertex against the spins of its three neighbors.

        Only vertices whose whole neighborhood is inside the ball and known are checked.

        Returns:
            tuple[int, list[str]]: Number of vertices checked, and the addresses of those whose
            origin differs from all three neighbors.
        """
        checked, lonely = 0, []
        for i in snapshot.analysed.tolist():
            around = snapshot.ball.neighbors[i].tolist()
            if any(j < 0 or not snapshot.known[j] for j in around):
                continue
            checked += 1
            if all(snapshot.origins[j] != snapshot.origins[i] for j in around):
                lonely.append(snapshot.ball.addresses[i])
        return checked, lonely

    @staticmethod
    def neighbor_agreement_rate(snapshot: Snapshot) -> float:
        """Fraction of checked vertices sharing their spin with at least one known neighbor."""
        checked, lonely = AnalyticsService.lonely_vertices(snapshot)
        return 1.0 - len(lonely) / checked if checked else 1.0

    @staticmethod
    def trace_of(trajectory: Trajectory, source: str) -> TraceSet:
        """Vertices that carry the initial value of ``source`` at some time of the trajectory."""
        code = trajectory.ball.code(source)
        members = {code} if trajectory.initial_origins[code] == code else set()
        members.update(i for i, origin in zip(trajectory.flips.vertex, trajectory.flips.new_origin) if origin == code)
        touches = any(trajectory.ball.distance[i] >= trajectory.radius for i in members)
        if touches:
            logger.warning(f"Trace of {source!r} reaches the boundary of the radius-{trajectory.radius} ball")
        return TraceSet(source=source, horizon=trajectory.horizon,
                        members=frozenset(trajectory.ball.addresses[i] for i in members), touches_boundary=touches)

    def trace(self, manifest: SeedManifest, source: str, horizon: float, radius: int) -> TraceSet:
        trajectory = self.engine.run(manifest, topology.ball(source, radius), BoundaryCondition.frozen_initial(),
                                     RunMode.median(), horizon)
        return self.trace_of(trajectory, source)

    @staticmethod
    def threshold_pair(trajectory: Trajectory, source: Optional[str] = None) -> ThresholdPair:
        """Weak and strict projections at the initial value of ``source`` and their symmetric difference."""
        source = trajectory.ball.center if source is None else source
        level = float(trajectory.initial_values[trajectory.ball.code(source)])
        weak = project_trajectory(trajectory, level)
        strict = project_trajectory(trajectory, float(np.nextafter(level, -np.inf)))
        addresses = trajectory.ball.addresses
        difference = frozenset(addresses[i] for i in _ever_differ(weak, strict))

        def flips(projected):
            log = projected.flips
            return [(t, addresses[i], int(s)) for t, i, s in zip(log.time, log.vertex, log.new_value)]

        return ThresholdPair(source=source, level=level, weak_flips=flips(weak), strict_flips=flips(strict),
                             difference=difference)

    def resampling_difference(self, manifest: SeedManifest, p: float, horizon: float, target: str, radius: int,
                              plus: int = 1, minus: int = -1, resample_clock: bool = False) -> TraceSet:
        """Vertices ever disagreeing between two discrete runs that differ only at ``target``.

        The runs force the target's initial sign to ``plus`` and ``minus``; with ``resample_clock`` the
        second run also draws the target's clock from its resample stream.
        """
        ball = topology.ball(target, radius)
        boundary = BoundaryCondition.frozen_initial()
        first = self.engine.run_discrete(manifest, ball, boundary, p, horizon, forced={target: plus})
        clocks = manifest.with_resampled_clock(target) if resample_clock else None
        second = self.engine.run_discrete(manifest, ball, boundary, p, horizon, forced={target: minus},
                                          clock_manifest=clocks)
        differ = _ever_differ(first, second)
        touches = any(first.ball.distance[i] >= radius for i in differ)
        if touches:
            logger.warning(f"Resampling difference at {target!r} reaches the boundary of the radius-{radius} ball")
        return TraceSet(source=target, horizon=horizon, members=frozenset(first.ball.addresses[i] for i in differ),
                        touches_boundary=touches)

    @staticmethod
    def chain_membership(signs: np.ndarray, ball: Ball, vertex: str, depth: int) -> bool:
        """Whether ``vertex`` lies on a monochromatic path reaching distance ``depth`` on both sides."""
        if depth <= 0:
            return True
        start = ball.code(vertex)
        sign = signs[start]
        long_branches = 0
        for first in ball.neighbors[start].tolist():
            if first < 0 or signs[first] != sign:
                continue
            # depth-first search inside the branch, capped at ``depth``
            stack = [(first, start, 1)]
            while stack:
                current, previous, length = stack.pop()
                if length >= depth:
                    long_branches += 1
                    break
                for nxt in ball.neighbors[current].tolist():
                    if nxt >= 0 and nxt != previous and signs[nxt] == sign:
                        stack.append((nxt, current, length + 1))
            if long_branches >= 2:
                return True
        return False

    @staticmethod
    def _reaches_boundary(signs: np.ndarray, ball: Ball, radius: int, sign: int) -> dict[tuple[int, int], bool]:
        """For directed edges (x, w) inside a sign cluster: does the branch beyond w reach distance ``radius``."""
        inside = (ball.distance <= radius) & (signs == sign)
        table = ball.neighbors
        memo: dict[tuple[int, int], bool] = {}
        for x in np.flatnonzero(inside).tolist():
            for w in table[x].tolist():
                if w < 0 or not inside[w] or (x, w) in memo:
                    continue
                stack = [(x, w)]
                while stack:
                    edge = stack[-1]
                    if edge in memo:
                        stack.pop()
                        continue
                    parent, node = edge
                    if ball.distance[node] == radius:
                        memo[edge] = True
                        stack.pop()
                        continue
                    children = [(node, c) for c in table[node].tolist() if c >= 0 and c != parent and inside[c]]
                    pending = [child for child in children if child not in memo]
                    if pending:
                        stack.extend(pending)
                        continue
                    memo[edge] = any(memo[child] for child in children)
                    stack.pop()
        return memo

    def triple_points(self, signs: np.ndarray, ball: Ball, radius: int, sign: int) -> set[str]:
        """Vertices of ``sign`` clusters whose removal leaves at least three boundary-reaching parts."""
        reach = self._reaches_boundary(signs, ball, radius, sign)
        counts = Counter(x for (x, _), reached in reach.items() if reached)
        return {ball.addresses[x] for x, count in counts.items() if count >= 3}

    @staticmethod
    def sign_clusters(signs: np.ndarray, ball: Ball, radius: int, sign: int) -> list[list[int]]:
        inside = (ball.distance <= radius) & (signs == sign)
        forest = UnionFind(ball.size)
        members = np.flatnonzero(inside).tolist()
        for i in members:
            for j in ball.neighbors[i].tolist():
                if j > i and inside[j]:
                    forest.union(i, j)
        return forest.groups(members)

    def spanning_triple_fraction(self, signs: np.ndarray, ball: Ball, radius: int, sign: int) -> tuple[int, int]:
        """(boundary-spanning clusters, of which containing a triple point) for one sign."""
        triple = {ball.code(a) for a in self.triple_points(signs, ball, radius, sign)}
        spanning = with_triple = 0
        for cluster in self.sign_clusters(signs, ball, radius, sign):
            if sum(ball.distance[i] == radius for i in cluster) >= 2:
                spanning += 1
                with_triple += any(i in triple for i in cluster)
        return spanning, with_triple

    @staticmethod
    def energy_audit(trajectory: Trajectory) -> int:
        """Number of flips that strictly increased the flipping vertex's disagreement count."""
        log = trajectory.flips
        if log.discrete:
            raise ValueError("The energy audit needs a median flip log")
        violations = 0
        for old, new, around in zip(log.old_origin, log.new_origin, log.neighbor_origins):
            before = sum(origin != old for origin in around)
            after = sum(origin != new for origin in around)
            if after > before:
                violations += 1
        return violations

    @staticmethod
    def median_consistency(trajectory: Trajectory) -> int:
        """Number of flips whose new spin is not the median (or majority) of the logged neighbors."""
        log = trajectory.flips
        mismatches = 0
        for k in range(len(log)):
            if log.discrete:
                expected = 1 if sum(log.neighbor_values[k]) > 0 else -1
                mismatches += expected != log.new_value[k]
            else:
                ranked = sorted(zip(log.neighbor_values[k],
                                    (trajectory.origin_address(o) for o in log.neighbor_origins[k]),
                                    log.neighbor_origins[k]))
                mismatches += ranked[1][2] != log.new_origin[k]
        return mismatches
