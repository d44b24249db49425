import logging
from typing import Optional

import numpy as np

from app.core.exceptions import EstimationError, InvariantViolationError
from app.entities.audit import AuditResult, TransportAudit
from app.entities.ball import Ball
from app.entities.seed_manifest import SeedManifest
from app.entities.trajectory import BoundaryCondition, RunMode, Trajectory
from app.use_cases.evaluators.transport_rules import LabelField, TransportRule
from app.use_cases.services import topology
from app.use_cases.services.analytics_service import AnalyticsService
from app.use_cases.services.engine_service import DiscreteState, EngineService, MedianState
from app.use_cases.services.estimator_service import EstimatorService
from app.use_cases.services.randomness_service import RandomnessService
from app.utils.replicas import run_replicas

logger = logging.getLogger(__name__)


def _flip_signature(trajectory: Trajectory) -> list[tuple[float, str, int]]:
    log = trajectory.flips
    return [(t, trajectory.ball.addresses[i], int(s)) for t, i, s in zip(log.time, log.vertex, log.new_value)]


class Evaluator:

    @staticmethod
    def check_commutation(engine: EngineService, manifest: SeedManifest, ball: Ball, p: float, horizon: float,
                          boundary: Optional[BoundaryCondition] = None,
                          clock_manifest: Optional[SeedManifest] = None) -> AuditResult:
        """
        Compares the projected median trajectory with the direct discrete trajectory event for event.

        Args:
            engine (EngineService): Engine running both sides.
            manifest (SeedManifest): Randomness shared by both runs.
            ball (Ball): Dynamic region.
            p (float): Projection density.
            horizon (float): Final time.
            boundary (BoundaryCondition): Defaults to frozen initial.
            clock_manifest (SeedManifest): Drives the discrete side's clocks instead; a negative control.

        Returns:
            AuditResult: One violation at most, with the first discrepancy in ``detail``.
        """
        boundary = boundary or BoundaryCondition.frozen_initial()
        projected = engine.run(manifest, ball, boundary, RunMode.discrete(p), horizon)
        direct = engine.run_discrete(manifest, ball, boundary, p, horizon, clock_manifest=clock_manifest)
        left, right = _flip_signature(projected), _flip_signature(direct)
        detail = None
        for k, (a, b) in enumerate(zip(left, right)):
            if a != b:
                detail = f"flip {k}: projected {a[1]!r}->{a[2]} at {a[0]:.9f}, direct {b[1]!r}->{b[2]} at {b[0]:.9f}"
                break
        if detail is None and len(left) != len(right):
            extra = (left if len(left) > len(right) else right)[min(len(left), len(right))]
            detail = f"flip {min(len(left), len(right))}: only one side flips {extra[1]!r} at {extra[0]:.9f}"
        if detail is None and not np.array_equal(projected.final_values, direct.final_values):
            detail = "final configurations differ"
        return AuditResult(check="commutation", violations=0 if detail is None else 1,
                           events=projected.event_count, detail=detail)

    @staticmethod
    def check_attractiveness(engine: EngineService, manifest: SeedManifest, ball: Ball, boundary: BoundaryCondition,
                             lower, upper, horizon: float) -> AuditResult:
        """Lockstep discrete runs from ordered initial signs; counts events breaking the order."""
        lower, upper = np.asarray(lower), np.asarray(upper)
        if (lower > upper).any():
            raise ValueError("initial configurations are not ordered")
        randomness = RandomnessService(manifest)
        lattice = engine.lattice(randomness, ball, boundary, horizon)
        if lower.shape != (lattice.ball.size,) or upper.shape != lower.shape:
            raise ValueError(f"initial configurations must cover all {lattice.ball.size} simulated vertices")
        first, second = DiscreteState(lattice, lower), DiscreteState(lattice, upper)
        violations = 0
        for time, _, i in lattice.schedule:
            first.update(i, time)
            second.update(i, time)
            if first.signs[i] > second.signs[i]:
                violations += 1
        return AuditResult(check="attractiveness", violations=violations, events=len(lattice.schedule))

    @staticmethod
    def check_bracketing(engine: EngineService, manifest: SeedManifest, ball: Ball, horizon: float) -> AuditResult:
        """Frozen-low <= frozen-initial <= frozen-high in value order after every event."""
        randomness = RandomnessService(manifest)
        lattice = engine.lattice(randomness, ball, BoundaryCondition.frozen_initial(), horizon)
        states = [MedianState(lattice, *engine.median_initial(randomness, lattice, boundary))
                  for boundary in (BoundaryCondition.frozen_low(), BoundaryCondition.frozen_initial(),
                                   BoundaryCondition.frozen_high())]
        low, middle, high = states
        violations = 0
        if not (np.asarray(low.values) <= np.asarray(middle.values)).all() or \
                not (np.asarray(middle.values) <= np.asarray(high.values)).all():
            violations += 1
        for time, _, i in lattice.schedule:
            for state in states:
                state.update(i, time)
            if not low.values[i] <= middle.values[i] <= high.values[i]:
                violations += 1
        return AuditResult(check="bracketing", violations=violations, events=len(lattice.schedule))

    @staticmethod
    def audit_trajectory(trajectory: Trajectory) -> list[AuditResult]:
        """Energy monotonicity and median consistency of every logged flip."""
        flips = len(trajectory.flips)
        return [
            AuditResult(check="energy", violations=AnalyticsService.energy_audit(trajectory), events=flips),
            AuditResult(check="median_consistency", violations=AnalyticsService.median_consistency(trajectory),
                        events=flips),
        ]

    @staticmethod
    def _transport_replica(manifest: SeedManifest, rule: TransportRule,
                           time: float) -> tuple[Optional[float], Optional[float]]:
        field = LabelField(manifest, time)
        return rule.mass_out(field, topology.ROOT), rule.mass_in(field, topology.ROOT)

    @staticmethod
    def mass_transport_audit(estimator: EstimatorService, rule: TransportRule, replicas: int, time: float,
                             seed: int = 0, miss_tolerance: float = 0.01) -> TransportAudit:
        """
        Expected mass sent from the root against expected mass received, with the truncation-miss rate.

        A replica misses when the root, or any vertex that could send to it, is undecided within the
        rule's reach. Missed sides are left out of the corresponding mean.

        Raises:
            EstimationError: When the miss rate exceeds ``miss_tolerance``.
        """
        rows = run_replicas(Evaluator._transport_replica, seed, replicas, estimator.n_jobs, rule, time)
        sent = [out for out, _ in rows if out is not None]
        received = [incoming for _, incoming in rows if incoming is not None]
        missed = sum(out is None or incoming is None for out, incoming in rows)
        miss_rate = missed / replicas
        if miss_rate > miss_tolerance:
            raise EstimationError(f"Rule {rule.name} undecided within {rule.reach} on {miss_rate:.2%} of replicas, "
                                  f"above the tolerance of {miss_tolerance:.2%}")
        if missed:
            logger.warning(f"Rule {rule.name} undecided within {rule.reach} on {miss_rate:.2%} of replicas")
        return TransportAudit(rule=rule.name, window=rule.reach, time=time, mass_out=estimator.mean(sent),
                              mass_in=estimator.mean(received), miss_rate=miss_rate, miss_tolerance=miss_tolerance)

    @staticmethod
    def raise_on_violation(results: list[AuditResult]):
        failed = [result for result in results if not result.passed]
        if failed:
            for result in failed:
                logger.error(f"{result.check}: {result.violations} violation(s) {result.detail or ''}")
            raise InvariantViolationError(failed[0].check, sum(r.violations for r in failed), failed[0].detail or "")
