"""Monte Carlo estimators with confidence intervals over independent replicas."""
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from app.core.config import settings
from app.core.exceptions import DegenerateCurveError, EstimationError
from app.entities.certificate import Certificate
from app.entities.estimate import Z_95, EstimateWithCI, SamplerPolicy, ThetaCurve
from app.entities.seed_manifest import SeedManifest
from app.entities.trajectory import BoundaryCondition, RunMode
from app.use_cases.factories.factories import SamplerFactory
from app.use_cases.services import topology
from app.use_cases.services.analytics_service import AnalyticsService
from app.use_cases.services.engine_service import EngineService, project
from app.use_cases.services.exactness_service import ExactnessService
from app.utils.replicas import run_replicas

logger = logging.getLogger(__name__)

THETA_GRID = tuple(round(0.02 * k, 2) for k in range(1, 50))
# below this level theta vanishes on the 3-regular tree
PC_LOWER_BOUND = (2 - math.sqrt(3)) / 4


class EstimatorService:

    def __init__(self, engine: Optional[EngineService] = None, exactness: Optional[ExactnessService] = None,
                 analytics: Optional[AnalyticsService] = None, min_replicas: Optional[int] = None,
                 undetermined_bound: Optional[float] = None, n_jobs: Optional[int] = None):
        self.engine = engine or EngineService()
        self.exactness = exactness or ExactnessService(self.engine)
        self.analytics = analytics or AnalyticsService(self.engine)
        self.min_replicas = settings.min_replicas if min_replicas is None else min_replicas
        self.undetermined_bound = settings.undetermined_bound if undetermined_bound is None else undetermined_bound
        self.n_jobs = n_jobs or settings.n_jobs

    def _require(self, replicas: int):
        if replicas < self.min_replicas:
            raise EstimationError(f"{replicas} replicas is below the minimum of {self.min_replicas}")

    def _check_undetermined(self, undetermined: int, replicas: int):
        fraction = undetermined / replicas if replicas else 0.0
        if fraction > self.undetermined_bound:
            raise EstimationError(f"Undetermined fraction {fraction:.4f} exceeds {self.undetermined_bound}")
        if undetermined:
            logger.warning(f"{undetermined} of {replicas} replicas undetermined")

    def bernoulli(self, hits: int, replicas: int, undetermined: int = 0, boundary: int = 0,
                  flags: Sequence[str] = ()) -> EstimateWithCI:
        """
        Bernoulli estimate over ``replicas`` replicas of which ``undetermined`` could not be decided.

        Args:
            hits (int): Determined replicas where the event holds.
            replicas (int): All replicas, determined or not.
            undetermined (int): Replicas without a verdict.
            boundary (int): Replicas whose analysis touched the ball boundary.
            flags (Sequence[str]): Diagnostic flags carried to the output.

        Returns:
            EstimateWithCI: Point estimate over determined replicas, halfwidth and the undetermined interval.
        """
        self._require(replicas)
        self._check_undetermined(undetermined, replicas)
        determined = replicas - undetermined
        estimate = hits / determined if determined else float("nan")
        halfwidth = Z_95 * math.sqrt(estimate * (1 - estimate) / determined) if determined else float("nan")
        return EstimateWithCI(estimate=estimate, replicas=replicas, halfwidth=halfwidth,
                              lower=hits / replicas, upper=(hits + undetermined) / replicas,
                              undetermined_fraction=undetermined / replicas, boundary_fraction=boundary / replicas,
                              flags=list(flags))

    def mean(self, values: Sequence[float], flags: Sequence[str] = ()) -> EstimateWithCI:
        self._require(len(values))
        values = np.asarray(values, dtype=np.float64)
        halfwidth = Z_95 * float(stats.sem(values)) if len(values) > 1 else float("nan")
        return EstimateWithCI(estimate=float(values.mean()), replicas=len(values), halfwidth=halfwidth,
                              flags=list(flags))

    def _theta_replica(self, manifest: SeedManifest, horizon: float, policy: SamplerPolicy) -> Certificate:
        sampler = SamplerFactory.get_sampler(policy, self.exactness)
        return sampler(manifest, topology.ROOT, horizon)

    def theta_certificates(self, replicas: int, horizon: float, policy: Optional[SamplerPolicy] = None,
                           seed: int = 0) -> list[Certificate]:
        self._require(replicas)
        return run_replicas(self._theta_replica, seed, replicas, self.n_jobs, horizon, policy or SamplerPolicy())

    def theta_curve(self, replicas: int, horizon: float, policy: Optional[SamplerPolicy] = None,
                    seed: int = 0) -> ThetaCurve:
        """One certified root value per replica; its empirical CDF estimates theta at every p at once."""
        return self.curve_from(self.theta_certificates(replicas, horizon, policy, seed), horizon)

    def curve_from(self, certificates: Sequence[Certificate], horizon: float) -> ThetaCurve:
        replicas = len(certificates)
        samples = [c.spin.value for c in certificates if c.is_certified]
        undetermined = replicas - len(samples)
        proxy_failures = sum(1 for c in certificates if c.is_certified and c.fixated is False)
        self._check_undetermined(undetermined, replicas)
        if proxy_failures:
            logger.info(f"Fixation proxy failed on {proxy_failures} of {len(samples)} certified replicas")
        return ThetaCurve(horizon=horizon, samples=samples, undetermined=undetermined, proxy_failures=proxy_failures)

    @staticmethod
    def pc_bracket(curve: ThetaCurve, epsilon: float, step: float = 0.001) -> tuple[float, float]:
        """(largest p with theta <= epsilon, smallest p with theta >= 2 epsilon) on a fine grid."""
        grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 6)
        theta = curve.evaluate(grid)
        if curve.certified == 0 or theta.max() < 2 * epsilon or theta.min() > epsilon:
            raise DegenerateCurveError(f"Cannot bracket p_c at epsilon={epsilon} on this curve")
        return float(grid[theta <= epsilon].max()), float(grid[theta >= 2 * epsilon].min())

    @staticmethod
    def continuity_check(curve: ThetaCurve, step: float) -> float:
        grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 6)
        theta = curve.evaluate(grid)
        return float(np.diff(theta).max()) if len(theta) > 1 else 0.0

    @staticmethod
    def symmetry_check(curve: ThetaCurve, grid: Sequence[float] = THETA_GRID) -> float:
        """Largest |theta(p) + theta(1 - p) - 1| over the grid, in standard errors."""
        n = curve.certified
        worst = 0.0
        for p in grid:
            q = min(p, 1 - p)
            below = curve.cdf(q)
            above = 1 - curve.cdf(1 - q)
            deviation = below - above
            variance = (below + above - deviation ** 2) / n if n else 0.0
            if variance > 0:
                worst = max(worst, abs(deviation) / math.sqrt(variance))
            elif deviation != 0:
                worst = math.inf
        return worst

    @staticmethod
    def mass_below(curve: ThetaCurve, level: float = PC_LOWER_BOUND) -> float:
        """Fraction of all replicas with a certified root value at most ``level`` or at least 1 - level."""
        if curve.replicas == 0:
            return 0.0
        outside = curve.count_below(level) + (curve.certified - curve.count_below(1 - level))
        return outside / curve.replicas

    def _alpha_replica(self, manifest: SeedManifest, p: float, r: int, distances: Sequence[int], horizon: float,
                       radius: int) -> list[Optional[tuple[int, int]]]:
        region = self.exactness.certify_region(manifest, topology.ROOT, horizon, radius)
        signs = project(region.values, p)
        near = list(range(topology.ball_size(r)))
        outcomes = []
        near_known = bool(region.fixated[near].all())
        event_a = int(bool((signs[near] == 1).all()))
        for distance in distances:
            far = region.ball.code("0" * distance)
            if not near_known or not region.fixated[far]:
                outcomes.append(None)
            else:
                outcomes.append((event_a, int(signs[far] == 1)))
        return outcomes

    def alpha_estimates(self, p: float, r: int, distances: Sequence[int], replicas: int, horizon: float,
                        radius: int, seed: int = 0) -> dict[int, EstimateWithCI]:
        """Mixing estimates |P(A and B) - P(A)P(B)| for A = {+1 on the radius-r ball}, B = {+1 at distance R}."""
        if max(distances) > radius or r > radius:
            raise ValueError(f"events must lie inside the radius-{radius} ball")
        self._require(replicas)
        rows = run_replicas(self._alpha_replica, seed, replicas, self.n_jobs, p, r, tuple(distances), horizon, radius)
        estimates = {}
        for column, distance in enumerate(distances):
            pairs = [row[column] for row in rows if row[column] is not None]
            undetermined = replicas - len(pairs)
            self._check_undetermined(undetermined, replicas)
            if not pairs:
                raise EstimationError(f"No determined replicas at distance {distance}")
            a = np.asarray([pair[0] for pair in pairs], dtype=np.float64)
            b = np.asarray([pair[1] for pair in pairs], dtype=np.float64)
            centered = (a - a.mean()) * (b - b.mean())
            halfwidth = Z_95 * float(centered.std(ddof=1)) / math.sqrt(len(pairs)) if len(pairs) > 1 else 0.0
            estimates[distance] = EstimateWithCI(estimate=float(abs(centered.mean())), replicas=replicas,
                                                 halfwidth=halfwidth, undetermined_fraction=undetermined / replicas)
        return estimates

    def alpha_estimate(self, p: float, r: int, distance: int, replicas: int, horizon: float, radius: int,
                       seed: int = 0) -> EstimateWithCI:
        return self.alpha_estimates(p, r, [distance], replicas, horizon, radius, seed)[distance]

    def _chain_replica(self, manifest: SeedManifest, p: float, depth: int, grid: Sequence[float],
                       radius: int) -> list[bool]:
        ball = topology.ball(topology.ROOT, radius)
        trajectory = self.engine.run(manifest, ball, BoundaryCondition.frozen_initial(), RunMode.discrete(p),
                                     max(grid))
        signs = trajectory.initial_values.copy()
        log = trajectory.flips
        cursor, joined, curve = 0, False, []
        for time in grid:
            while cursor < len(log) and log.time[cursor] <= time:
                signs[log.vertex[cursor]] = log.new_value[cursor]
                cursor += 1
            joined = joined or self.analytics.chain_membership(signs, trajectory.ball, topology.ROOT, depth)
            curve.append(joined)
        return curve

    def chain_time_cdf(self, p: float, depth: int, grid: Sequence[float], replicas: int, radius: int,
                       seed: int = 0) -> list[EstimateWithCI]:
        """Fraction of replicas whose root has joined a depth-D chain by each grid time."""
        if radius < depth:
            raise ValueError(f"radius {radius} cannot host chains of depth {depth}")
        grid = sorted(grid)
        self._require(replicas)
        rows = run_replicas(self._chain_replica, seed, replicas, self.n_jobs, p, depth, tuple(grid), radius)
        return [self.bernoulli(sum(row[k] for row in rows), replicas) for k in range(len(grid))]

    def _never_flip_replica(self, manifest: SeedManifest, q: float, horizon: float, radius: int) -> bool:
        trajectory = self.engine.run_discrete(manifest, topology.ball(topology.ROOT, radius),
                                              BoundaryCondition.frozen_initial(), q, horizon, frozen={"0": -1})
        return bool(trajectory.initial_values[0] == 1 and 0 not in trajectory.flips.vertex)

    def never_flip_probability(self, q: float, horizon: float, replicas: int, radius: int,
                               seed: int = 0) -> EstimateWithCI:
        """P(root starts at +1 and never flips by T) with the neighbor "0" frozen at -1."""
        self._require(replicas)
        hits = sum(run_replicas(self._never_flip_replica, seed, replicas, self.n_jobs, q, horizon, radius))
        return self.bernoulli(hits, replicas)

    def _discrete_replica(self, manifest: SeedManifest, p: float, horizon: float, radius: int) -> bool:
        trajectory = self.engine.run_discrete(manifest, topology.ball(topology.ROOT, radius),
                                              BoundaryCondition.frozen_initial(), p, horizon)
        return bool(trajectory.final_values[0] == 1)

    def discrete_theta(self, p: float, replicas: int, horizon: float, radius: int, seed: int = 0) -> EstimateWithCI:
        """P(root is +1 at T) from direct majority-dynamics runs, independent of the median batch."""
        self._require(replicas)
        hits = sum(run_replicas(self._discrete_replica, seed, replicas, self.n_jobs, p, horizon, radius))
        return self.bernoulli(hits, replicas)

    def _influence_replica(self, manifest: SeedManifest, horizon: float) -> int:
        return self.exactness.influence_set(manifest, topology.ROOT, horizon).size

    def influence_growth(self, horizons: Sequence[float], replicas: int, seed: int = 0) -> dict[float, EstimateWithCI]:
        """Mean influence-set size of the root for each horizon."""
        return {
            horizon: self.mean(run_replicas(self._influence_replica, seed, replicas, self.n_jobs, horizon))
            for horizon in horizons
        }
