import logging
import time
from datetime import datetime, timezone
from typing import Callable

import numpy as np
import pandas as pd

from app.core.config import Settings
from app.core.exception_handlers import EXIT_OK, handle_exception
from app.core.exceptions import BudgetExceededError, DegenerateCurveError, InvariantViolationError
from app.entities.audit import AuditResult
from app.entities.estimate import SamplerPolicy
from app.entities.experiment_config import TRANSPORT_RULES, ExperimentConfig, ExperimentKind
from app.entities.seed_manifest import GENERATOR_VERSION, SeedManifest
from app.entities.task_status import ExperimentStatus, TaskStatusEnum
from app.entities.trajectory import BoundaryCondition, BoundaryKind, RunMode
from app.persistence.repositories.manifest_repository import ManifestRepository
from app.persistence.repositories.result_repository import ResultRepository
from app.use_cases.evaluators.evaluators import Evaluator
from app.use_cases.factories.factories import BoundaryFactory, TransportRuleFactory
from app.use_cases.services import topology
from app.use_cases.services.analytics_service import AnalyticsService, Snapshot, dyadic_tail
from app.use_cases.services.engine_service import EngineService, project, project_trajectory, simulated_ball
from app.use_cases.services.estimator_service import THETA_GRID, EstimatorService
from app.use_cases.services.exactness_service import ExactnessService
from app.use_cases.services.randomness_service import RandomnessService
from app.utils.replicas import run_replicas

logger = logging.getLogger(__name__)

STRUCTURE_COLUMNS = ("seed", "fixated", "checked", "lonely", "neighbor_agreement_rate", "components",
                     "simple_path_components")
CLUSTER_COLUMNS = ("cluster", "label", "size", "boundary_contact", "max_degree", "is_simple_path", "pre_fixation")


class ExperimentOutcome:
    """Tables, summary and invariant audits produced by one experiment kind."""

    def __init__(self):
        self.tables: dict[str, pd.DataFrame] = {}
        self.summary: dict = {}
        self.audits: list[AuditResult] = []


class ExperimentTask:

    def __init__(self, settings: Settings, engine: EngineService, exactness: ExactnessService,
                 analytics: AnalyticsService, estimator: EstimatorService, result_repository: ResultRepository,
                 manifest_repository: ManifestRepository):
        self.settings = settings
        self.engine = engine
        self.exactness = exactness
        self.analytics = analytics
        self.estimator = estimator
        self.result_repository = result_repository
        self.manifest_repository = manifest_repository
        self._runners: dict[ExperimentKind, Callable[[ExperimentConfig], ExperimentOutcome]] = {
            ExperimentKind.simulate: self.run_simulate,
            ExperimentKind.commutation: self.run_commutation,
            ExperimentKind.theta: self.run_theta,
            ExperimentKind.alpha: self.run_alpha,
            ExperimentKind.trace: self.run_trace,
            ExperimentKind.resample: self.run_resample,
            ExperimentKind.chains: self.run_chains,
            ExperimentKind.audit: self.run_audit,
            ExperimentKind.tailcheck: self.run_tailcheck,
            ExperimentKind.neverflip: self.run_neverflip,
        }

    def run_experiment(self, config: ExperimentConfig) -> int:
        """
        Runs one experiment end to end and returns its exit status.

        Args:
            config (ExperimentConfig): Validated experiment config.

        Returns:
            int: 0 on success, 2 when an invariant suite failed, 1 on operational errors.
        """
        status = ExperimentStatus(kind=config.kind, created_at=datetime.now(timezone.utc))
        logger.info(f"Experiment {config.kind.value} {status.status.value} (seed {config.seed})")
        try:
            self._update(status, TaskStatusEnum.IN_PROGRESS)
            started = time.perf_counter()
            outcome = self._runners[config.kind](config)
            wall_time = time.perf_counter() - started
            self._write(config, outcome, wall_time)
            Evaluator.raise_on_violation(outcome.audits)
            status.exit_code = EXIT_OK
            self._update(status, TaskStatusEnum.COMPLETED)
        except Exception as e:
            status.exit_code = handle_exception(e)
            status.error = str(e)
            self._update(status, TaskStatusEnum.FAILED)
        return status.exit_code

    @staticmethod
    def _update(status: ExperimentStatus, value: TaskStatusEnum):
        status.status = value
        status.updated_at = datetime.now(timezone.utc)
        log = logger.error if value == TaskStatusEnum.FAILED else logger.info
        log(f"Experiment {status.kind.value} {value.value}" + (f": {status.error}" if status.error else ""))

    def _write(self, config: ExperimentConfig, outcome: ExperimentOutcome, wall_time: float):
        manifest = SeedManifest(master_seed=config.seed)
        version = self.settings.artifact_version
        for name, frame in outcome.tables.items():
            self.result_repository.write_table(name, frame, manifest, version)
        violations = sum(audit.violations for audit in outcome.audits)
        self.manifest_repository.write_manifest({
            "seed_manifest": manifest.model_dump(mode="json"),
            "generator_version": GENERATOR_VERSION,
            "artifact_version": version,
            "config": config.model_dump(mode="json"),
            "replicas": config.replicas,
            "policy": {"r_schedule": list(config.r_schedule or self.settings.r_schedule), "fixation": config.fixation},
            "wall_time": wall_time,
            "files": sorted(outcome.tables),
            "summary": {**outcome.summary, "violations": violations},
        })

    def _ball(self, config: ExperimentConfig, center: str = topology.ROOT):
        return topology.ball(center, config.radius)

    def _density(self, config: ExperimentConfig, default: float = 0.5) -> float:
        return default if config.p is None else config.p

    def _replicas(self, function, config: ExperimentConfig, *args) -> list:
        return run_replicas(function, config.seed, config.replicas, self.settings.n_jobs, *args)

    def run_simulate(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        manifest = SeedManifest(master_seed=config.seed)
        ball = self._ball(config)
        boundary = BoundaryFactory.get_boundary(config.boundary, config.sign if
                                                config.boundary == BoundaryKind.frozen_discrete else None)
        if config.boundary == BoundaryKind.frozen_discrete:
            trajectory = self.engine.run_discrete(manifest, ball, boundary, self._density(config), config.horizon)
            outcome.audits.append(AuditResult(check="median_consistency", events=len(trajectory.flips),
                                              violations=AnalyticsService.median_consistency(trajectory)))
        else:
            median = self.engine.run(manifest, ball, boundary, RunMode.median(), config.horizon)
            outcome.audits.extend(Evaluator.audit_trajectory(median))
            trajectory = median if config.p is None else project_trajectory(median, config.p)
        outcome.tables["flips.csv"] = trajectory.to_frame()
        root = trajectory.final_configuration().get(topology.ROOT)
        outcome.summary = {
            "events": trajectory.event_count,
            "flips": len(trajectory.flips),
            "root_final": root if isinstance(root, int) else (root.model_dump() if root is not None else None),
        }
        return outcome

    def _commutation_replica(self, manifest: SeedManifest, ball, densities, horizon) -> list[dict]:
        rows = []
        for p in densities:
            result = Evaluator.check_commutation(self.engine, manifest, ball, p, horizon)
            rows.append({"seed": manifest.master_seed, "p": p, "events": result.events,
                         "passed": result.passed, "detail": result.detail or ""})
        return rows

    def run_commutation(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        rows = [row for batch in self._replicas(self._commutation_replica, config, self._ball(config),
                                                config.densities, config.horizon) for row in batch]
        frame = pd.DataFrame(rows, columns=["seed", "p", "events", "passed", "detail"])
        violations = int((~frame["passed"]).sum()) if len(frame) else 0
        outcome.tables["commutation.csv"] = frame
        outcome.audits.append(AuditResult(check="commutation", violations=violations, events=int(frame["events"].sum()),
                                          detail=next((d for d in frame["detail"] if d), None)))
        outcome.summary = {"runs": len(frame)}
        return outcome

    def run_theta(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        policy = SamplerPolicy(r_schedule=config.r_schedule, fixation=config.fixation)
        certificates = self.estimator.theta_certificates(config.replicas, config.horizon, policy, config.seed)
        curve = self.estimator.curve_from(certificates, config.horizon)
        grid = config.p_grid or THETA_GRID
        rows = []
        for p in grid:
            lower, upper = curve.bounds(p)
            rows.append({"p": p, "estimate": curve.cdf(p), "ci": curve.halfwidth(p), "lower": lower, "upper": upper,
                         "certified": curve.certified, "undetermined": curve.undetermined,
                         "flags": ";".join(curve.flags())})
        outcome.tables["theta.csv"] = pd.DataFrame(rows)
        outcome.tables["certificates.csv"] = pd.DataFrame(
            [{"replica": index, **certificate.to_row(), "fixated": certificate.fixated}
             for index, certificate in enumerate(certificates)])
        try:
            bracket = list(self.estimator.pc_bracket(curve, config.epsilon))
        except DegenerateCurveError as e:
            logger.warning(f"No p_c bracket: {e}")
            bracket = None
        outcome.summary = {
            "theta_half": curve.cdf(0.5),
            "symmetry_max_sigma": self.estimator.symmetry_check(curve),
            "pc_bracket": bracket,
            "continuity_max_increment": self.estimator.continuity_check(curve, config.step),
            "mass_below_pc_lower_bound": self.estimator.mass_below(curve),
            "undetermined_fraction": curve.undetermined / curve.replicas,
            "proxy_failure_fraction": curve.proxy_failures / max(curve.certified, 1),
        }
        if config.cross_check:
            cross = []
            for p in config.densities:
                direct = self.estimator.discrete_theta(p, config.replicas, config.horizon, config.radius,
                                                       config.seed + config.replicas)
                median, halfwidth = curve.cdf(p), curve.halfwidth(p)
                cross.append({"p": p, "median_estimate": median, "median_ci": halfwidth,
                              "discrete_estimate": direct.estimate, "discrete_ci": direct.halfwidth,
                              "overlap": abs(median - direct.estimate) <= halfwidth + direct.halfwidth})
            outcome.tables["theta_crosscheck.csv"] = pd.DataFrame(cross)
        return outcome

    def run_alpha(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        estimates = self.estimator.alpha_estimates(self._density(config, 0.3), config.r, config.distances,
                                                   config.replicas, config.horizon, config.radius, config.seed)
        outcome.tables["alpha.csv"] = pd.DataFrame(
            [{"distance": distance, **estimate.row()} for distance, estimate in estimates.items()])
        values = [estimates[d].estimate for d in config.distances]
        outcome.summary = {"alpha": dict(zip(map(str, config.distances), values))}
        return outcome

    def _trace_replica(self, manifest: SeedManifest, config: ExperimentConfig) -> dict:
        trajectory = self.engine.run(manifest, self._ball(config), BoundaryCondition.frozen_initial(),
                                     RunMode.median(), config.horizon)
        trace = self.analytics.trace_of(trajectory, topology.ROOT)
        pair = self.analytics.threshold_pair(trajectory, topology.ROOT)
        return {"seed": manifest.master_seed, "size": trace.size, "touches_boundary": trace.touches_boundary,
                "identity_holds": trace.members == pair.difference}

    def run_trace(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        frame = pd.DataFrame(self._replicas(self._trace_replica, config, config))
        outcome.tables["trace.csv"] = frame
        outcome.audits.append(AuditResult(check="trace_identity", violations=int((~frame["identity_holds"]).sum()),
                                          events=len(frame)))
        outcome.summary = {"mean_size": float(frame["size"].mean()),
                           "boundary_fraction": float(frame["touches_boundary"].mean()),
                           "size_tail": dyadic_tail(frame["size"])}
        return outcome

    def _resample_replica(self, manifest: SeedManifest, config: ExperimentConfig) -> dict:
        difference = self.analytics.resampling_difference(manifest, self._density(config), config.horizon,
                                                          config.target, config.radius,
                                                          resample_clock=config.resample_clock)
        return {"seed": manifest.master_seed, "size": difference.size,
                "touches_boundary": difference.touches_boundary}

    def run_resample(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        frame = pd.DataFrame(self._replicas(self._resample_replica, config, config))
        outcome.tables["resample.csv"] = frame
        outcome.summary = {"mean_size": float(frame["size"].mean()),
                           "boundary_fraction": float(frame["touches_boundary"].mean()),
                           "size_tail": dyadic_tail(frame["size"])}
        return outcome

    def _triple_replica(self, manifest: SeedManifest, config: ExperimentConfig) -> tuple[int, int]:
        trajectory = self.engine.run(manifest, self._ball(config), BoundaryCondition.frozen_initial(),
                                     RunMode.discrete(self._density(config)), config.horizon)
        return self.analytics.spanning_triple_fraction(trajectory.final_values, trajectory.ball, config.radius, 1)

    def run_chains(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        p = self._density(config)
        cdf = self.estimator.chain_time_cdf(p, config.depth, config.times, config.replicas, config.radius,
                                            config.seed)
        outcome.tables["chains.csv"] = pd.DataFrame(
            [{"t": t, **estimate.row()} for t, estimate in zip(sorted(config.times), cdf)])
        counts = self._replicas(self._triple_replica, config, config)
        spanning = sum(count[0] for count in counts)
        with_triple = sum(count[1] for count in counts)
        values = [estimate.estimate for estimate in cdf]
        outcome.summary = {
            "cdf_nondecreasing": all(a <= b for a, b in zip(values, values[1:])),
            "spanning_clusters": spanning,
            "triple_point_fraction": with_triple / spanning if spanning else None,
        }
        return outcome

    def _audit_replica(self, manifest: SeedManifest, config: ExperimentConfig) -> dict:
        ball = self._ball(config)
        p = self._density(config)
        trajectory = self.engine.run(manifest, ball, BoundaryCondition.frozen_initial(), RunMode.median(),
                                     config.horizon)
        results = Evaluator.audit_trajectory(trajectory)
        results.append(Evaluator.check_bracketing(self.engine, manifest, ball, config.horizon))
        simulated = simulated_ball(ball, BoundaryCondition.frozen_initial())
        randomness = RandomnessService(manifest)
        upper = project(randomness.initial_uniforms(simulated.addresses), p)
        lower = upper.copy()
        lowered = int(randomness.tie_break(topology.ROOT) * ball.size)
        lower[lowered] = -1
        results.append(Evaluator.check_attractiveness(self.engine, manifest, ball, BoundaryCondition.frozen_initial(),
                                                      lower, upper, config.horizon))
        region = self.exactness.certify_region(manifest, topology.ROOT, config.horizon, config.radius)
        snapshot = Snapshot.of_region(region)
        components = self.analytics.disagreement_components(snapshot)
        clusters = self.analytics.agreement_clusters(snapshot)
        checked, lonely = self.analytics.lonely_vertices(snapshot)
        branching = [c for c in components.clusters if not c.is_simple_path]
        if lonely:
            logger.warning(f"Seed {manifest.master_seed}: fixated vertices without an agreeing neighbor: {lonely[:5]}")
        seed = manifest.master_seed
        return {
            "seed": seed,
            "audits": [result.model_dump() for result in results],
            "fixated": len(snapshot.analysed),
            "checked": checked,
            "lonely": len(lonely),
            "neighbor_agreement_rate": 1.0 - len(lonely) / checked if checked else 1.0,
            "components": len(components.clusters),
            "simple_path_components": len(components.clusters) - len(branching),
            "cluster_rows": [{"seed": seed, **row} for row in clusters.rows()],
            "component_rows": [{"seed": seed, **row} for row in components.rows()],
            "cluster_sizes": clusters.sizes(),
        }

    def run_audit(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        rows = self._replicas(self._audit_replica, config, config)
        audit_rows = [{"seed": row["seed"], "check": audit["check"], "violations": audit["violations"],
                       "events": audit["events"]} for row in rows for audit in row["audits"]]
        audit_frame = pd.DataFrame(audit_rows)
        outcome.tables["audit.csv"] = audit_frame
        for check, group in audit_frame.groupby("check", sort=True):
            outcome.audits.append(AuditResult(check=check, violations=int(group["violations"].sum()),
                                              events=int(group["events"].sum())))
        structure = pd.DataFrame([{key: row[key] for key in STRUCTURE_COLUMNS} for row in rows],
                                 columns=list(STRUCTURE_COLUMNS))
        outcome.tables["structure.csv"] = structure
        outcome.tables["clusters.csv"] = pd.DataFrame([r for row in rows for r in row["cluster_rows"]],
                                                      columns=["seed", *CLUSTER_COLUMNS])
        outcome.tables["disagreement.csv"] = pd.DataFrame([r for row in rows for r in row["component_rows"]],
                                                          columns=["seed", *CLUSTER_COLUMNS])
        components = int(structure["components"].sum())
        outcome.audits.append(AuditResult(check="fixation_neighbor_agreement", events=int(structure["checked"].sum()),
                                          violations=int(structure["lonely"].sum())))
        outcome.audits.append(AuditResult(
            check="fixation_simple_paths", events=components,
            violations=components - int(structure["simple_path_components"].sum())))
        transport = []
        for name in (config.rule,) if config.rule else TRANSPORT_RULES:
            rule = TransportRuleFactory.get_rule(name, config.window)
            audit = Evaluator.mass_transport_audit(self.estimator, rule, config.replicas, config.label_time,
                                                   config.seed, config.miss_tolerance)
            transport.append({"rule": name, "window": audit.window, "time": audit.time,
                              "mass_out": audit.mass_out.estimate, "mass_out_ci": audit.mass_out.halfwidth,
                              "mass_in": audit.mass_in.estimate, "mass_in_ci": audit.mass_in.halfwidth,
                              "miss_rate": audit.miss_rate, "passed": audit.passed})
            outcome.audits.append(AuditResult(check=f"mass_transport_{name}", violations=0 if audit.passed else 1,
                                              events=config.replicas))
        outcome.tables["transport.csv"] = pd.DataFrame(transport)
        sizes = [size for row in rows for size in row["cluster_sizes"]]
        checked = int(structure["checked"].sum())
        outcome.summary = {
            "neighbor_agreement_rate": 1.0 - int(structure["lonely"].sum()) / checked if checked else 1.0,
            "simple_path_fraction": int(structure["simple_path_components"].sum()) / components if components else 1.0,
            "cluster_size_tail": dyadic_tail(sizes),
        }
        return outcome

    def run_tailcheck(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        result = self.exactness.tail_check(config.horizon, config.length, config.replicas, config.seed)
        outcome.tables["tailcheck.csv"] = pd.DataFrame([{
            "T": result.horizon, "k": result.length, "replicas": result.replicas, "hits": result.hits,
            "frequency": result.frequency, "sigma": result.sigma, "bound": result.bound,
            "vacuous": result.vacuous, "passed": result.passed,
        }])
        outcome.audits.append(AuditResult(check="chronological_tail", violations=0 if result.passed else 1,
                                          events=result.replicas))
        try:
            growth = self.estimator.influence_growth([config.horizon], config.replicas, config.seed)
            outcome.tables["influence.csv"] = pd.DataFrame(
                [{"T": horizon, **estimate.row()} for horizon, estimate in growth.items()])
        except BudgetExceededError as e:
            logger.warning(f"Influence sets at T={config.horizon} skipped: {e}")
        outcome.summary = {"frequency": result.frequency, "bound": result.bound, "vacuous": result.vacuous}
        return outcome

    def run_neverflip(self, config: ExperimentConfig) -> ExperimentOutcome:
        outcome = ExperimentOutcome()
        q = self._density(config)
        rows = []
        for horizon in sorted(config.times):
            estimate = self.estimator.never_flip_probability(q, horizon, config.replicas, config.radius, config.seed)
            rows.append({"q": q, "T": horizon, **estimate.row()})
        frame = pd.DataFrame(rows)
        outcome.tables["neverflip.csv"] = frame
        outcome.summary = {"estimates": dict(zip(map(str, frame["T"]), frame["estimate"]))}
        return outcome
