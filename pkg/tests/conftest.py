import pytest

from app.core.config import Settings
from app.entities.seed_manifest import SeedManifest
from app.persistence.repositories.manifest_repository import ManifestRepository
from app.persistence.repositories.result_repository import ResultRepository
from app.use_cases.services import topology
from app.use_cases.services.analytics_service import AnalyticsService
from app.use_cases.services.engine_service import EngineService
from app.use_cases.services.estimator_service import EstimatorService
from app.use_cases.services.exactness_service import ExactnessService
from app.use_cases.tasks.experiment_tasks import ExperimentTask

SEEDS = (1, 7, 42, 1234, 2 ** 63 + 5)


@pytest.fixture
def manifest():
    return SeedManifest(master_seed=42)


@pytest.fixture
def small_ball():
    return topology.ball(topology.ROOT, 4)


@pytest.fixture
def test_settings(tmp_path):
    return Settings(output_dir=str(tmp_path / "results"), min_replicas=1, undetermined_bound=0.5,
                    max_events=2_000_000, backward_budget=200_000, r_schedule=(2, 4, 6), n_jobs=1)


@pytest.fixture
def engine(test_settings):
    return EngineService(max_events=test_settings.max_events)


@pytest.fixture
def exactness(engine, test_settings):
    return ExactnessService(engine, backward_budget=test_settings.backward_budget,
                            r_schedule=test_settings.r_schedule)


@pytest.fixture
def analytics(engine):
    return AnalyticsService(engine)


@pytest.fixture
def estimator(engine, exactness, analytics, test_settings):
    return EstimatorService(engine, exactness, analytics, min_replicas=test_settings.min_replicas,
                            undetermined_bound=test_settings.undetermined_bound, n_jobs=1)


@pytest.fixture
def experiment_task(test_settings, engine, exactness, analytics, estimator):
    return ExperimentTask(test_settings, engine, exactness, analytics, estimator,
                          ResultRepository(test_settings.output_dir), ManifestRepository(test_settings.output_dir))
