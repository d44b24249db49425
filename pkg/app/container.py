from dependency_injector import containers, providers

from app.core.config import settings as app_settings
from app.persistence.repositories.manifest_repository import ManifestRepository
from app.persistence.repositories.result_repository import ResultRepository
from app.use_cases.services.analytics_service import AnalyticsService
from app.use_cases.services.engine_service import EngineService
from app.use_cases.services.estimator_service import EstimatorService
from app.use_cases.services.exactness_service import ExactnessService
from app.use_cases.tasks.experiment_tasks import ExperimentTask


class AppContainer(containers.DeclarativeContainer):
    wiring_config = containers.WiringConfiguration(modules=["app.presentation.controllers.experiment_controller"])

    settings = providers.Object(app_settings)
    output_dir = providers.Object(app_settings.output_dir)

    # Repositories
    result_repository = providers.Factory(ResultRepository, output_dir=output_dir)
    manifest_repository = providers.Factory(ManifestRepository, output_dir=output_dir)

    # Services
    engine_service = providers.Singleton(EngineService, max_events=settings.provided.max_events)
    exactness_service = providers.Singleton(ExactnessService, engine=engine_service,
                                            backward_budget=settings.provided.backward_budget,
                                            r_schedule=settings.provided.r_schedule)
    analytics_service = providers.Singleton(AnalyticsService, engine=engine_service)
    estimator_service = providers.Singleton(EstimatorService, engine=engine_service, exactness=exactness_service,
                                            analytics=analytics_service,
                                            min_replicas=settings.provided.min_replicas,
                                            undetermined_bound=settings.provided.undetermined_bound,
                                            n_jobs=settings.provided.n_jobs)

    # Tasks
    experiment_task = providers.Factory(ExperimentTask, settings=settings, engine=engine_service,
                                        exactness=exactness_service, analytics=analytics_service,
                                        estimator=estimator_service, result_repository=result_repository,
                                        manifest_repository=manifest_repository)
