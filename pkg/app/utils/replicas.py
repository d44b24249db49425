import logging
from typing import Callable, TypeVar

from joblib import Parallel, delayed

from app.entities.seed_manifest import SeedManifest

logger = logging.getLogger(__name__)

T = TypeVar("T")


def run_replicas(function: Callable[..., T], seed: int, replicas: int, n_jobs: int = 1, *args) -> list[T]:
    """Evaluate ``function(manifest_i, *args)`` for replica manifests seed + i, results in replica order."""
    base = SeedManifest(master_seed=seed)
    manifests = [base.replica(index) for index in range(replicas)]
    if n_jobs == 1 or replicas < 2:
        return [function(manifest, *args) for manifest in manifests]
    logger.debug(f"Dispatching {replicas} replicas to {n_jobs} workers")
    return Parallel(n_jobs=n_jobs)(delayed(function)(manifest, *args) for manifest in manifests)
