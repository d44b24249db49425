from typing import Callable, Optional

from app.core.exceptions import BudgetExceededError
from app.entities.certificate import Certificate, Verdict
from app.entities.estimate import SamplerKind, SamplerPolicy
from app.entities.seed_manifest import SeedManifest
from app.entities.trajectory import BoundaryCondition, BoundaryKind
from app.use_cases.evaluators.transport_rules import (IdentityRule, LargerNeighborRule, NearestBelowRule,
                                                      TransportRule)
from app.use_cases.services.exactness_service import ExactnessService


class BoundaryFactory:
    @staticmethod
    def get_boundary(kind: BoundaryKind, sign: Optional[int] = None) -> BoundaryCondition:
        if kind == BoundaryKind.free:
            return BoundaryCondition.free()
        elif kind == BoundaryKind.frozen_initial:
            return BoundaryCondition.frozen_initial()
        elif kind == BoundaryKind.frozen_low:
            return BoundaryCondition.frozen_low()
        elif kind == BoundaryKind.frozen_high:
            return BoundaryCondition.frozen_high()
        elif kind == BoundaryKind.frozen_discrete:
            return BoundaryCondition.frozen_discrete(sign)
        else:
            raise ValueError(f"Unsupported boundary condition: {kind}")


class TransportRuleFactory:
    @staticmethod
    def get_rule(name: str, window: int = 4) -> TransportRule:
        if name == IdentityRule.name:
            return IdentityRule()
        elif name == LargerNeighborRule.name:
            return LargerNeighborRule()
        elif name == NearestBelowRule.name:
            return NearestBelowRule(reach=window)
        else:
            raise ValueError(f"Unsupported transport rule: {name}")


class SamplerFactory:
    @staticmethod
    def get_sampler(policy: SamplerPolicy,
                    exactness: ExactnessService) -> Callable[[SeedManifest, str, float], Certificate]:
        """Callable producing a certificate for (manifest, vertex, horizon) under ``policy``."""
        if policy.kind == SamplerKind.sandwich:
            def sample(manifest, address, horizon):
                return exactness.sandwich_certify(manifest, address, horizon, policy.r_schedule,
                                                  fixation=policy.fixation)
            return sample
        elif policy.kind == SamplerKind.backward:
            def sample(manifest, address, horizon):
                try:
                    spin = exactness.backward_state(manifest, address, horizon)
                except BudgetExceededError:
                    return Certificate(vertex=address, horizon=horizon, radius=0, verdict=Verdict.undetermined)
                return Certificate(vertex=address, horizon=horizon, radius=0, verdict=Verdict.certified, spin=spin)
            return sample
        else:
            raise ValueError(f"Unsupported sampler policy: {policy.kind}")
