from typing import Optional

from pydantic import BaseModel

from app.entities.estimate import EstimateWithCI


class AuditResult(BaseModel):
    check: str
    violations: int = 0
    events: int = 0
    detail: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


class TransportAudit(BaseModel):
    rule: str
    window: int
    time: float
    mass_out: EstimateWithCI
    mass_in: EstimateWithCI
    miss_rate: float
    miss_tolerance: float = 0.01

    @property
    def passed(self) -> bool:
        return self.miss_rate <= self.miss_tolerance and self.mass_out.overlaps(self.mass_in, sigmas=3.0)
