import enum
from datetime import datetime
from typing import Optional

from pydantic import BaseModel

from app.entities.experiment_config import ExperimentKind


class TaskStatusEnum(str, enum.Enum):
    QUEUED = "queued"
    IN_PROGRESS = "in-progress"
    COMPLETED = "completed"
    FAILED = "failed"


class ExperimentStatus(BaseModel):
    kind: ExperimentKind
    status: TaskStatusEnum = TaskStatusEnum.QUEUED
    exit_code: Optional[int] = None
    error: Optional[str] = None
    created_at: datetime
    updated_at: Optional[datetime] = None
    model_config = {
        'validate_assignment': True
    }
