from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
import os


class Settings(BaseSettings):
    """
       Settings class to handle environment variables using the Pydantic library.
       Attributes:
           output_dir (str): Directory receiving result CSVs and manifests.
           log_level (str): Root logging level.
           max_events (int): Event budget of a single engine run.
           backward_budget (int): Memo-entry budget of the backward oracle.
           n_jobs (int): joblib worker count used to fan out replicas.
           min_replicas (int): Estimators refuse to report below this replica count.
           undetermined_bound (float): Largest tolerated fraction of Undetermined replicas.
           r_schedule (tuple[int, ...]): Default sandwich certification radii.
           artifact_version (str): Version string embedded in every manifest.
       """
    output_dir: str = Field(default=os.path.join(os.getcwd(), "results"), validation_alias="OUTPUT_DIR")
    log_level: str = Field(default="INFO", validation_alias="LOG_LEVEL")
    max_events: int = Field(default=50_000_000, gt=0, validation_alias="MAX_EVENTS")
    backward_budget: int = Field(default=2_000_000, gt=0, validation_alias="BACKWARD_BUDGET")
    n_jobs: int = Field(default=1, validation_alias="N_JOBS")
    min_replicas: int = Field(default=1000, gt=0, validation_alias="MIN_REPLICAS")
    undetermined_bound: float = Field(default=0.05, ge=0, le=1, validation_alias="UNDETERMINED_BOUND")
    r_schedule: tuple[int, ...] = Field(default=(4, 8, 12, 16), validation_alias="R_SCHEDULE")
    artifact_version: str = Field(default="0.3.0")

    model_config = SettingsConfigDict(
        # Specify the path to the .env file
        env_file=os.path.join(os.path.dirname(__file__), '../../.env'),
        env_file_encoding='utf-8',
        populate_by_name=True,
        extra='ignore',
    )


# Instantiate the settings object
settings = Settings()
