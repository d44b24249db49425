import json
import logging
from pathlib import Path

import pandas as pd

from app.core.exceptions import OutputError
from app.entities.seed_manifest import SeedManifest

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


class ResultRepository:
    """
        Writes tabular experiment results as CSV files.

        Every file starts with a ``# manifest: {...}`` comment line carrying the seed manifest and
        the artifact version, followed by a mandatory header row.
    """
    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)

    def write_table(self, name: str, frame: pd.DataFrame, manifest: SeedManifest, artifact_version: str) -> Path:
        path = self.output_dir / name
        stamp = json.dumps({"artifact_version": artifact_version, **manifest.model_dump(mode="json")},
                           sort_keys=True)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding="utf-8", newline="") as handle:
                handle.write(f"# manifest: {stamp}\n")
                frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as exc:
            raise OutputError(path, exc.strerror or str(exc)) from exc
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    @staticmethod
    def read_table(path: Path) -> pd.DataFrame:
        return pd.read_csv(path, comment="#")
