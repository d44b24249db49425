import json
import logging
from pathlib import Path

from app.core.exceptions import OutputError

logger = logging.getLogger(__name__)


class ManifestRepository:
    """
        Writes the per-experiment ``manifest.json`` (seed manifest, config, policy, summary, wall time).
    """
    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)

    def write_manifest(self, record: dict, name: str = "manifest.json") -> Path:
        path = self.output_dir / name
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(record, sort_keys=True, indent=2, default=str) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OutputError(path, exc.strerror or str(exc)) from exc
        logger.info(f"Wrote manifest to {path}")
        return path

    def read_manifest(self, name: str = "manifest.json") -> dict:
        return json.loads((self.output_dir / name).read_text(encoding="utf-8"))
