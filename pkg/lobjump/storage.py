"""
Artifact store: every stage reads and writes plain files under one output directory.
"""

import json
from pathlib import Path
from typing import Callable, Dict, Optional

import pandas as pd

from lobjump.exceptions import StageInputMissingError

# artifact -> stage that produces it
PRODUCERS: Dict[str, str] = {
    "events.csv": "simulate",
    "truth.csv": "simulate",
    "snapshots.csv": "replay",
    "trades.csv": "label",
    "design_bid.csv": "featurize",
    "design_ask.csv": "featurize",
    "design_bid_rows.csv": "featurize",
    "design_ask_rows.csv": "featurize",
    "fit_bid.json": "fit",
    "fit_ask.json": "fit",
    "path_bid.csv": "fit",
    "path_ask.csv": "fit",
}


class ArtifactStore:
    """Named CSV/JSON artifacts in a run directory."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def path(self, name: str) -> Path:
        return self.root / name

    def exists(self, name: str) -> bool:
        return self.path(name).is_file()

    def require(self, name: str, stage: Optional[str] = None) -> Path:
        """Path of an existing artifact, or StageInputMissingError naming its producer."""
        path = self.path(name)
        if not path.is_file():
            raise StageInputMissingError(name, stage or PRODUCERS.get(name, "the producing stage"))
        return path

    def ensure(self) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        return self.root

    def write(self, name: str, writer: Callable[[Path], None]) -> Path:
        """Hand the artifact path to a module writer."""
        self.ensure()
        path = self.path(name)
        writer(path)
        return path

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        self.ensure()
        path = self.path(name)
        frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
        return path

    def read_frame(self, name: str, **kwargs) -> pd.DataFrame:
        return pd.read_csv(self.require(name), **kwargs)

    def write_json(self, name: str, payload: Dict[str, object]) -> Path:
        self.ensure()
        path = self.path(name)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def read_json(self, name: str) -> Dict[str, object]:
        return json.loads(self.require(name).read_text(encoding="utf-8"))


def get_store(output_dir: str) -> ArtifactStore:
    """Store for a run's output directory"""
    return ArtifactStore(Path(output_dir))
