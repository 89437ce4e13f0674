"""Run manifests: enough recorded state to re-execute a run bit-identically.

The manifest holds the resolved config snapshot, per-stage timestamps and
sha256 digests of every artifact a stage wrote. Timestamps live only
here, never inside the artifacts themselves, so reruns stay
byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path
from typing import Any, Mapping

MANIFEST_NAME = "manifest.json"


def file_digest(path: Path | str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class RunManifest:
    def __init__(self, path: Path, config: Mapping[str, Any] | None = None):
        self.path = Path(path)
        self.data: dict[str, Any] = {"config": dict(config or {}), "stages": []}

    @classmethod
    def load_or_create(cls, outdir: Path, config: Mapping[str, Any]) -> "RunManifest":
        """Reuse an existing manifest in outdir, refreshing the config snapshot."""
        manifest = cls(Path(outdir) / MANIFEST_NAME, config)
        if manifest.path.exists():
            manifest.data = json.loads(manifest.path.read_text(encoding="utf-8"))
            manifest.data["config"] = dict(config)
        return manifest

    def record_stage(self, name: str, outputs: Mapping[str, Path | str],
                     extra: Mapping[str, Any] | None = None) -> None:
        stage = {
            "stage": name,
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "outputs": {
                label: {"path": str(path), "sha256": file_digest(path)}
                for label, path in outputs.items()
            },
        }
        if extra:
            stage.update(extra)
        # rerunning a stage replaces its previous entry
        self.data["stages"] = [s for s in self.data["stages"] if s["stage"] != name]
        self.data["stages"].append(stage)
        self.save()

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, ensure_ascii=False) + "\n",
                             encoding="utf-8")
