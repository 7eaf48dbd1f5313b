"""
Run manifests for the Quintain CLI.
A manifest records everything needed to re-run a command: resolved resource
paths with content digests, seeds, the effective configuration and the tool version.
"""
import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from config.settings import APP_NAME, APP_VERSION


def file_digest(path: Union[str, Path]) -> Optional[str]:
    try:
        with open(path, "rb") as f:
            return hashlib.sha256(f.read()).hexdigest()
    except OSError:
        return None


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    argv: List[str]
    resources: Dict[str, str] = field(default_factory=dict)
    digests: Dict[str, Optional[str]] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    tool: str = f"{APP_NAME} {APP_VERSION}"
    started_at: str = field(default_factory=_now)
    finished_at: Optional[str] = None
    exit_code: Optional[int] = None
    notes: List[str] = field(default_factory=list)

    def add_resource(self, name: str, path: Optional[Union[str, Path]]) -> None:
        """Record a resource by absolute path; remote references are kept verbatim."""
        if path is None:
            return
        text = str(path)
        if Path(text).exists():
            resolved = str(Path(text).resolve())
            self.resources[name] = resolved
            self.digests[name] = file_digest(resolved)
        else:
            self.resources[name] = text

    def finish(self, exit_code: Optional[int] = None) -> "RunManifest":
        self.finished_at = _now()
        self.exit_code = exit_code
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def manifest_path_for(out: Union[str, Path]) -> Path:
    return Path(f"{out}.manifest.json")
