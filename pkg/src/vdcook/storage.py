"""Content-addressed clip store plus append-only record logs.

Layout under the store root:
  clips/<first2hex>/<clip_id>.vdc   container payloads
  records/<name>.log                one canonical-JSON record per line;
                                    for keyed logs the latest line wins
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from .canonical import canonical_line
from .errors import MissingPayload

CLIPS_LOG = "clips"
METADATA_LOG = "metadata"
SOURCES_LOG = "sources"
ANNOTATORS_LOG = "annotators"
SCHEDULES_LOG = "schedules"
JOBS_LOG = "jobs"


class ClipStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "clips").mkdir(parents=True, exist_ok=True)
        (self.root / "records").mkdir(parents=True, exist_ok=True)
        self._log_lock = threading.Lock()

    def clip_path(self, clip_id: str) -> Path:
        return self.root / "clips" / clip_id[:2] / f"{clip_id}.vdc"

    def has_clip(self, clip_id: str) -> bool:
        return self.clip_path(clip_id).exists()

    def save_clip(self, clip_id: str, data: bytes) -> Path:
        path = self.clip_path(clip_id)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            tmp.rename(path)
        return path

    def load_clip(self, clip_id: str) -> bytes:
        path = self.clip_path(clip_id)
        if not path.exists():
            raise MissingPayload(f"no container stored for {clip_id}")
        return path.read_bytes()

    def _log_path(self, name: str) -> Path:
        return self.root / "records" / f"{name}.log"

    def append_record(self, name: str, obj: dict) -> None:
        line = canonical_line(obj)
        with self._log_lock:
            with open(self._log_path(name), "a", encoding="utf-8") as fh:
                fh.write(line)

    def read_records(self, name: str) -> list[dict]:
        path = self._log_path(name)
        if not path.exists():
            return []
        out = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def record_count(self, name: str) -> int:
        path = self._log_path(name)
        if not path.exists():
            return 0
        with open(path, encoding="utf-8") as fh:
            return sum(1 for line in fh if line.strip())
