"""Source connectors, batch ingestion with dedup, and re-crawl scheduling.

Connectors implement fetch(query, since) -> items. The crawling protocol
here is deliberately in-process: directory and mock-HTTP connectors stand
in for real crawlers, and uploads are push-only.
"""

from __future__ import annotations

import base64
import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import httpx

from .canonical import format_time, parse_time, utc_now
from .container import compute_clip_id, decode_clip_container
from .errors import (
    RecrawlFailed,
    RecrawlNotDue,
    SourceExists,
    UnknownConnector,
    UnknownSource,
    ValidationError,
    VdcookError,
)
from .model import ClipRecord, ProvenanceChain

logger = logging.getLogger(__name__)

CONNECTOR_KINDS = ("local_dir", "mock_http", "upload")

# internal pseudo-source for reinjected synthetic clips
SYNTHETIC_SOURCE_ID = "__synthesis__"

_ORIGIN_FOR_KIND = {"local_dir": "retrieved", "mock_http": "retrieved",
                    "upload": "uploaded"}
_PROVENANCE_FOR_KIND = {"local_dir": "crawled", "mock_http": "crawled",
                        "upload": "uploaded"}


@dataclass(frozen=True)
class SourceDescriptor:
    source_id: str
    connector_kind: str
    config: dict
    enabled: bool = True

    def __post_init__(self):
        if self.connector_kind not in CONNECTOR_KINDS:
            raise UnknownConnector(self.connector_kind)
        if not self.source_id:
            raise ValidationError("source_id must be nonempty")

    def to_dict(self) -> dict:
        return {"source_id": self.source_id, "connector_kind": self.connector_kind,
                "config": dict(self.config), "enabled": self.enabled}

    @classmethod
    def from_dict(cls, d: dict) -> "SourceDescriptor":
        return cls(d["source_id"], d["connector_kind"], d.get("config", {}),
                   d.get("enabled", True))


@dataclass(frozen=True)
class CrawlSchedule:
    source_id: str
    interval_s: int
    next_run: str
    last_run: Optional[str] = None
    last_new_clips: int = 0

    def __post_init__(self):
        if self.interval_s < 1:
            raise ValidationError("interval_s must be >= 1")

    def to_dict(self) -> dict:
        return {"source_id": self.source_id, "interval_s": self.interval_s,
                "next_run": self.next_run, "last_run": self.last_run,
                "last_new_clips": self.last_new_clips}

    @classmethod
    def from_dict(cls, d: dict) -> "CrawlSchedule":
        return cls(d["source_id"], d["interval_s"], d["next_run"],
                   d.get("last_run"), d.get("last_new_clips", 0))


@dataclass(frozen=True)
class FetchItem:
    container_bytes: bytes
    locator: str
    license: str = "unknown"


@dataclass(frozen=True)
class IngestResult:
    clip_id: Optional[str]
    accepted: bool
    reason: str  # "ok" | "duplicate" | "invalid_container"


def _fetch_local_dir(config: dict, query: str, since) -> list[FetchItem]:
    root = Path(config["root"])
    license_str = config.get("license", "unknown")
    items = []
    for path in sorted(root.glob("**/*.vdc")):
        items.append(FetchItem(path.read_bytes(), str(path), license_str))
    return items


def _fetch_upload(config: dict, query: str, since) -> list[FetchItem]:
    return []  # uploads are pushed through ingest_batch, never crawled


class ConnectorRunner:
    """Dispatches fetches to connector implementations; the mock HTTP
    connector honors an injectable transport so tests need no socket."""

    def __init__(self, http_transport=None):
        self._transport = http_transport

    def fetch(self, source: SourceDescriptor, query: str, since) -> list[FetchItem]:
        if source.connector_kind == "local_dir":
            return _fetch_local_dir(source.config, query, since)
        if source.connector_kind == "upload":
            return _fetch_upload(source.config, query, since)
        if source.connector_kind == "mock_http":
            return self._fetch_http(source.config, query, since)
        raise UnknownConnector(source.connector_kind)

    def _fetch_http(self, config: dict, query: str, since) -> list[FetchItem]:
        body = {"query": query, "since": since}
        try:
            with httpx.Client(transport=self._transport,
                              timeout=config.get("timeout_s", 10.0)) as client:
                resp = client.post(config["endpoint"].rstrip("/") + "/fetch", json=body)
            resp.raise_for_status()
            rows = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise RecrawlFailed(f"connector fetch failed: {exc}") from exc
        items = []
        for row in rows:
            items.append(FetchItem(base64.b64decode(row["container_bytes"]),
                                   row.get("locator", ""),
                                   row.get("license", "unknown")))
        return items


class Ingestor:
    """Registers sources and funnels every clip through dedup + provenance.

    The registry check-and-insert is linearized per process via one lock,
    which is the atomicity the dedup invariant needs at desk scale.
    """

    def __init__(self, runner: ConnectorRunner,
                 known_clip: Callable[[str], bool],
                 persist_clip: Callable[[ClipRecord, ProvenanceChain, bytes], None],
                 persist_source: Callable[[SourceDescriptor], None],
                 persist_schedule: Callable[[CrawlSchedule], None]):
        self._runner = runner
        self._known_clip = known_clip
        self._persist_clip = persist_clip
        self._persist_source = persist_source
        self._persist_schedule = persist_schedule
        self._sources: dict[str, SourceDescriptor] = {}
        self._lock = threading.Lock()

    # --- sources ---

    def register_source(self, desc: SourceDescriptor, persist: bool = True) -> str:
        with self._lock:
            if desc.source_id in self._sources:
                raise SourceExists(desc.source_id)
            self._sources[desc.source_id] = desc
        if persist:
            self._persist_source(desc)
        return desc.source_id

    def list_sources(self) -> list[SourceDescriptor]:
        with self._lock:
            return sorted(self._sources.values(), key=lambda s: s.source_id)

    def get_source(self, source_id: str) -> SourceDescriptor:
        with self._lock:
            if source_id not in self._sources:
                raise UnknownSource(source_id)
            return self._sources[source_id]

    # --- ingestion ---

    def ingest_batch(self, source_id: str, items: list[FetchItem],
                     provenances: Optional[list[ProvenanceChain]] = None
                     ) -> list[IngestResult]:
        """Decode, dedup, and persist a batch. Item failures never poison
        the batch; each item reports ok/duplicate/invalid_container."""
        if source_id == SYNTHETIC_SOURCE_ID:
            origin, prov_kind = "synthetic", "synthetic"
        else:
            source = self.get_source(source_id)
            if not source.enabled:
                raise UnknownSource(f"{source_id} is disabled")
            origin = _ORIGIN_FOR_KIND[source.connector_kind]
            prov_kind = _PROVENANCE_FOR_KIND[source.connector_kind]

        results = []
        for i, item in enumerate(items):
            try:
                clip = decode_clip_container(item.container_bytes)
            except VdcookError:
                results.append(IngestResult(None, False, "invalid_container"))
                continue
            clip_id = compute_clip_id(item.container_bytes)
            with self._lock:
                if self._known_clip(clip_id):
                    results.append(IngestResult(clip_id, False, "duplicate"))
                    continue
                record = ClipRecord(
                    clip_id=clip_id,
                    width=clip.width,
                    height=clip.height,
                    fps_num=clip.fps_num,
                    fps_den=clip.fps_den,
                    frame_count=clip.frame_count,
                    origin=origin,
                    ingest_time=utc_now(),
                    status="raw",
                )
                if provenances is not None:
                    provenance = provenances[i]
                else:
                    provenance = ProvenanceChain(
                        kind=prov_kind,
                        source_id=source_id,
                        locator=item.locator,
                        license=item.license,
                        created_time=record.ingest_time,
                    )
                self._persist_clip(record, provenance, item.container_bytes)
            results.append(IngestResult(clip_id, True, "ok"))
        return results

    def crawl_once(self, source_id: str, query: str = "",
                   since: Optional[str] = None) -> list[IngestResult]:
        """Unscheduled fetch-and-ingest from one source."""
        source = self.get_source(source_id)
        items = self._runner.fetch(source, query or source.config.get("query_template", ""),
                                   since)
        return self.ingest_batch(source_id, items)

    # --- re-crawl ---

    def run_recrawl(self, schedule: CrawlSchedule, now: str) -> tuple[int, CrawlSchedule]:
        """Fetch from the scheduled source, ingest never-seen digests, and
        advance the schedule. The schedule advances even on fetch failure so
        one broken source cannot wedge the loop."""
        if parse_time(now) < parse_time(schedule.next_run):
            raise RecrawlNotDue(f"next run at {schedule.next_run}")
        source = self.get_source(schedule.source_id)
        try:
            items = self._runner.fetch(source, source.config.get("query_template", ""),
                                       schedule.last_run)
        except (RecrawlFailed, VdcookError) as exc:
            new_sched = CrawlSchedule(
                schedule.source_id, schedule.interval_s,
                self._advance(now, schedule.interval_s), now, 0)
            self._persist_schedule(new_sched)
            logger.warning("recrawl of %s failed: %s", schedule.source_id, exc)
            raise RecrawlFailed(str(exc)) from exc
        results = self.ingest_batch(schedule.source_id, items)
        new_clips = sum(1 for r in results if r.accepted)
        new_sched = CrawlSchedule(
            schedule.source_id, schedule.interval_s,
            self._advance(now, schedule.interval_s), now, new_clips)
        self._persist_schedule(new_sched)
        return new_clips, new_sched

    @staticmethod
    def _advance(now: str, interval_s: int) -> str:
        from datetime import timedelta
        return format_time(parse_time(now) + timedelta(seconds=interval_s))
