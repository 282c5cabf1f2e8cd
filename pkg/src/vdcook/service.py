"""HTTP facade: sources, ingestion, annotators, cook jobs with SSE
progress, clip previews, statistics, coverage, and amplification.

The service is stateless over the persistent store: completed jobs and
manifests survive a restart; queued or running jobs resume as failed with
a documented error.
"""

from __future__ import annotations

import io
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import Response, StreamingResponse
from pydantic import BaseModel, Field

from . import storage
from .canonical import canonical_dumps, utc_now
from .container import decode_clip_container
from .engine import Engine
from .errors import (
    AnnotatorExists,
    SourceExists,
    UnknownClip,
    ValidationError,
    VdcookError,
)
from .ingestion import FetchItem, SourceDescriptor
from .annotators import AnnotatorDescriptor
from .model import CookRequest, Prefilters
from .stats import histogram as compute_histogram
from .stats import percentiles as compute_percentiles

JOB_PHASES = ("queued", "expanding", "retrieving", "synthesizing",
              "filtering", "packaging", "done", "failed")
PHASE_PROGRESS = {"queued": 0.0, "expanding": 0.05, "retrieving": 0.2,
                  "synthesizing": 0.5, "filtering": 0.7, "packaging": 0.85,
                  "done": 1.0}


@dataclass
class JobState:
    job_id: str
    phase: str = "queued"
    progress: float = 0.0
    counts: dict = field(default_factory=dict)
    error: Optional[str] = None
    manifest_path: Optional[str] = None
    manifest_job_id: Optional[str] = None
    dry_run: bool = False
    preview: Optional[list] = None
    updated_time: str = ""

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "phase": self.phase,
            "progress": float(self.progress),
            "counts": dict(self.counts),
            "error": self.error,
            "manifest_path": self.manifest_path,
            "manifest_job_id": self.manifest_job_id,
            "dry_run": self.dry_run,
            "preview": self.preview,
            "updated_time": self.updated_time,
        }

    @property
    def terminal(self) -> bool:
        return self.phase in ("done", "failed")


class JobManager:
    """Bounded worker pool running cook jobs, with per-job event streams."""

    def __init__(self, engine: Engine, workers: int = 2):
        from concurrent.futures import ThreadPoolExecutor

        self.engine = engine
        self._pool = ThreadPoolExecutor(max_workers=max(workers, 1))
        self._jobs: dict[str, JobState] = {}
        self._events: dict[str, list[dict]] = {}
        self._cond = threading.Condition()
        self._recover_persisted()

    def _recover_persisted(self) -> None:
        latest: dict[str, dict] = {}
        for row in self.engine.store.read_records(storage.JOBS_LOG):
            latest[row["job_id"]] = row
        for row in latest.values():
            state = JobState(
                job_id=row["job_id"], phase=row["phase"],
                progress=row["progress"], counts=row.get("counts", {}),
                error=row.get("error"), manifest_path=row.get("manifest_path"),
                manifest_job_id=row.get("manifest_job_id"),
                dry_run=row.get("dry_run", False), preview=row.get("preview"),
                updated_time=row.get("updated_time", ""))
            if not state.terminal:
                state.phase = "failed"
                state.error = "interrupted by service restart"
                self._persist(state)
            self._jobs[state.job_id] = state
            self._events[state.job_id] = [state.to_dict()]

    def _persist(self, state: JobState) -> None:
        state.updated_time = utc_now()
        self.engine.store.append_record(storage.JOBS_LOG, state.to_dict())

    def _transition(self, job_id: str, **changes) -> None:
        with self._cond:
            state = self._jobs[job_id]
            for key, value in changes.items():
                setattr(state, key, value)
            if "phase" in changes and changes["phase"] in PHASE_PROGRESS:
                state.progress = max(state.progress,
                                     PHASE_PROGRESS[changes["phase"]])
            self._persist(state)
            self._events[job_id].append(state.to_dict())
            self._cond.notify_all()

    def submit(self, request: CookRequest, dry_run: bool = False) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self._cond:
            state = JobState(job_id=job_id, dry_run=dry_run)
            self._jobs[job_id] = state
            self._persist(state)
            self._events[job_id] = [state.to_dict()]
        self._pool.submit(self._run, job_id, request, dry_run)
        return job_id

    def _run(self, job_id: str, request: CookRequest, dry_run: bool) -> None:
        def on_phase(phase: str, progress: float, info: dict) -> None:
            self._transition(job_id, phase=phase,
                             counts={**self._jobs[job_id].counts, **info})

        try:
            manifest = self.engine.cook(request, on_phase=on_phase,
                                        dry_run=dry_run)
            changes: dict = {
                "phase": "done",
                "counts": {"retrieved": manifest.retrieved_count,
                           "synthesized": manifest.synthesized_count,
                           "dropped_by_policy": manifest.dropped_by_policy},
                "manifest_job_id": manifest.job_id,
            }
            if dry_run:
                changes["preview"] = [self._preview_entry(e)
                                      for e in manifest.entries]
            else:
                changes["manifest_path"] = str(
                    self.engine.packages_root / manifest.job_id / "manifest.json")
            self._transition(job_id, **changes)
        except Exception as exc:  # failures land in the job state, not logs
            self._transition(job_id, phase="failed", error=str(exc))

    def _preview_entry(self, entry) -> dict:
        record, _ = self.engine.clip(entry.clip_id)
        return {
            "clip_id": entry.clip_id,
            "duration_s": float(record.duration_s),
            "motion_category": entry.metadata.motion_category,
            "tags": sorted(entry.metadata.tags),
            "rank_score": float(entry.rank_score),
            "thumbnail": f"/api/clips/{entry.clip_id}/preview.png",
        }

    def get(self, job_id: str) -> JobState:
        with self._cond:
            if job_id not in self._jobs:
                raise KeyError(job_id)
            return self._jobs[job_id]

    def sse_events(self, job_id: str):
        """Yield SSE frames from the job's event history.

        Subscribing after completion replays the single terminal event;
        live subscribers get the current state and then every transition,
        so no phase change is ever skipped.
        """
        with self._cond:
            state = self._jobs[job_id]
            if state.terminal:
                yield _sse_frame(self._events[job_id][-1])
                return
            cursor = max(len(self._events[job_id]) - 1, 0)
        while True:
            with self._cond:
                while cursor >= len(self._events[job_id]) \
                        and not self._jobs[job_id].terminal:
                    self._cond.wait(timeout=0.5)
                batch = self._events[job_id][cursor:]
                cursor += len(batch)
                done = self._jobs[job_id].terminal and \
                    cursor >= len(self._events[job_id])
            for event in batch:
                yield _sse_frame(event)
            if done:
                return


def _sse_frame(event: dict) -> str:
    return f"data: {canonical_dumps(event)}\n\n"


# --- request schemas (the API boundary validates; the core re-validates) ---

class SourceIn(BaseModel):
    source_id: str
    connector_kind: str
    config: dict = Field(default_factory=dict)
    enabled: bool = True


class IngestItemIn(BaseModel):
    container_b64: str
    locator: str = ""
    license: str = "unknown"


class IngestIn(BaseModel):
    items: Optional[list[IngestItemIn]] = None


class AnnotatorIn(BaseModel):
    annotator_id: str
    kind: str
    endpoint: str
    version: str
    timeout_s: float = 5.0
    enabled: bool = True


class PrefiltersIn(BaseModel):
    min_duration_s: float = 2.0
    max_duration_s: Optional[float] = None
    languages: list[str] | str = "any"
    excluded_safety_flags: list[str] = Field(default_factory=list)


class JobIn(BaseModel):
    query: str = Field(min_length=1)
    scale: int = Field(ge=1)
    retrieval_ratio: float = Field(ge=0.0, le=1.0)
    quality_threshold: float = Field(ge=0.0, le=1.0)
    seed: int = Field(ge=0, lt=2 ** 64)
    prefilters: PrefiltersIn = Field(default_factory=PrefiltersIn)
    source_mode: str = "hybrid"
    shortfall_policy: str = "fail"
    dry_run: bool = False

    def to_request(self) -> CookRequest:
        pf = self.prefilters
        languages = "any" if pf.languages == "any" else frozenset(pf.languages)
        return CookRequest(
            query=self.query, scale=self.scale,
            retrieval_ratio=self.retrieval_ratio,
            quality_threshold=self.quality_threshold, seed=self.seed,
            prefilters=Prefilters(pf.min_duration_s, pf.max_duration_s,
                                  languages, frozenset(pf.excluded_safety_flags)),
            source_mode=self.source_mode,
            shortfall_policy=self.shortfall_policy)


class AmplifyIn(BaseModel):
    floor: int = Field(ge=1)
    per_tag_batch: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    tags: Optional[list[str]] = None


def _canonical_json(obj, status_code: int = 200) -> Response:
    return Response(canonical_dumps(obj), status_code=status_code,
                    media_type="application/json")


def create_app(engine: Engine, workers: int = 2,
               static_dir: Optional[str | Path] = None) -> FastAPI:
    app = FastAPI(title="vdcook", version=engine.version)
    jobs = JobManager(engine, workers=workers)
    app.state.engine = engine
    app.state.jobs = jobs

    @app.exception_handler(VdcookError)
    async def _vdcook_error(request: Request, exc: VdcookError):
        status = 409 if isinstance(exc, (SourceExists, AnnotatorExists)) else 400
        return Response(canonical_dumps({"error": str(exc)}), status_code=status,
                        media_type="application/json")

    # --- sources and ingestion ---

    @app.post("/api/sources", status_code=201)
    def add_source(body: SourceIn):
        desc = SourceDescriptor(body.source_id, body.connector_kind,
                                body.config, body.enabled)
        engine.ingestor.register_source(desc)
        return _canonical_json({"source_id": desc.source_id}, status_code=201)

    @app.get("/api/sources")
    def list_sources():
        return _canonical_json([s.to_dict() for s in engine.ingestor.list_sources()])

    @app.post("/api/ingest/{source_id}")
    def ingest(source_id: str, body: IngestIn):
        import base64

        if body.items:
            items = [FetchItem(base64.b64decode(i.container_b64), i.locator,
                               i.license) for i in body.items]
            results = engine.ingestor.ingest_batch(source_id, items)
        else:
            results = engine.crawl_source(source_id)
        return _canonical_json({
            "results": [{"clip_id": r.clip_id, "accepted": r.accepted,
                         "reason": r.reason} for r in results],
            "accepted": sum(1 for r in results if r.accepted)})

    # --- annotators ---

    @app.post("/api/annotators", status_code=201)
    def add_annotator(body: AnnotatorIn):
        desc = AnnotatorDescriptor(body.annotator_id, body.kind, body.endpoint,
                                   body.version, body.timeout_s, body.enabled)
        engine.annotators.register_annotator(desc)
        return _canonical_json({"annotator_id": desc.annotator_id}, status_code=201)

    @app.get("/api/annotators")
    def list_annotators():
        return _canonical_json([d.to_dict() for d in engine.annotators.list_annotators()])

    # --- jobs ---

    @app.post("/api/jobs", status_code=202)
    def submit_job(body: JobIn):
        request = body.to_request()
        job_id = jobs.submit(request, dry_run=body.dry_run)
        return _canonical_json({"job_id": job_id}, status_code=202)

    @app.get("/api/jobs/{job_id}")
    def job_state(job_id: str):
        try:
            return _canonical_json(jobs.get(job_id).to_dict())
        except KeyError:
            raise HTTPException(404, f"unknown job {job_id}")

    @app.get("/api/jobs/{job_id}/events")
    def job_events(job_id: str):
        try:
            jobs.get(job_id)
        except KeyError:
            raise HTTPException(404, f"unknown job {job_id}")
        return StreamingResponse(jobs.sse_events(job_id),
                                 media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    @app.get("/api/jobs/{job_id}/manifest")
    def job_manifest(job_id: str):
        try:
            state = jobs.get(job_id)
        except KeyError:
            raise HTTPException(404, f"unknown job {job_id}")
        if state.manifest_path is None:
            raise HTTPException(404, "job has no manifest (pending or dry run)")
        return Response(Path(state.manifest_path).read_bytes(),
                        media_type="application/json")

    # --- clips ---

    @app.get("/api/clips/{clip_id}")
    def clip_info(clip_id: str):
        try:
            record, provenance = engine.clip(clip_id)
        except UnknownClip:
            raise HTTPException(404, f"unknown clip {clip_id}")
        metadata = engine.metadata(clip_id)
        return _canonical_json({
            "record": record.to_dict(),
            "provenance": provenance.to_dict(),
            "metadata": metadata.to_dict() if metadata else None})

    @app.get("/api/clips/{clip_id}/preview.png")
    def clip_preview(clip_id: str, frame: str = Query("0")):
        from PIL import Image

        try:
            data = engine.store.load_clip(clip_id)
        except VdcookError:
            raise HTTPException(404, f"no container for {clip_id}")
        clip = decode_clip_container(data)
        idx = clip.frame_count // 2 if frame == "mid" else min(
            max(int(frame), 0), clip.frame_count - 1)
        img = Image.fromarray(clip.frames[idx])
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return Response(buf.getvalue(), media_type="image/png")

    # --- stats, coverage, amplification ---

    @app.get("/api/stats/summary")
    def stats_summary(sample_n: Optional[int] = None, sample_seed: int = 0):
        sampling = None
        if sample_n is not None:
            sampling = {"mode": "random_n", "n": sample_n, "seed": sample_seed}
        return _canonical_json(engine.corpus_summary(sampling).to_dict())

    @app.get("/api/stats/distribution")
    def stats_distribution(metric: str, edges: Optional[str] = None):
        values = engine.metric_values(metric)
        if not values:
            raise HTTPException(404, "index is empty")
        if edges:
            try:
                edge_list = [float(e) for e in edges.split(",")]
            except ValueError:
                raise HTTPException(422, "edges must be comma-separated numbers")
        else:
            lo, hi = min(values), max(values)
            span = (hi - lo) or 1.0
            edge_list = [lo + span * i / 10 for i in range(10)] + [hi]
        p10, p25, p50, p75, p90 = compute_percentiles(values, [10, 25, 50, 75, 90])
        return _canonical_json({
            "metric": metric,
            "n": len(values),
            "mean": sum(values) / len(values),
            "histogram": compute_histogram(values, edge_list),
            "percentiles": {"p10": p10, "p25": p25, "p50": p50,
                            "p75": p75, "p90": p90}})

    @app.get("/api/coverage")
    def coverage(floor: int = Query(ge=1)):
        return _canonical_json(engine.coverage(floor).to_dict())

    @app.post("/api/amplify")
    def amplify(body: AmplifyIn):
        report, new_ids = engine.amplify(body.floor, body.per_tag_batch,
                                         body.seed,
                                         set(body.tags) if body.tags else None)
        return _canonical_json({"report": report.to_dict(),
                                "new_clip_ids": new_ids})

    if static_dir and Path(static_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="console")

    return app
