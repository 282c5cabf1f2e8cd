// Scripted in-memory stand-in for the service API: enough of /api/jobs,
// SSE events, manifests, and stats for the console tests to run without a
// socket.

import type { FetchLike } from "../src/api.js";
import type { CorpusSummary, Distribution, JobState, PreviewCell } from "../src/types.js";

const PHASE_SEQUENCE = ["queued", "expanding", "retrieving", "synthesizing",
                        "filtering", "packaging", "done"];

export interface MockJob {
  state: JobState;
  pendingPhases: string[];
  listeners: Array<(frame: string | null) => void>;
}

export function previewCells(n: number): PreviewCell[] {
  return Array.from({ length: n }, (_, i) => ({
    clip_id: `${i}`.padStart(64, "0"),
    duration_s: 2.5 + i,
    motion_category: ["low", "medium", "high"][i % 3],
    tags: i % 2 ? ["city"] : ["city", "night"],
    rank_score: 1 - i / 100,
    thumbnail: `/api/clips/${i}/preview.png`,
  }));
}

const SUMMARY: CorpusSummary = {
  clip_count: 200, caption_words_mean: 6, caption_words_p10: 6,
  caption_words_p50: 6, caption_words_p90: 6, total_duration_s: 700,
  duration_p10: 2, duration_p50: 3, duration_p90: 6,
  resolution_bucket_fractions: { lt480p: 0.9, "480p": 0.05, "720p": 0.05,
                                 "1080p": 0, "4k": 0 },
  ocr_text_area_mean: 0.01, ocr_text_area_median: 0.0,
  ocr_box_count_mean: 0.1, motion_intensity_mean: 50,
  snapshot_time: "2026-01-01T00:00:00Z", sampling: { mode: "full" },
};

function distribution(metric: string): Distribution {
  return {
    metric, n: 200, mean: 10,
    histogram: { edges: [0, 5, 10, 20], counts: [50, 100, 40],
                 underflow: 0, overflow: 10 },
    percentiles: { p10: 1, p25: 3, p50: 8, p75: 14, p90: 19 },
  };
}

export class MockServer {
  jobs = new Map<string, MockJob>();
  submitCount = 0;
  /** when true, submitted jobs finish instantly with this preview */
  instantPreview: PreviewCell[] | null = null;

  readonly fetch: FetchLike = async (input, init) => {
    const url = new URL(input, "http://mock");
    const path = url.pathname;

    if (path === "/api/jobs" && init?.method === "POST") {
      const body = JSON.parse(String(init.body));
      if (body.retrieval_ratio > 1 || body.retrieval_ratio < 0) {
        return json({ detail: [{ loc: ["body", "retrieval_ratio"],
                                 msg: "must be <= 1" }] }, 422);
      }
      const jobId = `job${this.submitCount++}`;
      const job: MockJob = {
        state: {
          job_id: jobId, phase: "queued", progress: 0, counts: {},
          error: null, manifest_path: null, manifest_job_id: null,
          dry_run: Boolean(body.dry_run), preview: null,
        },
        pendingPhases: PHASE_SEQUENCE.slice(1),
        listeners: [],
      };
      this.jobs.set(jobId, job);
      if (this.instantPreview && body.dry_run) {
        job.state.phase = "done";
        job.state.progress = 1;
        job.state.preview = this.instantPreview.slice(0, body.scale);
        job.pendingPhases = [];
      }
      return json({ job_id: jobId }, 202);
    }

    let m = /^\/api\/jobs\/([^/]+)\/events$/.exec(path);
    if (m) {
      const job = this.jobs.get(m[1]);
      if (!job) return json({ detail: "unknown job" }, 404);
      return sseResponse(job);
    }

    m = /^\/api\/jobs\/([^/]+)\/manifest$/.exec(path);
    if (m) {
      const job = this.jobs.get(m[1]);
      if (!job || job.state.phase !== "done") return json({}, 404);
      return json({
        job_id: "deadbeef00000000", created_time: "2026-01-01T00:00:00Z",
        entries: [], counts: { retrieved: 0, synthesized: 0,
                               dropped_by_policy: 0 },
        replay_command: "vdcook cook --request-json '{}'",
      });
    }

    m = /^\/api\/jobs\/([^/]+)$/.exec(path);
    if (m) {
      const job = this.jobs.get(m[1]);
      if (!job) return json({ detail: "unknown job" }, 404);
      return json(job.state);
    }

    if (path === "/api/stats/summary") return json(SUMMARY);
    if (path === "/api/stats/distribution") {
      return json(distribution(url.searchParams.get("metric") ?? "x"));
    }
    return json({ detail: `unmocked ${path}` }, 404);
  };

  /** advance a job one phase and notify any open event streams */
  step(jobId: string): JobState {
    const job = this.jobs.get(jobId)!;
    const next = job.pendingPhases.shift();
    if (next) {
      job.state.phase = next;
      job.state.progress = Math.min(1, job.state.progress + 1 / 6);
      if (next === "done") {
        job.state.progress = 1;
        job.state.manifest_path = job.state.dry_run ? null : "/pkg/manifest.json";
        job.state.counts = { retrieved: 2, synthesized: 2, dropped_by_policy: 0 };
      }
      const frame = `data: ${JSON.stringify(job.state)}\n\n`;
      for (const listener of job.listeners) listener(frame);
      if (next === "done") {
        for (const listener of job.listeners) listener(null);
        job.listeners = [];
      }
    }
    return job.state;
  }

  finish(jobId: string): void {
    while (this.jobs.get(jobId)!.pendingPhases.length) this.step(jobId);
  }

  /** abruptly close all open event streams without a terminal event */
  dropStreams(jobId: string): void {
    const job = this.jobs.get(jobId)!;
    for (const listener of job.listeners) listener(null);
    job.listeners = [];
  }
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function sseResponse(job: MockJob): Response {
  const encoder = new TextEncoder();
  const stream = new ReadableStream<Uint8Array>({
    start(controller) {
      // replay current state (terminal-only when already finished)
      controller.enqueue(encoder.encode(
        `data: ${JSON.stringify(job.state)}\n\n`));
      if (job.state.phase === "done" || job.state.phase === "failed") {
        controller.close();
        return;
      }
      job.listeners.push((frame) => {
        if (frame === null) {
          try { controller.close(); } catch { /* already closed */ }
        } else {
          controller.enqueue(encoder.encode(frame));
        }
      });
    },
  });
  return new Response(stream, {
    status: 200,
    headers: { "content-type": "text/event-stream" },
  });
}
