// Thin typed client over the service API. fetch is injectable so tests can
// run against a scripted mock server.

import type {
  CorpusSummary,
  Distribution,
  JobRequestBody,
  JobState,
  Manifest,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string,
              public fieldErrors: Record<string, string> = {}) {
    super(message);
  }
}

export class ApiClient {
  constructor(private fetchImpl: FetchLike = (...a) => fetch(...a),
              private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      const text = await resp.text().catch(() => "");
      const fields = resp.status === 422 ? extractFieldErrors(text) : {};
      throw new ApiError(resp.status, text, fields);
    }
    return resp.json() as Promise<T>;
  }

  submitJob(body: JobRequestBody): Promise<{ job_id: string }> {
    return this.request("/api/jobs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  jobState(jobId: string): Promise<JobState> {
    return this.request(`/api/jobs/${jobId}`);
  }

  jobManifest(jobId: string): Promise<Manifest> {
    return this.request(`/api/jobs/${jobId}/manifest`);
  }

  summary(): Promise<CorpusSummary> {
    return this.request("/api/stats/summary");
  }

  distribution(metric: string, edges?: number[]): Promise<Distribution> {
    const qs = edges ? `&edges=${edges.join(",")}` : "";
    return this.request(`/api/stats/distribution?metric=${metric}${qs}`);
  }

  eventsUrl(jobId: string): string {
    return `${this.base}/api/jobs/${jobId}/events`;
  }

  raw(): FetchLike {
    return this.fetchImpl;
  }
}

function extractFieldErrors(text: string): Record<string, string> {
  // FastAPI 422 bodies: {detail: [{loc: [..., field], msg}, ...]}
  try {
    const body = JSON.parse(text);
    const out: Record<string, string> = {};
    for (const item of body.detail ?? []) {
      const loc: unknown[] = item.loc ?? [];
      const field = String(loc[loc.length - 1] ?? "request");
      out[field] = String(item.msg ?? "invalid");
    }
    return out;
  } catch {
    return {};
  }
}
