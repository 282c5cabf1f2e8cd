// Job monitor: restores the current state from GET /api/jobs/{id}, then
// follows the SSE stream. Holds no state the API cannot reconstruct, so a
// page reload mid-job resumes cleanly from the hash-routed job id.

import { ApiClient } from "./api.js";
import { subscribeJobEvents, Subscription } from "./sse.js";
import { JOB_PHASES, JobState } from "./types.js";

export class JobMonitor {
  readonly element: HTMLElement;
  private subscription: Subscription | null = null;
  private lastState: JobState | null = null;
  private onDone: (state: JobState) => void;

  constructor(private api: ApiClient,
              onDone: (state: JobState) => void = () => {}) {
    this.element = document.createElement("section");
    this.element.className = "job-monitor";
    this.onDone = onDone;
  }

  get state(): JobState | null {
    return this.lastState;
  }

  async watch(jobId: string): Promise<void> {
    this.stop();
    this.element.innerHTML = '<p class="state loading">Loading job…</p>';
    const current = await this.api.jobState(jobId);
    this.apply(current);
    if (current.phase !== "done" && current.phase !== "failed") {
      this.subscription = subscribeJobEvents(
        this.api.raw(), this.api.eventsUrl(jobId),
        (state) => this.apply(state));
    }
  }

  stop(): void {
    this.subscription?.close();
    this.subscription = null;
  }

  private apply(state: JobState): void {
    this.lastState = state;
    this.render(state);
    if (state.phase === "done") {
      this.onDone(state);
    }
  }

  private render(state: JobState): void {
    this.element.innerHTML = "";
    const stepper = document.createElement("ol");
    stepper.className = "stepper";
    const reached = JOB_PHASES.indexOf(
      state.phase as (typeof JOB_PHASES)[number]);
    for (const [i, phase] of JOB_PHASES.entries()) {
      const li = document.createElement("li");
      li.dataset.phase = phase;
      li.textContent = phase;
      if (state.phase === "failed") {
        li.className = i <= JOB_PHASES.length - 2 && state.progress >= i / JOB_PHASES.length
          ? "past" : "";
      } else if (i < reached) {
        li.className = "past";
      } else if (i === reached) {
        li.className = "current";
      }
      stepper.append(li);
    }
    const bar = document.createElement("progress");
    bar.max = 1;
    bar.value = state.progress;

    const counts = document.createElement("p");
    counts.className = "counts";
    counts.textContent = Object.entries(state.counts)
      .map(([k, v]) => `${k}: ${v}`).join("  ");

    this.element.append(stepper, bar, counts);

    if (state.phase === "failed") {
      const err = document.createElement("p");
      err.className = "state error";
      err.textContent = `Job failed: ${state.error ?? "unknown error"}`;
      this.element.append(err);
    }
    if (state.phase === "done" && !state.dry_run) {
      const link = document.createElement("a");
      link.href = `#/manifest/${state.job_id}`;
      link.className = "manifest-link";
      link.textContent = "Browse manifest";
      this.element.append(link);
    }
  }
}
