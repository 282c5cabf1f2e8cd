// Console wiring. Routing state lives in the URL hash (#/job/<id> or
// #/manifest/<id>), so a reload reconstructs everything from the API.

import { ApiClient, ApiError } from "./api.js";
import { StatsPanel } from "./charts.js";
import { RequestFormView } from "./form.js";
import { ManifestBrowser } from "./manifest.js";
import { JobMonitor } from "./monitor.js";
import { PreviewGrid } from "./preview.js";
import type { RequestForm } from "./types.js";
import { formToRequestBody } from "./validate.js";

const PREVIEW_SCALE_CAP = 12;
const PREVIEW_POLL_MS = 250;

export class ConsoleApp {
  readonly form: RequestFormView;
  readonly preview: PreviewGrid;
  readonly monitor: JobMonitor;
  readonly stats: StatsPanel;
  readonly manifestBrowser: ManifestBrowser;

  constructor(private api: ApiClient, root: HTMLElement,
              private win: Pick<Window, "location" | "addEventListener"> = window) {
    this.form = new RequestFormView({
      onPreview: (form) => void this.runPreview(form),
      onCook: (form) => void this.runCook(form),
    });
    this.preview = new PreviewGrid();
    this.monitor = new JobMonitor(api,
      (state) => void this.onJobDone(state.job_id));
    this.stats = new StatsPanel();
    this.manifestBrowser = new ManifestBrowser();

    root.innerHTML = "";
    const left = document.createElement("div");
    left.className = "pane left";
    const right = document.createElement("div");
    right.className = "pane right";
    left.append(this.form.element, this.preview.element);
    right.append(this.monitor.element, this.manifestBrowser.element,
                 this.stats.element);
    root.append(left, right);

    this.win.addEventListener("hashchange", () => void this.route());
  }

  async start(): Promise<void> {
    await this.refreshStats().catch(() => {});
    await this.route();
  }

  async route(): Promise<void> {
    const hash = this.win.location.hash;
    const jobMatch = /^#\/job\/([0-9a-f]+)$/.exec(hash);
    if (jobMatch) {
      await this.monitor.watch(jobMatch[1]);
      return;
    }
    const manifestMatch = /^#\/manifest\/([0-9a-f]+)$/.exec(hash);
    if (manifestMatch) {
      const manifest = await this.api.jobManifest(manifestMatch[1]);
      this.manifestBrowser.render(manifest);
    }
  }

  async runCook(form: RequestForm): Promise<void> {
    try {
      const { job_id } = await this.api.submitJob(formToRequestBody(form, false));
      this.win.location.hash = `#/job/${job_id}`;
      await this.monitor.watch(job_id);
    } catch (err) {
      this.handleSubmitError(err);
    }
  }

  async runPreview(form: RequestForm): Promise<void> {
    this.preview.showLoading();
    try {
      const body = formToRequestBody(form, true, PREVIEW_SCALE_CAP);
      const { job_id } = await this.api.submitJob(body);
      const state = await this.waitForTerminal(job_id);
      if (state.phase === "failed") {
        this.preview.showError(state.error ?? "job failed");
        return;
      }
      this.preview.render(state.preview ?? []);
    } catch (err) {
      this.handleSubmitError(err);
      this.preview.showError(err instanceof Error ? err.message : String(err));
    }
  }

  private async waitForTerminal(jobId: string) {
    for (;;) {
      const state = await this.api.jobState(jobId);
      if (state.phase === "done" || state.phase === "failed") {
        return state;
      }
      await new Promise((r) => setTimeout(r, PREVIEW_POLL_MS));
    }
  }

  private async onJobDone(jobId: string): Promise<void> {
    await this.refreshStats().catch(() => {});
    const state = this.monitor.state;
    if (state && !state.dry_run && state.manifest_path) {
      const manifest = await this.api.jobManifest(jobId).catch(() => null);
      if (manifest) this.manifestBrowser.render(manifest);
    }
  }

  private handleSubmitError(err: unknown): void {
    if (err instanceof ApiError && err.status === 422) {
      this.form.showErrors(err.fieldErrors);
      return;
    }
    throw err;
  }

  async refreshStats(): Promise<void> {
    const summary = await this.api.summary();
    const [captions, durations, ocr, motion] = await Promise.all([
      this.api.distribution("caption_words"),
      this.api.distribution("duration_s"),
      this.api.distribution("ocr_text_area"),
      this.api.distribution("motion_intensity",
                            [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]),
    ]);
    this.stats.render(summary, captions, durations, ocr, motion);
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (root) {
    const app = new ConsoleApp(new ApiClient(), root);
    void app.start();
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
