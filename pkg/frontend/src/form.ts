// Request form: all CookRequest knobs, submit disabled while invalid,
// inline rendering of server-side 422 field errors.

import type { RequestForm } from "./types.js";
import { defaultForm, validateForm } from "./validate.js";

export interface FormHandlers {
  onPreview(form: RequestForm): void;
  onCook(form: RequestForm): void;
}

const FIELDS = `
  <label>Query
    <input name="query" type="text" placeholder="city motion:medium tag:inkwash">
    <span class="error" data-for="query"></span>
  </label>
  <div class="row">
    <label>Scale
      <input name="scale" type="number" min="1" step="1" value="50">
      <span class="error" data-for="scale"></span>
    </label>
    <label>Seed
      <input name="seed" type="number" min="0" step="1" value="42">
      <span class="error" data-for="seed"></span>
    </label>
  </div>
  <label>Retrieval ratio <output name="ratio-out">0.60</output>
    <input name="retrieval_ratio" type="range" min="0" max="1" step="0.01" value="0.6">
    <span class="error" data-for="retrieval_ratio"></span>
  </label>
  <label>Quality threshold <output name="threshold-out">0.00</output>
    <input name="quality_threshold" type="range" min="0" max="1" step="0.01" value="0">
    <span class="error" data-for="quality_threshold"></span>
  </label>
  <div class="row">
    <label>Source mode
      <select name="source_mode">
        <option value="hybrid" selected>hybrid</option>
        <option value="crawled">crawled</option>
        <option value="uploaded">uploaded</option>
      </select>
    </label>
    <label>Shortfall policy
      <select name="shortfall_policy">
        <option value="fail" selected>fail</option>
        <option value="backfill_synthesis">backfill synthesis</option>
        <option value="truncate">truncate</option>
      </select>
    </label>
  </div>
  <details>
    <summary>Prefilters</summary>
    <div class="row">
      <label>Min duration (s)
        <input name="min_duration_s" type="number" min="0" step="0.1" value="2.0">
        <span class="error" data-for="min_duration_s"></span>
      </label>
      <label>Max duration (s)
        <input name="max_duration_s" type="number" min="0" step="0.1" placeholder="none">
        <span class="error" data-for="max_duration_s"></span>
      </label>
    </div>
    <label>Languages (comma-separated, or any)
      <input name="languages" type="text" value="any">
    </label>
    <label>Excluded safety flags (comma-separated)
      <input name="excluded_safety_flags" type="text" placeholder="violence, nsfw">
    </label>
  </details>
  <div class="row actions">
    <button name="preview" type="button" disabled>Preview</button>
    <button name="cook" type="submit" disabled>Cook</button>
  </div>
`;

export class RequestFormView {
  readonly element: HTMLFormElement;

  constructor(private handlers: FormHandlers) {
    this.element = document.createElement("form");
    this.element.className = "request-form";
    this.element.innerHTML = FIELDS;
    this.element.addEventListener("input", () => this.refresh());
    this.element.addEventListener("submit", (ev) => {
      ev.preventDefault();
      if (this.submitButton.disabled) return;
      this.handlers.onCook(this.read());
    });
    this.previewButton.addEventListener("click", () => {
      if (!this.previewButton.disabled) this.handlers.onPreview(this.read());
    });
    this.refresh();
  }

  private input(name: string): HTMLInputElement {
    return this.element.querySelector(`[name="${name}"]`) as HTMLInputElement;
  }

  get submitButton(): HTMLButtonElement {
    return this.element.querySelector('[name="cook"]') as HTMLButtonElement;
  }

  get previewButton(): HTMLButtonElement {
    return this.element.querySelector('[name="preview"]') as HTMLButtonElement;
  }

  read(): RequestForm {
    const base = defaultForm();
    const maxRaw = this.input("max_duration_s").value.trim();
    return {
      ...base,
      query: this.input("query").value,
      scale: Number(this.input("scale").value),
      retrieval_ratio: Number(this.input("retrieval_ratio").value),
      quality_threshold: Number(this.input("quality_threshold").value),
      seed: Number(this.input("seed").value),
      source_mode: this.input("source_mode").value,
      shortfall_policy: this.input("shortfall_policy").value,
      prefilters: {
        min_duration_s: Number(this.input("min_duration_s").value),
        max_duration_s: maxRaw === "" ? null : Number(maxRaw),
        languages: this.input("languages").value,
        excluded_safety_flags: this.input("excluded_safety_flags").value,
      },
    };
  }

  refresh(): void {
    const form = this.read();
    const errors = validateForm(form);
    this.showErrors(errors as Record<string, string>);
    const invalid = Object.keys(errors).length > 0;
    this.submitButton.disabled = invalid;
    this.previewButton.disabled = invalid;
    const ratioOut = this.element.querySelector('[name="ratio-out"]');
    if (ratioOut) ratioOut.textContent = form.retrieval_ratio.toFixed(2);
    const thrOut = this.element.querySelector('[name="threshold-out"]');
    if (thrOut) thrOut.textContent = form.quality_threshold.toFixed(2);
  }

  showErrors(errors: Record<string, string>): void {
    for (const span of this.element.querySelectorAll(".error")) {
      const key = (span as HTMLElement).dataset.for ?? "";
      span.textContent = errors[key] ?? "";
    }
  }
}
