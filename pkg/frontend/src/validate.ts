// Client-side mirror of the CookRequest validation rules, so the submit
// button can stay disabled while any field would be rejected server-side.

import type { RequestForm } from "./types.js";

export type FieldErrors = Partial<Record<string, string>>;

const SOURCE_MODES = ["crawled", "uploaded", "hybrid"];
const POLICIES = ["fail", "backfill_synthesis", "truncate"];
const MAX_SEED = 2 ** 64;

export function validateForm(form: RequestForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!form.query.trim()) {
    errors.query = "query must be nonempty";
  }
  if (!Number.isInteger(form.scale) || form.scale < 1) {
    errors.scale = "scale must be an integer >= 1";
  }
  if (!(form.retrieval_ratio >= 0 && form.retrieval_ratio <= 1)) {
    errors.retrieval_ratio = "ratio must be in [0, 1]";
  }
  if (!(form.quality_threshold >= 0 && form.quality_threshold <= 1)) {
    errors.quality_threshold = "threshold must be in [0, 1]";
  }
  if (!Number.isFinite(form.seed) || form.seed < 0 || form.seed >= MAX_SEED
      || !Number.isInteger(form.seed)) {
    errors.seed = "seed must be an unsigned 64-bit integer";
  }
  if (!SOURCE_MODES.includes(form.source_mode)) {
    errors.source_mode = `source mode must be one of ${SOURCE_MODES.join(", ")}`;
  }
  if (!POLICIES.includes(form.shortfall_policy)) {
    errors.shortfall_policy = `policy must be one of ${POLICIES.join(", ")}`;
  }
  const pf = form.prefilters;
  if (!(pf.min_duration_s >= 0)) {
    errors.min_duration_s = "min duration must be >= 0";
  }
  if (pf.max_duration_s !== null && pf.max_duration_s < pf.min_duration_s) {
    errors.max_duration_s = "max duration must be >= min duration";
  }
  return errors;
}

export function isValid(form: RequestForm): boolean {
  return Object.keys(validateForm(form)).length === 0;
}

function splitList(raw: string): string[] {
  return raw.split(",").map((s) => s.trim()).filter((s) => s.length > 0);
}

export function formToRequestBody(form: RequestForm, dryRun: boolean,
                                  scaleCap?: number) {
  const languages = form.prefilters.languages.trim();
  return {
    query: form.query,
    scale: scaleCap ? Math.min(form.scale, scaleCap) : form.scale,
    retrieval_ratio: form.retrieval_ratio,
    quality_threshold: form.quality_threshold,
    seed: form.seed,
    source_mode: form.source_mode,
    shortfall_policy: form.shortfall_policy,
    dry_run: dryRun,
    prefilters: {
      min_duration_s: form.prefilters.min_duration_s,
      max_duration_s: form.prefilters.max_duration_s,
      languages: languages === "" || languages === "any"
        ? "any" : splitList(languages),
      excluded_safety_flags: splitList(form.prefilters.excluded_safety_flags),
    },
  };
}

export function defaultForm(): RequestForm {
  return {
    query: "",
    scale: 50,
    retrieval_ratio: 0.6,
    quality_threshold: 0.0,
    seed: 42,
    source_mode: "hybrid",
    shortfall_policy: "fail",
    prefilters: {
      min_duration_s: 2.0,
      max_duration_s: null,
      languages: "any",
      excluded_safety_flags: "",
    },
  };
}
