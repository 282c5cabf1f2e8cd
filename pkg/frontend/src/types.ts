// Shapes of the service API payloads the console consumes.

export interface PrefiltersForm {
  min_duration_s: number;
  max_duration_s: number | null;
  languages: string; // comma-separated in the form; "any" for no filter
  excluded_safety_flags: string; // comma-separated
}

export interface RequestForm {
  query: string;
  scale: number;
  retrieval_ratio: number;
  quality_threshold: number;
  seed: number;
  source_mode: string;
  shortfall_policy: string;
  prefilters: PrefiltersForm;
}

export interface JobRequestBody {
  query: string;
  scale: number;
  retrieval_ratio: number;
  quality_threshold: number;
  seed: number;
  source_mode: string;
  shortfall_policy: string;
  dry_run: boolean;
  prefilters: {
    min_duration_s: number;
    max_duration_s: number | null;
    languages: string | string[];
    excluded_safety_flags: string[];
  };
}

export interface PreviewCell {
  clip_id: string;
  duration_s: number;
  motion_category: string;
  tags: string[];
  rank_score: number;
  thumbnail: string;
}

export interface JobState {
  job_id: string;
  phase: string;
  progress: number;
  counts: Record<string, number>;
  error: string | null;
  manifest_path: string | null;
  manifest_job_id: string | null;
  dry_run: boolean;
  preview: PreviewCell[] | null;
}

export interface CorpusSummary {
  clip_count: number;
  caption_words_mean: number;
  caption_words_p10: number;
  caption_words_p50: number;
  caption_words_p90: number;
  total_duration_s: number;
  duration_p10: number;
  duration_p50: number;
  duration_p90: number;
  resolution_bucket_fractions: Record<string, number>;
  ocr_text_area_mean: number;
  ocr_text_area_median: number;
  ocr_box_count_mean: number;
  motion_intensity_mean: number;
  snapshot_time: string;
  sampling: Record<string, unknown>;
}

export interface Distribution {
  metric: string;
  n: number;
  mean: number;
  histogram: {
    edges: number[];
    counts: number[];
    underflow: number;
    overflow: number;
  };
  percentiles: { p10: number; p25: number; p50: number; p75: number; p90: number };
}

export interface ManifestEntry {
  clip_id: string;
  byte_length: number;
  metadata: {
    caption: string;
    motion_category: string;
    tags: string[];
    resolution_bucket: string;
  };
  provenance: { kind: string; source_id: string };
  selection: { channel: string; rank_score: number; quality_score: number };
}

export interface Manifest {
  job_id: string;
  created_time: string;
  entries: ManifestEntry[];
  counts: { retrieved: number; synthesized: number; dropped_by_policy: number };
  replay_command: string;
}

export const JOB_PHASES = [
  "queued", "expanding", "retrieving", "synthesizing",
  "filtering", "packaging", "done",
] as const;
