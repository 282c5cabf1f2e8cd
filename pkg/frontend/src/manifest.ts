// Manifest browser: entry table with channel, scores, and provenance kind,
// plus the replay command for reproducing the package.

import type { Manifest } from "./types.js";

export class ManifestBrowser {
  readonly element: HTMLElement;

  constructor() {
    this.element = document.createElement("section");
    this.element.className = "manifest-browser";
  }

  render(manifest: Manifest): void {
    this.element.innerHTML = "";
    const head = document.createElement("p");
    head.className = "headline";
    head.textContent =
      `manifest ${manifest.job_id} · ${manifest.entries.length} entries ` +
      `(${manifest.counts.retrieved} retrieved, ` +
      `${manifest.counts.synthesized} synthesized, ` +
      `${manifest.counts.dropped_by_policy} dropped by policy)`;

    const replay = document.createElement("pre");
    replay.className = "replay";
    replay.textContent = manifest.replay_command;

    const table = document.createElement("table");
    table.innerHTML =
      "<thead><tr><th>clip</th><th>channel</th><th>rank</th><th>quality</th>" +
      "<th>motion</th><th>source</th><th>caption</th></tr></thead>";
    const body = document.createElement("tbody");
    for (const entry of manifest.entries) {
      const tr = document.createElement("tr");
      const cells = [
        entry.clip_id.slice(0, 12),
        entry.selection.channel,
        entry.selection.rank_score.toFixed(3),
        entry.selection.quality_score.toFixed(3),
        entry.metadata.motion_category,
        entry.provenance.kind,
        entry.metadata.caption,
      ];
      for (const text of cells) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.append(td);
      }
      body.append(tr);
    }
    table.append(body);
    this.element.append(head, replay, table);
  }
}
