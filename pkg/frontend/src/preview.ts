// Preview grid: thumbnails with motion category, duration, and tags for a
// dry-run retrieval. Explicit states for loading, empty, and error.

import type { PreviewCell } from "./types.js";

export class PreviewGrid {
  readonly element: HTMLElement;

  constructor() {
    this.element = document.createElement("section");
    this.element.className = "preview-grid";
  }

  showLoading(): void {
    this.element.innerHTML = '<p class="state loading">Retrieving preview…</p>';
  }

  showError(message: string): void {
    this.element.innerHTML = "";
    const p = document.createElement("p");
    p.className = "state error";
    p.textContent = `Preview failed: ${message}`;
    this.element.append(p);
  }

  render(cells: PreviewCell[]): void {
    this.element.innerHTML = "";
    if (cells.length === 0) {
      const p = document.createElement("p");
      p.className = "state empty";
      p.textContent = "No matches for this query.";
      this.element.append(p);
      return;
    }
    const grid = document.createElement("div");
    grid.className = "cells";
    for (const cell of cells) {
      const card = document.createElement("figure");
      card.className = "cell";
      const img = document.createElement("img");
      img.src = cell.thumbnail;
      img.alt = `clip ${cell.clip_id.slice(0, 8)}`;
      img.loading = "lazy";
      const caption = document.createElement("figcaption");
      const tags = cell.tags.length ? ` · ${cell.tags.join(", ")}` : "";
      caption.textContent =
        `${cell.duration_s.toFixed(1)}s · motion ${cell.motion_category}${tags}`;
      card.append(img, caption);
      grid.append(card);
    }
    this.element.append(grid);
  }
}
