// Hand-rolled SVG charts fed purely by the stats endpoints: caption-length
// and duration histograms, resolution bars, an OCR-area boxplot, and the
// motion-intensity CDF.

import type { CorpusSummary, Distribution } from "./types.js";

const W = 320;
const H = 160;
const PAD = 24;
const SVG_NS = "http://www.w3.org/2000/svg";

function svgRoot(title: string): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${W} ${H + 20}`);
  svg.setAttribute("class", "chart");
  const label = document.createElementNS(SVG_NS, "text");
  label.setAttribute("x", String(W / 2));
  label.setAttribute("y", String(H + 14));
  label.setAttribute("text-anchor", "middle");
  label.setAttribute("class", "chart-title");
  label.textContent = title;
  svg.append(label);
  return svg;
}

function rect(svg: SVGSVGElement, x: number, y: number, w: number, h: number,
              cls: string): void {
  const r = document.createElementNS(SVG_NS, "rect");
  r.setAttribute("x", String(x));
  r.setAttribute("y", String(y));
  r.setAttribute("width", String(Math.max(w, 0)));
  r.setAttribute("height", String(Math.max(h, 0)));
  r.setAttribute("class", cls);
  svg.append(r);
}

export function histogramChart(title: string, dist: Distribution): SVGSVGElement {
  const svg = svgRoot(title);
  const counts = [dist.histogram.underflow, ...dist.histogram.counts,
                  dist.histogram.overflow];
  const peak = Math.max(...counts, 1);
  const barW = (W - 2 * PAD) / counts.length;
  counts.forEach((count, i) => {
    const h = (H - 2 * PAD) * (count / peak);
    const cls = i === 0 || i === counts.length - 1 ? "bar edge" : "bar";
    rect(svg, PAD + i * barW + 1, H - PAD - h, barW - 2, h, cls);
  });
  return svg;
}

export function resolutionBars(summary: CorpusSummary): SVGSVGElement {
  const svg = svgRoot("resolution buckets");
  const buckets = Object.entries(summary.resolution_bucket_fractions);
  const barW = (W - 2 * PAD) / Math.max(buckets.length, 1);
  buckets.forEach(([name, frac], i) => {
    const h = (H - 2 * PAD) * frac;
    rect(svg, PAD + i * barW + 2, H - PAD - h, barW - 4, h, "bar");
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(PAD + i * barW + barW / 2));
    label.setAttribute("y", String(H - PAD + 12));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("class", "tick");
    label.textContent = name;
    svg.append(label);
  });
  return svg;
}

export function boxplotChart(title: string, dist: Distribution): SVGSVGElement {
  const svg = svgRoot(title);
  const { p10, p25, p50, p75, p90 } = dist.percentiles;
  const lo = Math.min(p10, 0);
  const hi = Math.max(p90, 1e-9);
  const x = (v: number) => PAD + (W - 2 * PAD) * ((v - lo) / (hi - lo || 1));
  const mid = H / 2;
  const line = (x1: number, x2: number, y1: number, y2: number) => {
    const l = document.createElementNS(SVG_NS, "line");
    l.setAttribute("x1", String(x1));
    l.setAttribute("x2", String(x2));
    l.setAttribute("y1", String(y1));
    l.setAttribute("y2", String(y2));
    l.setAttribute("class", "box-line");
    svg.append(l);
  };
  line(x(p10), x(p25), mid, mid);
  line(x(p75), x(p90), mid, mid);
  line(x(p10), x(p10), mid - 10, mid + 10);
  line(x(p90), x(p90), mid - 10, mid + 10);
  rect(svg, x(p25), mid - 20, x(p75) - x(p25), 40, "box");
  line(x(p50), x(p50), mid - 20, mid + 20);
  return svg;
}

export function cdfPoints(dist: Distribution): Array<[number, number]> {
  // cumulative fractions at bucket upper edges, anchored at the first edge
  const total = dist.n || 1;
  let acc = dist.histogram.underflow;
  const points: Array<[number, number]> = [
    [dist.histogram.edges[0], acc / total]];
  dist.histogram.counts.forEach((count, i) => {
    acc += count;
    points.push([dist.histogram.edges[i + 1], acc / total]);
  });
  return points;
}

export function cdfChart(title: string, dist: Distribution): SVGSVGElement {
  const svg = svgRoot(title);
  const points = cdfPoints(dist);
  const xs = points.map((p) => p[0]);
  const lo = Math.min(...xs);
  const hi = Math.max(...xs) || 1;
  const path = points.map(([vx, vy], i) => {
    const px = PAD + (W - 2 * PAD) * ((vx - lo) / (hi - lo || 1));
    const py = H - PAD - (H - 2 * PAD) * vy;
    return `${i === 0 ? "M" : "L"}${px.toFixed(1)},${py.toFixed(1)}`;
  }).join(" ");
  const poly = document.createElementNS(SVG_NS, "path");
  poly.setAttribute("d", path);
  poly.setAttribute("class", "cdf");
  poly.setAttribute("fill", "none");
  svg.append(poly);
  return svg;
}

export class StatsPanel {
  readonly element: HTMLElement;

  constructor() {
    this.element = document.createElement("section");
    this.element.className = "stats-panel";
  }

  render(summary: CorpusSummary, captionDist: Distribution,
         durationDist: Distribution, ocrDist: Distribution,
         motionDist: Distribution): void {
    this.element.innerHTML = "";
    const headline = document.createElement("p");
    headline.className = "headline";
    headline.textContent =
      `${summary.clip_count} clips · ${summary.total_duration_s.toFixed(0)}s total · ` +
      `caption words P50 ${summary.caption_words_p50} · ` +
      `motion mean ${summary.motion_intensity_mean.toFixed(1)}`;
    const grid = document.createElement("div");
    grid.className = "charts";
    grid.append(
      histogramChart("caption length (words)", captionDist),
      resolutionBars(summary),
      histogramChart("duration (s)", durationDist),
      boxplotChart("ocr text area", ocrDist),
      cdfChart("motion intensity CDF", motionDist),
    );
    this.element.append(headline, grid);
  }
}
