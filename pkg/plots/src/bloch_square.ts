/**
 * Particle-swarm scatter on the flat chart: horizontal axis p in [0,1],
 * vertical axis phi in [0,2pi) increasing upward. One panel per snapshot,
 * time increasing left to right, then top to bottom. Marker radius is
 * markerScale * sqrt(x), so marker area is proportional to the weight x.
 */

import { Snapshot, parseParticles, selectSnapshots } from "./csv.js";
import { FigureSpec, RenderResult, TWO_PI, gridShape } from "./spec_types.js";
import { SvgBuilder, fmt } from "./svg.js";

const PAD = 34;
const GAP = 16;
const MARKER_FILL = "#1f4e8c";

function drawPanel(
  svg: SvgBuilder,
  snap: Snapshot,
  x0: number,
  y0: number,
  size: number,
  markerScale: number,
): number {
  svg.rect(x0, y0, size, size, { fill: "#ffffff", stroke: "#444444", "stroke-width": "1" });
  svg.text(x0 + size / 2, y0 - 6, `t = ${snap.time}`, {
    "font-family": "monospace",
    "font-size": "11",
    "text-anchor": "middle",
  });
  for (const t of [0, 0.5, 1]) {
    svg.line(x0 + t * size, y0 + size, x0 + t * size, y0 + size + 4, {
      stroke: "#444444",
      "stroke-width": "1",
    });
    svg.text(x0 + t * size, y0 + size + 14, fmt(t), {
      "font-family": "monospace",
      "font-size": "9",
      "text-anchor": "middle",
    });
  }
  svg.text(x0 + size / 2, y0 + size + 26, "p", {
    "font-family": "monospace",
    "font-size": "10",
    "text-anchor": "middle",
  });
  svg.text(x0 - 8, y0 + size / 2, "phi", {
    "font-family": "monospace",
    "font-size": "10",
    "text-anchor": "middle",
    transform: `rotate(-90 ${fmt(x0 - 8)} ${fmt(y0 + size / 2)})`,
  });
  let drawn = 0;
  for (const particle of snap.particles) {
    const cx = x0 + particle.p * size;
    const cy = y0 + (1 - particle.phi / TWO_PI) * size;
    const r = markerScale * Math.sqrt(Math.max(0, particle.x));
    svg.circle(cx, cy, r, { fill: MARKER_FILL, "fill-opacity": "0.75" });
    drawn += 1;
  }
  return drawn;
}

export function plotBlochSquare(particlesCsv: string, spec: FigureSpec = {}): RenderResult {
  const snapshots = selectSnapshots(parseParticles(particlesCsv), spec.times, spec.stride);
  const size = spec.panelSize ?? 200;
  const markerScale = spec.markerScale ?? 12;
  const { cols, rows } = gridShape(snapshots.length, spec.columns);
  const width = PAD + cols * (size + GAP) + PAD;
  const height = PAD + rows * (size + GAP + 22) + PAD;
  const svg = new SvgBuilder(width, height);
  svg.rect(0, 0, width, height, { fill: "#fbfbf8" });
  let markersRendered = 0;
  snapshots.forEach((snap, n) => {
    const col = n % cols;
    const row = Math.floor(n / cols);
    const x0 = PAD + col * (size + GAP);
    const y0 = PAD + row * (size + GAP + 22);
    markersRendered += drawPanel(svg, snap, x0, y0, size, markerScale);
  });
  return { svg: svg.render(), markersRendered };
}
