/**
 * Orthographic snapshot grid on the unit sphere. Convention: a point with
 * chart coordinates (p, phi) sits at polar angle theta = 2 * arcsin(sqrt(p))
 * and azimuth phi, i.e. cos(theta/2) = sqrt(1 - p); p = 0 renders at +z
 * (top of the panel) and p = 1 renders at -z (bottom of the panel).
 * Marker color encodes the particle weight x.
 */

import { parseParticles, selectSnapshots, Snapshot } from "./csv.js";
import { FigureSpec, RenderResult, gridShape } from "./spec_types.js";
import { SvgBuilder, heatColor } from "./svg.js";

const PAD = 30;
const GAP = 16;
const AZIMUTH = (-60 * Math.PI) / 180;
const ELEVATION = (20 * Math.PI) / 180;

export interface ProjectedPoint {
  readonly u: number;
  readonly v: number;
  /** Positive values face the viewer. */
  readonly depth: number;
}

export function sphereAngle(p: number): number {
  return 2 * Math.asin(Math.sqrt(Math.min(1, Math.max(0, p))));
}

export function unitVector(p: number, phi: number): [number, number, number] {
  const theta = sphereAngle(p);
  return [Math.sin(theta) * Math.cos(phi), Math.sin(theta) * Math.sin(phi), Math.cos(theta)];
}

export function project(point: readonly [number, number, number]): ProjectedPoint {
  const [x, y, z] = point;
  const sinA = Math.sin(AZIMUTH);
  const cosA = Math.cos(AZIMUTH);
  const sinE = Math.sin(ELEVATION);
  const cosE = Math.cos(ELEVATION);
  return {
    u: -x * sinA + y * cosA,
    v: -x * cosA * sinE - y * sinA * sinE + z * cosE,
    depth: x * cosA * cosE + y * sinA * cosE + z * sinE,
  };
}

/** Verify the chart-to-sphere convention: cos(theta/2) == sqrt(1 - p). */
export function sphereConventionSelfTest(): boolean {
  for (let n = 0; n <= 100; n++) {
    const p = n / 100;
    if (Math.abs(Math.cos(sphereAngle(p) / 2) - Math.sqrt(1 - p)) > 1e-12) return false;
  }
  const northZ = unitVector(0, 0)[2];
  const southZ = unitVector(1, 0)[2];
  const equatorZ = unitVector(0.5, 0)[2];
  return (
    Math.abs(northZ - 1) < 1e-12 && Math.abs(southZ + 1) < 1e-12 && Math.abs(equatorZ) < 1e-12
  );
}

function drawSpherePanel(
  svg: SvgBuilder,
  snap: Snapshot,
  x0: number,
  y0: number,
  size: number,
  xMax: number,
): number {
  const cx = x0 + size / 2;
  const cy = y0 + size / 2;
  const radius = 0.42 * size;
  svg.text(cx, y0 + 4, `t = ${snap.time}`, {
    "font-family": "monospace",
    "font-size": "11",
    "text-anchor": "middle",
  });
  svg.circle(cx, cy, radius, { fill: "#ffffff", stroke: "#444444", "stroke-width": "1" });
  const equator: [number, number][] = [];
  for (let n = 0; n <= 72; n++) {
    const t = (n / 72) * 2 * Math.PI;
    const q = project([Math.cos(t), Math.sin(t), 0]);
    equator.push([cx + radius * q.u, cy - radius * q.v]);
  }
  svg.polyline(equator, { stroke: "#bbbbbb", "stroke-dasharray": "3 3", "stroke-width": "0.8" });
  const order = snap.particles
    .map((particle, index) => {
      const q = project(unitVector(particle.p, particle.phi));
      return { index, q, x: particle.x };
    })
    .sort((a, b) => a.q.depth - b.q.depth || a.index - b.index);
  for (const entry of order) {
    const fill = heatColor(xMax > 0 ? entry.x / xMax : 0);
    const opacity = entry.q.depth >= 0 ? "0.95" : "0.45";
    svg.circle(cx + radius * entry.q.u, cy - radius * entry.q.v, 4, {
      fill,
      "fill-opacity": opacity,
      stroke: "#333333",
      "stroke-width": "0.4",
    });
  }
  return order.length;
}

export function plotBlochSphere(particlesCsv: string, spec: FigureSpec = {}): RenderResult {
  const snapshots = selectSnapshots(parseParticles(particlesCsv), spec.times, spec.stride);
  const size = spec.panelSize ?? 200;
  const { cols, rows } = gridShape(snapshots.length, spec.columns);
  const width = PAD + cols * (size + GAP) + PAD;
  const height = PAD + rows * (size + GAP) + PAD;
  const svg = new SvgBuilder(width, height);
  svg.rect(0, 0, width, height, { fill: "#fbfbf8" });
  let xMax = 0;
  for (const snap of snapshots) {
    for (const particle of snap.particles) xMax = Math.max(xMax, particle.x);
  }
  let markersRendered = 0;
  snapshots.forEach((snap, n) => {
    const col = n % cols;
    const row = Math.floor(n / cols);
    const x0 = PAD + col * (size + GAP);
    const y0 = PAD + row * (size + GAP);
    markersRendered += drawSpherePanel(svg, snap, x0, y0, size, xMax);
  });
  return { svg: svg.render(), markersRendered };
}
