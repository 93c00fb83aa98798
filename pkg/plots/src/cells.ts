/**
 * Coarse-grained field figures on the chart grid: horizontal axis p (row
 * index i), vertical axis phi (column index k) increasing upward. plotCells
 * stacks three rows per selected transition time: density heatmap (mu),
 * flux quiver (jp, jphi), and source/sink heatmap (sigma).
 */

import {
  CellFrame,
  VectorCellFrame,
  parseCells,
  parseVectorCells,
  parseEntropy,
  selectSnapshots,
} from "./csv.js";
import { FigureSpec, RenderResult } from "./spec_types.js";
import { SvgBuilder, fmt, heatColor } from "./svg.js";

const PAD = 46;
const GAP = 18;

interface Rect {
  x0: number;
  y0: number;
  w: number;
  h: number;
}

function frameMax(frames: readonly CellFrame[], absolute: boolean): number {
  let vmax = 0;
  for (const frame of frames) {
    for (const row of frame.values) {
      for (const v of row) vmax = Math.max(vmax, absolute ? Math.abs(v) : v);
    }
  }
  return vmax;
}

/** Heatmap cell fill: signed fields map 0 to the ramp midpoint. */
function cellUnit(value: number, vmax: number, signed: boolean): number {
  if (vmax <= 0) return signed ? 0.5 : 0;
  return signed ? 0.5 + 0.5 * (value / vmax) : value / vmax;
}

function drawHeatmap(
  svg: SvgBuilder,
  frame: readonly (readonly number[])[],
  rect: Rect,
  vmax: number,
  signed: boolean,
): void {
  const np = frame.length;
  const nphi = frame[0].length;
  const cw = rect.w / np;
  const ch = rect.h / nphi;
  for (let i = 0; i < np; i++) {
    for (let k = 0; k < nphi; k++) {
      const fill = heatColor(cellUnit(frame[i][k], vmax, signed));
      svg.rect(rect.x0 + i * cw, rect.y0 + rect.h - (k + 1) * ch, cw, ch, { fill });
    }
  }
  svg.rect(rect.x0, rect.y0, rect.w, rect.h, {
    fill: "none",
    stroke: "#444444",
    "stroke-width": "1",
  });
}

function drawQuiver(svg: SvgBuilder, frame: VectorCellFrame, rect: Rect): number {
  const np = frame.jp.length;
  const nphi = frame.jp[0].length;
  const cw = rect.w / np;
  const ch = rect.h / nphi;
  let vmax = 0;
  for (let i = 0; i < np; i++) {
    for (let k = 0; k < nphi; k++) {
      vmax = Math.max(vmax, Math.hypot(frame.jp[i][k], frame.jphi[i][k]));
    }
  }
  svg.rect(rect.x0, rect.y0, rect.w, rect.h, {
    fill: "#ffffff",
    stroke: "#444444",
    "stroke-width": "1",
  });
  if (vmax <= 0) return 0;
  const arrowScale = 0.45 * Math.min(cw, ch);
  let arrows = 0;
  for (let i = 0; i < np; i++) {
    for (let k = 0; k < nphi; k++) {
      const jp = frame.jp[i][k];
      const jphi = frame.jphi[i][k];
      const mag = Math.hypot(jp, jphi);
      if (mag === 0) continue;
      const cx = rect.x0 + (i + 0.5) * cw;
      const cy = rect.y0 + rect.h - (k + 0.5) * ch;
      const dx = (jp / vmax) * arrowScale;
      const dy = -(jphi / vmax) * arrowScale;
      const tipX = cx + dx;
      const tipY = cy + dy;
      svg.line(cx, cy, tipX, tipY, { stroke: "#883322", "stroke-width": "1" });
      svg.circle(tipX, tipY, 0.9, { fill: "#883322" });
      arrows += 1;
    }
  }
  return arrows;
}

function rowLabel(svg: SvgBuilder, label: string, rect: Rect): void {
  svg.text(rect.x0 - 10, rect.y0 + rect.h / 2, label, {
    "font-family": "monospace",
    "font-size": "11",
    "text-anchor": "middle",
    transform: `rotate(-90 ${fmt(rect.x0 - 10)} ${fmt(rect.y0 + rect.h / 2)})`,
  });
}

/**
 * Three-row panel figure: one column per selected transition time.
 * Flux and sigma files label transitions by departure time, so selection is
 * driven by the flux-vector frames and the density frame at the same time.
 */
export function plotCells(
  muCsv: string,
  fluxvecCsv: string,
  sigmaCsv: string,
  spec: FigureSpec = {},
): RenderResult {
  const muFrames = parseCells(muCsv, "cells_mu.csv");
  const fluxFrames = selectSnapshots(
    parseVectorCells(fluxvecCsv, "cells_fluxvec.csv"),
    spec.times,
    spec.stride,
  );
  const sigmaAll = parseCells(sigmaCsv, "cells_sigma.csv");
  const times = fluxFrames.map((f) => f.time);
  const muSel = selectSnapshots(muFrames, times, undefined);
  const sigmaSel = selectSnapshots(sigmaAll, times, undefined);

  const size = spec.panelSize ?? 200;
  const cols = times.length;
  const width = PAD + cols * (size + GAP) + PAD;
  const height = PAD + 3 * (size + GAP) + PAD;
  const svg = new SvgBuilder(width, height);
  svg.rect(0, 0, width, height, { fill: "#fbfbf8" });

  const muMax = frameMax(muSel, false);
  const sigmaMax = frameMax(sigmaSel, true);
  let markersRendered = 0;
  for (let c = 0; c < cols; c++) {
    const x0 = PAD + c * (size + GAP);
    const muRect: Rect = { x0, y0: PAD, w: size, h: size };
    const fluxRect: Rect = { x0, y0: PAD + (size + GAP), w: size, h: size };
    const sigmaRect: Rect = { x0, y0: PAD + 2 * (size + GAP), w: size, h: size };
    svg.text(x0 + size / 2, PAD - 8, `t = ${times[c]}`, {
      "font-family": "monospace",
      "font-size": "11",
      "text-anchor": "middle",
    });
    drawHeatmap(svg, muSel[c].values, muRect, muMax, false);
    markersRendered += drawQuiver(svg, fluxFrames[c], fluxRect);
    drawHeatmap(svg, sigmaSel[c].values, sigmaRect, sigmaMax, true);
    if (c === 0) {
      rowLabel(svg, "mu", muRect);
      rowLabel(svg, "flux", fluxRect);
      rowLabel(svg, "sigma", sigmaRect);
    }
  }
  return { svg: svg.render(), markersRendered };
}

/** Single heatmap of the density field averaged over the selected frames. */
export function plotMuAverage(muCsv: string, spec: FigureSpec = {}): RenderResult {
  const frames = selectSnapshots(parseCells(muCsv, "cells_mu.csv"), spec.times, spec.stride);
  const np = frames[0].values.length;
  const nphi = frames[0].values[0].length;
  const mean: number[][] = Array.from({ length: np }, () => new Array<number>(nphi).fill(0));
  for (const frame of frames) {
    for (let i = 0; i < np; i++) {
      for (let k = 0; k < nphi; k++) mean[i][k] += frame.values[i][k] / frames.length;
    }
  }
  const size = spec.panelSize ?? 240;
  const width = PAD + size + PAD;
  const height = PAD + size + PAD;
  const svg = new SvgBuilder(width, height);
  svg.rect(0, 0, width, height, { fill: "#fbfbf8" });
  svg.text(PAD + size / 2, PAD - 8, `mean density over ${frames.length} frames`, {
    "font-family": "monospace",
    "font-size": "11",
    "text-anchor": "middle",
  });
  const rect: Rect = { x0: PAD, y0: PAD, w: size, h: size };
  drawHeatmap(svg, mean, rect, frameMax([{ time: 0, values: mean }], false), false);
  return { svg: svg.render(), markersRendered: np * nphi };
}

/** Entropy-versus-time curve. */
export function plotEntropyCurve(entropyCsv: string, spec: FigureSpec = {}): RenderResult {
  const points = parseEntropy(entropyCsv);
  const size = spec.panelSize ?? 260;
  const width = PAD + size * 1.6 + PAD;
  const height = PAD + size + PAD;
  const plotW = size * 1.6;
  const svg = new SvgBuilder(width, height);
  svg.rect(0, 0, width, height, { fill: "#fbfbf8" });
  svg.rect(PAD, PAD, plotW, size, { fill: "#ffffff", stroke: "#444444", "stroke-width": "1" });
  const tLo = points[0].time;
  const tHi = points[points.length - 1].time;
  let sLo = Infinity;
  let sHi = -Infinity;
  for (const pt of points) {
    sLo = Math.min(sLo, pt.entropy);
    sHi = Math.max(sHi, pt.entropy);
  }
  const tSpan = tHi > tLo ? tHi - tLo : 1;
  const sSpan = sHi > sLo ? sHi - sLo : 1;
  const coords = points.map((pt): [number, number] => [
    PAD + ((pt.time - tLo) / tSpan) * plotW,
    PAD + size - ((pt.entropy - sLo) / sSpan) * size,
  ]);
  svg.polyline(coords, { stroke: "#1f4e8c", "stroke-width": "1.5" });
  svg.text(PAD + plotW / 2, PAD + size + 18, "t", {
    "font-family": "monospace",
    "font-size": "10",
    "text-anchor": "middle",
  });
  svg.text(PAD - 10, PAD + size / 2, "S", {
    "font-family": "monospace",
    "font-size": "10",
    "text-anchor": "middle",
    transform: `rotate(-90 ${fmt(PAD - 10)} ${fmt(PAD + size / 2)})`,
  });
  svg.text(PAD - 4, PAD + size, fmt(sLo), {
    "font-family": "monospace",
    "font-size": "8",
    "text-anchor": "end",
  });
  svg.text(PAD - 4, PAD + 8, fmt(sHi), {
    "font-family": "monospace",
    "font-size": "8",
    "text-anchor": "end",
  });
  return { svg: svg.render(), markersRendered: points.length };
}
