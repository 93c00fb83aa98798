/** Parsers for the simulator's CSV file contracts. */

export class CsvFormatError extends Error {
  constructor(source: string, line: number, detail: string) {
    super(`${source}:${line}: ${detail}`);
    this.name = "CsvFormatError";
  }
}

export class MissingSnapshotError extends Error {
  constructor(time: number, available: readonly number[]) {
    super(
      `no snapshot at t=${time}; file holds t=[${available.join(", ")}]`,
    );
    this.name = "MissingSnapshotError";
  }
}

export interface Particle {
  readonly x: number;
  readonly p: number;
  readonly phi: number;
}

export interface Snapshot {
  readonly time: number;
  readonly particles: readonly Particle[];
}

export interface CellFrame {
  readonly time: number;
  /** values[i][k], i indexing p rows, k indexing phi columns */
  readonly values: readonly (readonly number[])[];
}

export interface VectorCellFrame {
  readonly time: number;
  readonly jp: readonly (readonly number[])[];
  readonly jphi: readonly (readonly number[])[];
}

export interface EntropyPoint {
  readonly time: number;
  readonly entropy: number;
}

function splitLines(text: string): string[] {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  return lines;
}

function parseNumber(
  raw: string,
  source: string,
  line: number,
  column: string,
): number {
  const value = Number(raw);
  if (raw.trim() === "" || Number.isNaN(value)) {
    throw new CsvFormatError(source, line, `column '${column}' is not a number: '${raw}'`);
  }
  return value;
}

function parseIndex(
  raw: string,
  source: string,
  line: number,
  column: string,
): number {
  const value = parseNumber(raw, source, line, column);
  if (!Number.isInteger(value) || value < 0) {
    throw new CsvFormatError(
      source,
      line,
      `column '${column}' is not a nonnegative integer: '${raw}'`,
    );
  }
  return value;
}

function checkHeader(lines: string[], expected: string, source: string): void {
  if (lines.length === 0 || lines[0] !== expected) {
    throw new CsvFormatError(source, 1, `expected header '${expected}', got '${lines[0] ?? ""}'`);
  }
}

/** particles.csv: `t,alpha,x,p,phi`, grouped into snapshots by consecutive t. */
export function parseParticles(text: string, source = "particles.csv"): Snapshot[] {
  const lines = splitLines(text);
  checkHeader(lines, "t,alpha,x,p,phi", source);
  const snapshots: Snapshot[] = [];
  let current: Particle[] = [];
  let currentTime: number | null = null;
  for (let n = 1; n < lines.length; n++) {
    const parts = lines[n].split(",");
    if (parts.length !== 5) {
      throw new CsvFormatError(source, n + 1, `expected 5 columns, got ${parts.length}`);
    }
    const t = parseNumber(parts[0], source, n + 1, "t");
    const alpha = parseIndex(parts[1], source, n + 1, "alpha");
    const particle: Particle = {
      x: parseNumber(parts[2], source, n + 1, "x"),
      p: parseNumber(parts[3], source, n + 1, "p"),
      phi: parseNumber(parts[4], source, n + 1, "phi"),
    };
    if (currentTime === null || t !== currentTime) {
      if (currentTime !== null) snapshots.push({ time: currentTime, particles: current });
      current = [];
      currentTime = t;
    }
    if (alpha !== current.length) {
      throw new CsvFormatError(source, n + 1, `alpha ${alpha} out of order, expected ${current.length}`);
    }
    current.push(particle);
  }
  if (currentTime !== null) snapshots.push({ time: currentTime, particles: current });
  if (snapshots.length === 0) {
    throw new CsvFormatError(source, 1, "file holds no particle rows");
  }
  const count = snapshots[0].particles.length;
  for (const snap of snapshots) {
    if (snap.particles.length !== count) {
      throw new CsvFormatError(
        source,
        1,
        `snapshot at t=${snap.time} has ${snap.particles.length} particles, expected ${count}`,
      );
    }
  }
  return snapshots;
}

function collectFrames(
  lines: string[],
  source: string,
  valueColumns: string[],
): { times: number[]; frames: Map<number, Map<string, number[]>>; np: number; nphi: number } {
  let np = 0;
  let nphi = 0;
  const times: number[] = [];
  const frames = new Map<number, Map<string, number[]>>();
  for (let n = 1; n < lines.length; n++) {
    const parts = lines[n].split(",");
    if (parts.length !== 3 + valueColumns.length) {
      throw new CsvFormatError(
        source,
        n + 1,
        `expected ${3 + valueColumns.length} columns, got ${parts.length}`,
      );
    }
    const t = parseNumber(parts[0], source, n + 1, "t");
    const i = parseIndex(parts[1], source, n + 1, "i");
    const k = parseIndex(parts[2], source, n + 1, "k");
    np = Math.max(np, i + 1);
    nphi = Math.max(nphi, k + 1);
    let frame = frames.get(t);
    if (frame === undefined) {
      frame = new Map(valueColumns.map((c) => [c, []]));
      frames.set(t, frame);
      times.push(t);
    }
    for (let c = 0; c < valueColumns.length; c++) {
      frame.get(valueColumns[c])!.push(parseNumber(parts[3 + c], source, n + 1, valueColumns[c]));
    }
  }
  if (times.length === 0) throw new CsvFormatError(source, 1, "file holds no cell rows");
  return { times, frames, np, nphi };
}

function toGrid(flat: number[], np: number, nphi: number, source: string): number[][] {
  if (flat.length !== np * nphi) {
    throw new CsvFormatError(source, 1, `frame holds ${flat.length} cells, expected ${np * nphi}`);
  }
  const grid: number[][] = [];
  for (let i = 0; i < np; i++) grid.push(flat.slice(i * nphi, (i + 1) * nphi));
  return grid;
}

/** cells_{mu,flux,sigma}.csv: `t,i,k,value`, row-major per snapshot. */
export function parseCells(text: string, source = "cells.csv"): CellFrame[] {
  const lines = splitLines(text);
  checkHeader(lines, "t,i,k,value", source);
  const { times, frames, np, nphi } = collectFrames(lines, source, ["value"]);
  return times.map((t) => ({
    time: t,
    values: toGrid(frames.get(t)!.get("value")!, np, nphi, source),
  }));
}

/** cells_fluxvec.csv: `t,i,k,jp,jphi`. */
export function parseVectorCells(text: string, source = "cells_fluxvec.csv"): VectorCellFrame[] {
  const lines = splitLines(text);
  checkHeader(lines, "t,i,k,jp,jphi", source);
  const { times, frames, np, nphi } = collectFrames(lines, source, ["jp", "jphi"]);
  return times.map((t) => ({
    time: t,
    jp: toGrid(frames.get(t)!.get("jp")!, np, nphi, source),
    jphi: toGrid(frames.get(t)!.get("jphi")!, np, nphi, source),
  }));
}

/** entropy.csv: `t,entropy`. */
export function parseEntropy(text: string, source = "entropy.csv"): EntropyPoint[] {
  const lines = splitLines(text);
  checkHeader(lines, "t,entropy", source);
  const points: EntropyPoint[] = [];
  for (let n = 1; n < lines.length; n++) {
    const parts = lines[n].split(",");
    if (parts.length !== 2) {
      throw new CsvFormatError(source, n + 1, `expected 2 columns, got ${parts.length}`);
    }
    points.push({
      time: parseNumber(parts[0], source, n + 1, "t"),
      entropy: parseNumber(parts[1], source, n + 1, "entropy"),
    });
  }
  if (points.length === 0) throw new CsvFormatError(source, 1, "file holds no rows");
  return points;
}

/** Pick snapshots by exact time; a time absent from the data is a named error. */
export function selectSnapshots<T extends { time: number }>(
  frames: readonly T[],
  times: readonly number[] | undefined,
  stride: number | undefined,
): T[] {
  if (times !== undefined) {
    const available = frames.map((f) => f.time);
    return times.map((t) => {
      const hit = frames.find((f) => f.time === t);
      if (hit === undefined) throw new MissingSnapshotError(t, available);
      return hit;
    });
  }
  const step = stride !== undefined && stride > 0 ? stride : 1;
  const out: T[] = [];
  for (let n = 0; n < frames.length; n += step) out.push(frames[n]);
  return out;
}
