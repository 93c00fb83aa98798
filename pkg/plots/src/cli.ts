#!/usr/bin/env node
/**
 * Figure renderer over the simulator's CSV outputs.
 *
 * Usage:
 *   blochflow-plot square   --particles <csv> --out <svg> [--times a,b | --stride n] [--columns n]
 *   blochflow-plot sphere   --particles <csv> --out <svg> [--times a,b | --stride n] [--columns n]
 *   blochflow-plot cells    --mu <csv> --fluxvec <csv> --sigma <csv> --out <svg> [--times a,b | --stride n]
 *   blochflow-plot mu-mean  --mu <csv> --out <svg> [--times a,b | --stride n]
 *   blochflow-plot entropy  --entropy <csv> --out <svg>
 *
 * Exit codes: 0 success, 2 bad arguments or malformed/missing data, 4 I/O error.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import { CsvFormatError, MissingSnapshotError } from "./csv.js";
import { FigureSpec, RenderResult } from "./spec_types.js";
import { plotBlochSquare } from "./bloch_square.js";
import { plotBlochSphere } from "./bloch_sphere.js";
import { plotCells, plotMuAverage, plotEntropyCurve } from "./cells.js";

class UsageError extends Error {}

interface Flags {
  readonly values: Map<string, string>;
}

function parseFlags(argv: string[], allowed: readonly string[]): Flags {
  const values = new Map<string, string>();
  for (let n = 0; n < argv.length; n += 2) {
    const key = argv[n];
    if (!key.startsWith("--")) throw new UsageError(`expected a --flag, got '${key}'`);
    const name = key.slice(2);
    if (!allowed.includes(name)) throw new UsageError(`unknown flag '--${name}'`);
    if (n + 1 >= argv.length) throw new UsageError(`flag '--${name}' needs a value`);
    values.set(name, argv[n + 1]);
  }
  return { values };
}

function requireFlag(flags: Flags, name: string): string {
  const value = flags.values.get(name);
  if (value === undefined) throw new UsageError(`missing required flag '--${name}'`);
  return value;
}

function numberFlag(flags: Flags, name: string): number | undefined {
  const raw = flags.values.get(name);
  if (raw === undefined) return undefined;
  const value = Number(raw);
  if (Number.isNaN(value)) throw new UsageError(`flag '--${name}' is not a number: '${raw}'`);
  return value;
}

function buildSpec(flags: Flags): FigureSpec {
  const rawTimes = flags.values.get("times");
  let times: number[] | undefined;
  if (rawTimes !== undefined) {
    times = rawTimes.split(",").map((part) => {
      const value = Number(part);
      if (part.trim() === "" || Number.isNaN(value)) {
        throw new UsageError(`flag '--times' holds a non-number: '${part}'`);
      }
      return value;
    });
  }
  return {
    times,
    stride: numberFlag(flags, "stride"),
    columns: numberFlag(flags, "columns"),
    panelSize: numberFlag(flags, "panel-size"),
    markerScale: numberFlag(flags, "marker-scale"),
  };
}

function readInput(path: string): string {
  return readFileSync(path, { encoding: "utf-8" });
}

const COMMON_FLAGS = ["out", "times", "stride", "columns", "panel-size", "marker-scale"];

function dispatch(command: string, argv: string[]): { result: RenderResult; out: string } {
  switch (command) {
    case "square": {
      const flags = parseFlags(argv, ["particles", ...COMMON_FLAGS]);
      const text = readInput(requireFlag(flags, "particles"));
      return { result: plotBlochSquare(text, buildSpec(flags)), out: requireFlag(flags, "out") };
    }
    case "sphere": {
      const flags = parseFlags(argv, ["particles", ...COMMON_FLAGS]);
      const text = readInput(requireFlag(flags, "particles"));
      return { result: plotBlochSphere(text, buildSpec(flags)), out: requireFlag(flags, "out") };
    }
    case "cells": {
      const flags = parseFlags(argv, ["mu", "fluxvec", "sigma", ...COMMON_FLAGS]);
      const mu = readInput(requireFlag(flags, "mu"));
      const fluxvec = readInput(requireFlag(flags, "fluxvec"));
      const sigma = readInput(requireFlag(flags, "sigma"));
      return { result: plotCells(mu, fluxvec, sigma, buildSpec(flags)), out: requireFlag(flags, "out") };
    }
    case "mu-mean": {
      const flags = parseFlags(argv, ["mu", ...COMMON_FLAGS]);
      const mu = readInput(requireFlag(flags, "mu"));
      return { result: plotMuAverage(mu, buildSpec(flags)), out: requireFlag(flags, "out") };
    }
    case "entropy": {
      const flags = parseFlags(argv, ["entropy", ...COMMON_FLAGS]);
      const text = readInput(requireFlag(flags, "entropy"));
      return { result: plotEntropyCurve(text, buildSpec(flags)), out: requireFlag(flags, "out") };
    }
    default:
      throw new UsageError(
        `unknown command '${command}' (expected square | sphere | cells | mu-mean | entropy)`,
      );
  }
}

export function main(argv: string[]): number {
  if (argv.length === 0) {
    process.stderr.write("error: missing command (square | sphere | cells | mu-mean | entropy)\n");
    return 2;
  }
  try {
    const { result, out } = dispatch(argv[0], argv.slice(1));
    writeFileSync(out, result.svg, { encoding: "utf-8" });
    process.stdout.write(`${argv[0]}: wrote ${basename(out)} (${result.markersRendered} markers)\n`);
    return 0;
  } catch (err) {
    if (err instanceof UsageError || err instanceof CsvFormatError || err instanceof MissingSnapshotError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 2;
    }
    if (err instanceof Error && "code" in err) {
      process.stderr.write(`i/o error: ${err.message}\n`);
      return 4;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  (process.argv[1].endsWith("/cli.js") || process.argv[1].endsWith("blochflow-plot"));
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
