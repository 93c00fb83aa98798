export {
  CsvFormatError,
  MissingSnapshotError,
  parseParticles,
  parseCells,
  parseVectorCells,
  parseEntropy,
  selectSnapshots,
} from "./csv.js";
export type { Particle, Snapshot, CellFrame, VectorCellFrame, EntropyPoint } from "./csv.js";
export type { FigureSpec, RenderResult } from "./spec_types.js";
export { plotBlochSquare } from "./bloch_square.js";
export { plotCells, plotMuAverage, plotEntropyCurve } from "./cells.js";
export {
  plotBlochSphere,
  sphereAngle,
  sphereConventionSelfTest,
  unitVector,
  project,
} from "./bloch_sphere.js";
export { heatColor, fmt, SvgBuilder } from "./svg.js";
