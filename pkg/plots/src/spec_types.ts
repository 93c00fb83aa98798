/** Figure styling/selection options shared by all plot entry points. */

export interface FigureSpec {
  /** Exact snapshot times to draw; a time absent from the data raises MissingSnapshotError. */
  readonly times?: readonly number[];
  /** Draw every nth snapshot when `times` is not given (default 1 = all). */
  readonly stride?: number;
  /** Panels per grid row (default: up to 4). */
  readonly columns?: number;
  /** Edge length of one panel's drawing area in px (default 200). */
  readonly panelSize?: number;
  /** Marker radius in px for a unit-weight particle; radius = markerScale * sqrt(x). */
  readonly markerScale?: number;
}

export interface RenderResult {
  readonly svg: string;
  /** Number of data markers drawn (one per consumed particle row). */
  readonly markersRendered: number;
}

export const TWO_PI = 2 * Math.PI;

export function gridShape(nPanels: number, columns?: number): { cols: number; rows: number } {
  const cols = columns !== undefined && columns > 0 ? columns : Math.min(4, Math.max(1, nPanels));
  return { cols, rows: Math.ceil(nPanels / cols) };
}
