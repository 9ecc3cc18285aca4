/**
 * Diverging heat grid for relevance maps.
 *
 * Positive relevance shades toward red, negative toward blue, zero stays
 * neutral white. Saturation is linear in |value| / max|value| over the
 * grid, so the payload extremes land on the saturated palette ends. The
 * cell model is pure data; rendering attaches it to the DOM with the
 * tooltip equal to the raw payload value.
 */

export interface HeatCell {
  value: number;
  color: string;
  tooltip: string;
}

export interface HeatGridModel {
  rows: HeatCell[][];
  min: number;
  max: number;
  /* max |value| over the grid; 0 for an all-zero grid */
  scale: number;
}

const POSITIVE_END: [number, number, number] = [178, 24, 43];
const NEGATIVE_END: [number, number, number] = [33, 102, 172];
const NEUTRAL: [number, number, number] = [255, 255, 255];

function mix(t: number, end: [number, number, number]): string {
  const ch = (i: number) => Math.round(NEUTRAL[i]! + t * (end[i]! - NEUTRAL[i]!));
  return `rgb(${ch(0)}, ${ch(1)}, ${ch(2)})`;
}

export function cellColor(value: number, scale: number): string {
  if (scale <= 0 || value === 0) return mix(0, POSITIVE_END);
  const t = Math.min(1, Math.abs(value) / scale);
  return mix(t, value > 0 ? POSITIVE_END : NEGATIVE_END);
}

export function heatGridModel(grid: number[][]): HeatGridModel {
  let min = Infinity;
  let max = -Infinity;
  for (const row of grid)
    for (const v of row) {
      if (v < min) min = v;
      if (v > max) max = v;
    }
  if (!isFinite(min)) {
    min = 0;
    max = 0;
  }
  const scale = Math.max(Math.abs(min), Math.abs(max));
  const rows = grid.map((row) =>
    row.map((value) => ({
      value,
      color: cellColor(value, scale),
      tooltip: String(value),
    }))
  );
  return { rows, min, max, scale };
}

/** Build the on-screen grid; each cell's title attribute is its tooltip. */
export function renderHeatGrid(
  doc: Document,
  grid: number[][],
  cellSize = 6
): HTMLElement {
  const model = heatGridModel(grid);
  const el = doc.createElement("div");
  el.className = "heat-grid";
  el.style.display = "grid";
  const cols = model.rows[0]?.length ?? 0;
  el.style.gridTemplateColumns = `repeat(${cols}, ${cellSize}px)`;
  for (const row of model.rows)
    for (const cell of row) {
      const d = doc.createElement("div");
      d.className = "heat-cell";
      d.style.width = `${cellSize}px`;
      d.style.height = `${cellSize}px`;
      d.style.backgroundColor = cell.color;
      d.title = cell.tooltip;
      el.appendChild(d);
    }
  el.dataset.min = String(model.min);
  el.dataset.max = String(model.max);
  return el;
}

/** Region outline as an SVG polygon over the same pixel-corner lattice. */
export function renderRegionOverlay(
  doc: Document,
  boundary: [number, number][],
  width: number,
  height: number,
  cellSize = 6
): SVGElement {
  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("class", "region-overlay");
  svg.setAttribute("width", String(width * cellSize));
  svg.setAttribute("height", String(height * cellSize));
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  const poly = doc.createElementNS("http://www.w3.org/2000/svg", "polygon");
  poly.setAttribute("points", boundary.map(([x, y]) => `${x},${y}`).join(" "));
  poly.setAttribute("fill", "none");
  poly.setAttribute("stroke", "#222");
  poly.setAttribute("stroke-width", "0.25");
  svg.appendChild(poly);
  return svg;
}
