// Hand-rolled SVG chart rendering from ChartSpec JSON. The server is the
// single source of truth for numbers: these functions never aggregate or
// reorder, they draw spec.data exactly as received.

import { ChartSpec, ChartType, isTemporal } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 360;
const HEIGHT = 220;
const DONUT_MAX_CATEGORIES = 12;

const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
  "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

/** Chart types this data may be displayed as; mirrors the server's own
 * charting preconditions (temporal axis for area/line, small non-negative
 * categorical set for donut). */
export function validChartTypes(spec: ChartSpec): ChartType[] {
  const types: ChartType[] = ["bar", "table"];
  if (spec.data.length <= DONUT_MAX_CATEGORIES && spec.data.every((p) => p.value >= 0)) {
    types.push("donut");
  }
  if (isTemporal(spec)) {
    types.push("area", "line");
  }
  return types;
}

function placeholder(text: string): HTMLElement {
  const div = document.createElement("div");
  div.className = "chart-placeholder";
  div.textContent = text;
  return div;
}

function donutArcs(root: SVGSVGElement, spec: ChartSpec): void {
  const total = spec.data.reduce((acc, p) => acc + p.value, 0);
  const cx = WIDTH / 2;
  const cy = HEIGHT / 2;
  const outer = Math.min(cx, cy) - 24;
  const inner = outer * 0.55;
  if (total <= 0) {
    root.appendChild(
      svgElement("circle", { cx, cy, r: outer, fill: "none", stroke: "#ccc", "stroke-width": 2 }),
    );
    return;
  }
  let angle = -Math.PI / 2;
  spec.data.forEach((point, i) => {
    const sweep = (point.value / total) * 2 * Math.PI;
    const end = angle + sweep;
    const large = sweep > Math.PI ? 1 : 0;
    // a slice covering (almost) the full circle cannot be a single arc
    const path =
      sweep >= 2 * Math.PI - 1e-9
        ? fullRing(cx, cy, outer, inner)
        : ringSlice(cx, cy, outer, inner, angle, end, large);
    const arc = svgElement("path", { d: path, fill: PALETTE[i % PALETTE.length] });
    arc.dataset.label = point.label;
    arc.dataset.value = String(point.value);
    const title = svgElement("title");
    title.textContent = `${point.label}: ${point.value}`;
    arc.appendChild(title);
    root.appendChild(arc);
    const mid = angle + sweep / 2;
    const lx = cx + Math.cos(mid) * (outer + 12);
    const ly = cy + Math.sin(mid) * (outer + 12);
    const label = svgElement("text", {
      x: lx, y: ly, "font-size": 11,
      "text-anchor": Math.cos(mid) < 0 ? "end" : "start",
    });
    label.textContent = `${point.label} (${point.value})`;
    root.appendChild(label);
    angle = end;
  });
}

function ringSlice(
  cx: number, cy: number, outer: number, inner: number,
  start: number, end: number, large: number,
): string {
  const sox = cx + Math.cos(start) * outer;
  const soy = cy + Math.sin(start) * outer;
  const eox = cx + Math.cos(end) * outer;
  const eoy = cy + Math.sin(end) * outer;
  const six = cx + Math.cos(start) * inner;
  const siy = cy + Math.sin(start) * inner;
  const eix = cx + Math.cos(end) * inner;
  const eiy = cy + Math.sin(end) * inner;
  return [
    `M ${sox} ${soy}`,
    `A ${outer} ${outer} 0 ${large} 1 ${eox} ${eoy}`,
    `L ${eix} ${eiy}`,
    `A ${inner} ${inner} 0 ${large} 0 ${six} ${siy}`,
    "Z",
  ].join(" ");
}

function fullRing(cx: number, cy: number, outer: number, inner: number): string {
  return [
    `M ${cx - outer} ${cy}`,
    `A ${outer} ${outer} 0 1 1 ${cx + outer} ${cy}`,
    `A ${outer} ${outer} 0 1 1 ${cx - outer} ${cy}`,
    `M ${cx - inner} ${cy}`,
    `A ${inner} ${inner} 0 1 0 ${cx + inner} ${cy}`,
    `A ${inner} ${inner} 0 1 0 ${cx - inner} ${cy}`,
    "Z",
  ].join(" ");
}

function bars(root: SVGSVGElement, spec: ChartSpec): void {
  const peak = Math.max(...spec.data.map((p) => Math.abs(p.value)), 1e-9);
  const plotHeight = HEIGHT - 40;
  const slot = WIDTH / spec.data.length;
  const barWidth = Math.min(slot * 0.7, 48);
  spec.data.forEach((point, i) => {
    const h = (Math.abs(point.value) / peak) * (plotHeight - 20);
    const x = slot * i + (slot - barWidth) / 2;
    const rect = svgElement("rect", {
      x, y: plotHeight - h, width: barWidth, height: Math.max(h, 1),
      fill: PALETTE[i % PALETTE.length],
    });
    rect.dataset.label = point.label;
    rect.dataset.value = String(point.value);
    root.appendChild(rect);
    const label = svgElement("text", {
      x: x + barWidth / 2, y: HEIGHT - 24, "font-size": 10, "text-anchor": "middle",
    });
    label.textContent = point.label;
    root.appendChild(label);
    const value = svgElement("text", {
      x: x + barWidth / 2, y: plotHeight - h - 4, "font-size": 10, "text-anchor": "middle",
    });
    value.textContent = String(point.value);
    root.appendChild(value);
  });
}

function areaOrLine(root: SVGSVGElement, spec: ChartSpec, filled: boolean): void {
  const peak = Math.max(...spec.data.map((p) => p.value), 1e-9);
  const floor = Math.min(...spec.data.map((p) => p.value), 0);
  const plotHeight = HEIGHT - 40;
  const step = spec.data.length > 1 ? WIDTH / (spec.data.length - 1) : 0;
  const yOf = (v: number) => plotHeight - ((v - floor) / (peak - floor || 1)) * (plotHeight - 20);
  const coords = spec.data.map((p, i) => `${i * step},${yOf(p.value)}`);
  if (filled) {
    const polygon = svgElement("polygon", {
      points: [`0,${plotHeight}`, ...coords, `${WIDTH},${plotHeight}`].join(" "),
      fill: "#4e79a766", stroke: "#4e79a7",
    });
    root.appendChild(polygon);
  } else {
    root.appendChild(
      svgElement("polyline", { points: coords.join(" "), fill: "none", stroke: "#4e79a7", "stroke-width": 2 }),
    );
  }
  spec.data.forEach((point, i) => {
    const dot = svgElement("circle", { cx: i * step, cy: yOf(point.value), r: 3, fill: "#4e79a7" });
    dot.dataset.label = point.label;
    dot.dataset.value = String(point.value);
    root.appendChild(dot);
  });
}

function table(spec: ChartSpec): HTMLElement {
  const tbl = document.createElement("table");
  tbl.className = "chart-table";
  const head = tbl.createTHead().insertRow();
  for (const name of [spec.dimension, spec.measure]) {
    const th = document.createElement("th");
    th.textContent = name;
    head.appendChild(th);
  }
  const body = tbl.createTBody();
  for (const point of spec.data) {
    const row = body.insertRow();
    row.insertCell().textContent = point.label;
    const cell = row.insertCell();
    cell.textContent = String(point.value);
    row.dataset.label = point.label;
    row.dataset.value = String(point.value);
  }
  return tbl;
}

/** Draw one chart. The returned element carries data attributes describing
 * exactly what was drawn (type, labels, values) for inspection and tests. */
export function renderChart(spec: ChartSpec, as?: ChartType): HTMLElement {
  const type = as ?? spec.chart_type;
  const wrapper = document.createElement("figure");
  wrapper.className = `chart chart-${type}`;
  wrapper.dataset.chartType = type;
  wrapper.dataset.labels = JSON.stringify(spec.data.map((p) => p.label));
  wrapper.dataset.values = JSON.stringify(spec.data.map((p) => p.value));
  const caption = document.createElement("figcaption");
  caption.textContent = spec.title;
  wrapper.appendChild(caption);
  if (spec.data.length === 0) {
    wrapper.appendChild(placeholder("no data"));
    return wrapper;
  }
  if (type === "table") {
    wrapper.appendChild(table(spec));
    return wrapper;
  }
  const svg = svgElement("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`, width: WIDTH, height: HEIGHT, role: "img",
  });
  if (type === "donut") donutArcs(svg, spec);
  else if (type === "bar") bars(svg, spec);
  else areaOrLine(svg, spec, type === "area");
  wrapper.appendChild(svg);
  return wrapper;
}
