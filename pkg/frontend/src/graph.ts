/**
 * SAMDP graph view: one SVG node per cluster placed at the cluster's mean
 * embedding coordinate, directed edges for observed skills labeled with
 * the inferred transition probability, skill reward, and skill length.
 * The traversed edge from trajectory stepping renders highlighted.
 */

import { ExportDocument, skillEdges } from "./document.js";
import { categoricalColor } from "./colors.js";
import { makeTransform } from "./scatter.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface GraphOptions {
  width: number;
  height: number;
  highlight: { from: number; to: number } | null;
}

function fmt(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(2);
}

export function buildGraph(
  doc: Document,
  data: ExportDocument,
  options: GraphOptions,
): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("width", String(options.width));
  svg.setAttribute("height", String(options.height));
  svg.setAttribute("viewBox", `0 0 ${options.width} ${options.height}`);
  svg.setAttribute("data-role", "samdp-graph");

  const transform = makeTransform(
    data.records.x, data.records.y, options.width, options.height,
  );
  const k = data.meta.k;
  const pos: [number, number][] = [];
  for (let i = 0; i < k; i++) {
    pos.push(transform.toPixel(data.clusters.x[i], data.clusters.y[i]));
  }

  for (const { from, to } of skillEdges(data)) {
    const [x1, y1] = pos[from];
    const [x2, y2] = pos[to];
    const highlighted =
      options.highlight !== null &&
      options.highlight.from === from &&
      options.highlight.to === to;

    const line = doc.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(x1));
    line.setAttribute("y1", String(y1));
    line.setAttribute("x2", String(x2));
    line.setAttribute("y2", String(y2));
    line.setAttribute("stroke", highlighted ? "#d62728" : "#88888880");
    line.setAttribute("stroke-width", highlighted ? "3" : "1.5");
    line.setAttribute("data-role", "skill-edge");
    line.setAttribute("data-from", String(from));
    line.setAttribute("data-to", String(to));
    if (highlighted) {
      line.setAttribute("data-highlighted", "true");
    }
    svg.appendChild(line);

    const label = doc.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String((x1 + 2 * x2) / 3));
    label.setAttribute("y", String((y1 + 2 * y2) / 3 - 4));
    label.setAttribute("font-size", "9");
    label.setAttribute("fill", "#444444");
    label.setAttribute("data-role", "skill-label");
    label.textContent =
      `p=${fmt(data.model.p[from][to])} r=${fmt(data.model.r[from][to])} ` +
      `k=${fmt(data.model.l[from][to])}`;
    svg.appendChild(label);
  }

  for (let i = 0; i < k; i++) {
    const [cx, cy] = pos[i];
    const node = doc.createElementNS(SVG_NS, "circle");
    node.setAttribute("cx", String(cx));
    node.setAttribute("cy", String(cy));
    node.setAttribute("r", "14");
    node.setAttribute("fill", categoricalColor(i));
    node.setAttribute("stroke", "#333333");
    node.setAttribute("data-role", "cluster-node");
    node.setAttribute("data-cluster", String(i));
    svg.appendChild(node);

    const text = doc.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(cx));
    text.setAttribute("y", String(cy + 3));
    text.setAttribute("text-anchor", "middle");
    text.setAttribute("font-size", "11");
    text.setAttribute("fill", "#ffffff");
    text.textContent = String(i);
    svg.appendChild(text);
  }

  return svg;
}
