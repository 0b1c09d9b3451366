/**
 * Detail panel content: the selected record's metadata and a summary of
 * its cluster (size, mean value/reward, centroid, greedy successor).
 * The cluster summary stands in for per-state imagery, which the export
 * format does not carry.
 */

import { ExportDocument } from "./document.js";

export interface DetailField {
  label: string;
  value: string;
}

function fmt(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toPrecision(6);
}

export function recordDetails(doc: ExportDocument, index: number): DetailField[] {
  const r = doc.records;
  return [
    { label: "record", value: String(index) },
    { label: "traj_id", value: String(r.traj_id[index]) },
    { label: "t", value: String(r.t[index]) },
    { label: "reward", value: fmt(r.reward[index]) },
    { label: "value", value: fmt(r.value[index]) },
    { label: "cluster", value: String(r.cluster[index]) },
  ];
}

export function clusterDetails(doc: ExportDocument, cluster: number): DetailField[] {
  const c = doc.clusters;
  const choice = doc.greedy.choice[cluster];
  const fields: DetailField[] = [
    { label: "cluster size", value: String(c.size[cluster]) },
    { label: "mean value", value: fmt(c.mean_value[cluster]) },
    { label: "mean reward", value: fmt(c.mean_reward[cluster]) },
    { label: "centroid", value: `[${c.centroids[cluster].map(fmt).join(", ")}]` },
    { label: "model value", value: fmt(doc.model.v[cluster]) },
    { label: "greedy successor", value: choice < 0 ? "none (absorbing)" : String(choice) },
  ];
  return fields;
}

export function renderDetails(
  container: HTMLElement,
  fields: DetailField[],
  heading: string,
): void {
  const title = container.ownerDocument.createElement("h3");
  title.textContent = heading;
  container.appendChild(title);
  const dl = container.ownerDocument.createElement("dl");
  for (const field of fields) {
    const dt = container.ownerDocument.createElement("dt");
    dt.textContent = field.label;
    const dd = container.ownerDocument.createElement("dd");
    dd.textContent = field.value;
    dd.setAttribute("data-field", field.label);
    dl.appendChild(dt);
    dl.appendChild(dd);
  }
  container.appendChild(dl);
}
