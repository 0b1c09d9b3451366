/**
 * Export-document types and validation.
 *
 * The explorer consumes exactly one input: the JSON document produced by
 * the pipeline's export-ui stage. Field names and nesting are frozen by
 * the schema shipped with the pipeline (export-ui.schema.json); the
 * checks here mirror it so a bad document produces a readable report
 * naming each offending field, and nothing renders until the document is
 * fully valid.
 */

export interface ExportMeta {
  n: number;
  n_trajectories: number;
  k: number;
  w: number;
  gamma: number;
}

export interface RecordColumns {
  traj_id: number[];
  t: number[];
  reward: number[];
  value: number[];
  cluster: number[];
  x: number[];
  y: number[];
}

export interface ClusterSummaries {
  centroids: number[][];
  x: number[];
  y: number[];
  size: number[];
  mean_value: number[];
  mean_reward: number[];
}

export interface ModelMatrices {
  p: number[][];
  r: number[][];
  l: number[][];
  v: number[];
  counts: number[][];
  absorbing: number[];
}

export interface GridRow {
  k: number;
  w: number;
  seed: number;
  vmse: number | null;
  inertia: number | null;
  intensity: number | null;
  entropy: number | null;
  selected: boolean;
  status: string;
}

export interface ExportDocument {
  format: string;
  version: number;
  meta: ExportMeta;
  records: RecordColumns;
  clusters: ClusterSummaries;
  model: ModelMatrices;
  greedy: { choice: number[] };
  grid: GridRow[];
}

const RECORD_FIELDS: (keyof RecordColumns)[] = [
  "traj_id", "t", "reward", "value", "cluster", "x", "y",
];
const CLUSTER_FIELDS: (keyof ClusterSummaries)[] = [
  "centroids", "x", "y", "size", "mean_value", "mean_reward",
];
const MODEL_FIELDS: (keyof ModelMatrices)[] = ["p", "r", "l", "v", "counts", "absorbing"];

function isNumberArray(value: unknown): value is number[] {
  return Array.isArray(value) && value.every((v) => typeof v === "number" && isFinite(v));
}

function isMatrix(value: unknown): value is number[][] {
  return Array.isArray(value) && value.every(isNumberArray);
}

/**
 * Validate a parsed JSON value against the export schema.
 * Returns a list of problems ("$.path: message"); empty means valid.
 */
export function validateDocument(raw: unknown): string[] {
  const problems: string[] = [];
  if (typeof raw !== "object" || raw === null) {
    return ["$: document must be a JSON object"];
  }
  const doc = raw as Record<string, unknown>;

  if (doc.format !== "samdp-export-ui") {
    problems.push("$.format: must be \"samdp-export-ui\"");
  }
  if (doc.version !== 1) {
    problems.push("$.version: must be 1");
  }

  const meta = doc.meta as Record<string, unknown> | undefined;
  if (typeof meta !== "object" || meta === null) {
    problems.push("$.meta: missing object");
  } else {
    for (const key of ["n", "n_trajectories", "k", "w", "gamma"]) {
      if (typeof meta[key] !== "number") {
        problems.push(`$.meta.${key}: missing number`);
      }
    }
  }

  const records = doc.records as Record<string, unknown> | undefined;
  if (typeof records !== "object" || records === null) {
    problems.push("$.records: missing object");
  } else {
    for (const key of RECORD_FIELDS) {
      if (!isNumberArray(records[key])) {
        problems.push(`$.records.${key}: missing numeric array`);
      }
    }
  }

  const clusters = doc.clusters as Record<string, unknown> | undefined;
  if (typeof clusters !== "object" || clusters === null) {
    problems.push("$.clusters: missing object");
  } else {
    if (!isMatrix(clusters.centroids)) {
      problems.push("$.clusters.centroids: missing numeric matrix");
    }
    for (const key of CLUSTER_FIELDS.slice(1)) {
      if (!isNumberArray(clusters[key])) {
        problems.push(`$.clusters.${key}: missing numeric array`);
      }
    }
  }

  const model = doc.model as Record<string, unknown> | undefined;
  if (typeof model !== "object" || model === null) {
    problems.push("$.model: missing object");
  } else {
    for (const key of ["p", "r", "l", "counts"]) {
      if (!isMatrix(model[key])) {
        problems.push(`$.model.${key}: missing numeric matrix`);
      }
    }
    for (const key of ["v", "absorbing"]) {
      if (!isNumberArray(model[key])) {
        problems.push(`$.model.${key}: missing numeric array`);
      }
    }
  }

  const greedy = doc.greedy as Record<string, unknown> | undefined;
  if (typeof greedy !== "object" || greedy === null || !isNumberArray(greedy.choice)) {
    problems.push("$.greedy.choice: missing numeric array");
  }

  if (!Array.isArray(doc.grid)) {
    problems.push("$.grid: missing array");
  }

  if (problems.length > 0) {
    return problems;
  }

  // cross-field consistency: every column covers all n records
  const d = raw as ExportDocument;
  for (const key of RECORD_FIELDS) {
    if (d.records[key].length !== d.meta.n) {
      problems.push(`$.records.${key}: length ${d.records[key].length} != meta.n ${d.meta.n}`);
    }
  }
  for (const key of CLUSTER_FIELDS) {
    if (d.clusters[key].length !== d.meta.k) {
      problems.push(`$.clusters.${key}: length ${d.clusters[key].length} != meta.k ${d.meta.k}`);
    }
  }
  if (d.model.p.length !== d.meta.k) {
    problems.push(`$.model.p: ${d.model.p.length} rows != meta.k ${d.meta.k}`);
  }
  return problems;
}

/** Parse a JSON string into a validated document or throw with the report. */
export function parseDocument(text: string): ExportDocument {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new Error(`not valid JSON: ${(e as Error).message}`);
  }
  const problems = validateDocument(raw);
  if (problems.length > 0) {
    throw new Error(`invalid export document:\n${problems.join("\n")}`);
  }
  return raw as ExportDocument;
}

/** Skill edges present in the model: entries with observed transitions. */
export function skillEdges(doc: ExportDocument): { from: number; to: number }[] {
  const edges: { from: number; to: number }[] = [];
  const k = doc.meta.k;
  for (let i = 0; i < k; i++) {
    for (let j = 0; j < k; j++) {
      if (i !== j && doc.model.counts[i][j] > 0) {
        edges.push({ from: i, to: j });
      }
    }
  }
  return edges;
}
