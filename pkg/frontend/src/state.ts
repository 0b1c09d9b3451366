/**
 * Explorer interaction state: current selection, coloring mode, cluster
 * filter, and the trajectory stepping rules. All transitions are pure
 * functions of (state, input); the document itself is never mutated.
 */

import { ExportDocument } from "./document.js";

/** Coloring modes enumerate exactly the exported per-record metadata fields. */
export const COLOR_MODES = ["cluster", "value", "reward", "t", "traj_id"] as const;
export type ColorMode = (typeof COLOR_MODES)[number];

export type StepDirection = "forward" | "backward";

export interface ExplorerState {
  doc: ExportDocument;
  /** index into the record columns, or null before the first click */
  selection: number | null;
  colorMode: ColorMode;
  /** show only this cluster's points (hides, never deletes); null = all */
  clusterFilter: number | null;
  /** set when the last step hit a trajectory boundary */
  atBoundary: boolean;
  /** skill edge traversed by the last step, for graph highlighting */
  traversedEdge: { from: number; to: number } | null;
}

export function initialState(doc: ExportDocument): ExplorerState {
  return {
    doc,
    selection: null,
    colorMode: "cluster",
    clusterFilter: null,
    atBoundary: false,
    traversedEdge: null,
  };
}

export function selectRecord(state: ExplorerState, index: number): ExplorerState {
  if (index < 0 || index >= state.doc.meta.n) {
    throw new Error(`record index ${index} out of range`);
  }
  return { ...state, selection: index, atBoundary: false, traversedEdge: null };
}

export function setColorMode(state: ExplorerState, mode: ColorMode): ExplorerState {
  return { ...state, colorMode: mode };
}

export function setClusterFilter(state: ExplorerState, cluster: number | null): ExplorerState {
  return { ...state, clusterFilter: cluster };
}

/**
 * Move the selection one step along its trajectory.
 *
 * Records are stored in trajectory blocks ordered by time, so the
 * neighbor record sits at index +-1 when it belongs to the same
 * trajectory. At a boundary the selection is unchanged and the boundary
 * flag is raised. Crossing into another cluster reports the traversed
 * skill edge.
 */
export function step(state: ExplorerState, direction: StepDirection): ExplorerState {
  if (state.selection === null) {
    return state;
  }
  const i = state.selection;
  const j = direction === "forward" ? i + 1 : i - 1;
  const ids = state.doc.records.traj_id;
  if (j < 0 || j >= state.doc.meta.n || ids[j] !== ids[i]) {
    return { ...state, atBoundary: true, traversedEdge: null };
  }
  const clusters = state.doc.records.cluster;
  let traversedEdge: ExplorerState["traversedEdge"] = null;
  if (clusters[j] !== clusters[i]) {
    traversedEdge =
      direction === "forward"
        ? { from: clusters[i], to: clusters[j] }
        : { from: clusters[j], to: clusters[i] };
  }
  return { ...state, selection: j, atBoundary: false, traversedEdge };
}

/** Indices of records visible under the active cluster filter. */
export function visibleIndices(state: ExplorerState): number[] {
  const n = state.doc.meta.n;
  if (state.clusterFilter === null) {
    return Array.from({ length: n }, (_, i) => i);
  }
  const out: number[] = [];
  const clusters = state.doc.records.cluster;
  for (let i = 0; i < n; i++) {
    if (clusters[i] === state.clusterFilter) {
      out.push(i);
    }
  }
  return out;
}

/** The metadata column driving the active coloring mode. */
export function colorValues(state: ExplorerState): number[] {
  return state.doc.records[state.colorMode];
}
