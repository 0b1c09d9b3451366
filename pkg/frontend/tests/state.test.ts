import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { parseDocument } from "../src/document.js";
import {
  initialState,
  selectRecord,
  setClusterFilter,
  step,
  visibleIndices,
} from "../src/state.js";

const doc = parseDocument(
  readFileSync("fixtures/gridworld-export.json", "utf8"),
);

describe("trajectory stepping", () => {
  it("forward then backward returns to the original selection", () => {
    let s = selectRecord(initialState(doc), 10);
    s = step(s, "forward");
    s = step(s, "backward");
    expect(s.selection).toBe(10);
  });

  it("stays put at t=0 going backward and raises the boundary flag", () => {
    const first = doc.records.t.indexOf(0);
    let s = selectRecord(initialState(doc), first);
    s = step(s, "backward");
    expect(s.selection).toBe(first);
    expect(s.atBoundary).toBe(true);
  });

  it("never crosses into another trajectory", () => {
    // walk a full trajectory forward; the id must never change
    const start = doc.records.traj_id.findIndex((id) => id === doc.records.traj_id[0]);
    let s = selectRecord(initialState(doc), start);
    const id = doc.records.traj_id[start];
    for (let i = 0; i < doc.meta.n; i++) {
      s = step(s, "forward");
      expect(doc.records.traj_id[s.selection!]).toBe(id);
      if (s.atBoundary) break;
    }
    expect(s.atBoundary).toBe(true);
  });

  it("reports the traversed skill edge on a cluster change", () => {
    const clusters = doc.records.cluster;
    const ids = doc.records.traj_id;
    let idx = -1;
    for (let i = 0; i + 1 < doc.meta.n; i++) {
      if (ids[i] === ids[i + 1] && clusters[i] !== clusters[i + 1]) {
        idx = i;
        break;
      }
    }
    expect(idx).toBeGreaterThanOrEqual(0);
    let s = selectRecord(initialState(doc), idx);
    s = step(s, "forward");
    expect(s.traversedEdge).toEqual({ from: clusters[idx], to: clusters[idx + 1] });
    // stepping back traverses the same skill edge (direction preserved)
    s = step(s, "backward");
    expect(s.traversedEdge).toEqual({ from: clusters[idx], to: clusters[idx + 1] });
  });
});

describe("filtering", () => {
  it("hides records without deleting them", () => {
    const s0 = initialState(doc);
    expect(visibleIndices(s0).length).toBe(doc.meta.n);
    const s1 = setClusterFilter(s0, 0);
    const visible = visibleIndices(s1);
    expect(visible.length).toBeLessThan(doc.meta.n);
    expect(visible.every((i) => doc.records.cluster[i] === 0)).toBe(true);
    // the document is untouched
    expect(s1.doc.records.cluster.length).toBe(doc.meta.n);
    const s2 = setClusterFilter(s1, null);
    expect(visibleIndices(s2).length).toBe(doc.meta.n);
  });

  it("rejects out-of-range selections", () => {
    expect(() => selectRecord(initialState(doc), doc.meta.n)).toThrow(/out of range/);
  });
});
