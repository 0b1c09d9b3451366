// @vitest-environment jsdom
/**
 * Scripted interaction test against the gridworld export fixture: load,
 * count rendered points and graph nodes, click-inspect a record, step
 * forward/backward along its trajectory, color and filter.
 */

import { readFileSync } from "node:fs";
import { beforeEach, describe, expect, it } from "vitest";

import { parseDocument } from "../src/document.js";
import { ExplorerApp, AppElements } from "../src/main.js";
import { Canvas2D, makeTransform } from "../src/scatter.js";

const fixtureText = readFileSync("fixtures/gridworld-export.json", "utf8");
const fixture = parseDocument(fixtureText);

class RecordingContext implements Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  arcs: { x: number; y: number; r: number; fill: string }[] = [];
  clears = 0;
  private pending: { x: number; y: number; r: number } | null = null;

  clearRect(): void {
    this.clears++;
    this.arcs = [];
  }
  beginPath(): void {
    this.pending = null;
  }
  arc(x: number, y: number, r: number): void {
    this.pending = { x, y, r };
  }
  fill(): void {
    if (this.pending) {
      this.arcs.push({ ...this.pending, fill: String(this.fillStyle) });
    }
  }
  stroke(): void {}
}

function makeApp(): { app: ExplorerApp; ctx: RecordingContext; elements: AppElements } {
  const canvas = document.createElement("canvas");
  canvas.width = 720;
  canvas.height = 560;
  const elements: AppElements = {
    canvas,
    graphHost: document.createElement("div"),
    detailHost: document.createElement("div"),
    statusHost: document.createElement("span"),
    modeSelect: document.createElement("select"),
    filterSelect: document.createElement("select"),
  };
  const ctx = new RecordingContext();
  return { app: new ExplorerApp(elements, ctx), ctx, elements };
}

describe("scripted interaction", () => {
  let app: ExplorerApp;
  let ctx: RecordingContext;
  let elements: AppElements;

  beforeEach(() => {
    ({ app, ctx, elements } = makeApp());
    app.loadText(fixtureText);
  });

  it("renders every record as a scatter point", () => {
    expect(app.pointsDrawn).toBe(fixture.meta.n);
    expect(ctx.arcs.length).toBe(fixture.meta.n);
  });

  it("renders one graph node per cluster with labeled skill edges", () => {
    const nodes = elements.graphHost.querySelectorAll('[data-role="cluster-node"]');
    expect(nodes.length).toBe(fixture.meta.k);
    const labels = elements.graphHost.querySelectorAll('[data-role="skill-label"]');
    expect(labels.length).toBeGreaterThan(0);
    expect(labels[0].textContent).toMatch(/p=.* r=.* k=/);
  });

  it("click-inspect shows exactly the clicked record's metadata", () => {
    const index = 42;
    const transform = makeTransform(fixture.records.x, fixture.records.y, 720, 560);
    const [px, py] = transform.toPixel(fixture.records.x[index], fixture.records.y[index]);
    app.clickAt(px, py);
    const state = app.currentState!;
    expect(state.selection).not.toBeNull();
    const i = state.selection!;
    // the clicked point is the nearest one; it must carry identical coordinates
    expect(fixture.records.x[i]).toBe(fixture.records.x[index]);
    expect(fixture.records.y[i]).toBe(fixture.records.y[index]);

    const get = (field: string) =>
      elements.detailHost.querySelector(`dd[data-field="${field}"]`)!.textContent;
    expect(get("traj_id")).toBe(String(fixture.records.traj_id[i]));
    expect(get("t")).toBe(String(fixture.records.t[i]));
    expect(get("cluster")).toBe(String(fixture.records.cluster[i]));
    expect(Number(get("value"))).toBeCloseTo(fixture.records.value[i], 5);
    expect(Number(get("reward"))).toBeCloseTo(fixture.records.reward[i], 5);
  });

  it("F/W and B/W stepping matches trajectory order", () => {
    // an interior record: at least 3 steps from the start, one from the end
    const ids = fixture.records.traj_id;
    const start = ids.findIndex(
      (id, i) => fixture.records.t[i] >= 3 && i + 1 < ids.length && ids[i + 1] === id,
    );
    app.selectIndex(start);
    const id = fixture.records.traj_id[start];
    const t0 = fixture.records.t[start];

    app.stepForward();
    let s = app.currentState!;
    expect(fixture.records.traj_id[s.selection!]).toBe(id);
    expect(fixture.records.t[s.selection!]).toBe(t0 + 1);

    app.stepBackward();
    s = app.currentState!;
    expect(s.selection).toBe(start);
    expect(fixture.records.t[s.selection!]).toBe(t0);

    // walk back to t=0; one more step stays put and reports the boundary
    for (let t = t0; t > 0; t--) {
      app.stepBackward();
    }
    s = app.currentState!;
    expect(fixture.records.t[s.selection!]).toBe(0);
    app.stepBackward();
    s = app.currentState!;
    expect(fixture.records.t[s.selection!]).toBe(0);
    expect(s.atBoundary).toBe(true);
    expect(elements.statusHost.textContent).toContain("boundary");
  });

  it("stepping across a cluster change highlights the traversed edge", () => {
    const clusters = fixture.records.cluster;
    const ids = fixture.records.traj_id;
    let idx = -1;
    for (let i = 0; i + 1 < fixture.meta.n; i++) {
      if (ids[i] === ids[i + 1] && clusters[i] !== clusters[i + 1]) {
        idx = i;
        break;
      }
    }
    app.selectIndex(idx);
    app.stepForward();
    const highlighted = elements.graphHost.querySelector('[data-highlighted="true"]');
    expect(highlighted).not.toBeNull();
    expect(highlighted!.getAttribute("data-from")).toBe(String(clusters[idx]));
    expect(highlighted!.getAttribute("data-to")).toBe(String(clusters[idx + 1]));
  });

  it("color modes cover the exported metadata fields and re-render all points", () => {
    const modes = Array.from(elements.modeSelect.options).map((o) => o.value);
    expect(modes).toEqual(["cluster", "value", "reward", "t", "traj_id"]);
    for (const mode of ["value", "reward", "t", "traj_id"] as const) {
      app.setMode(mode);
      expect(app.pointsDrawn).toBe(fixture.meta.n);
    }
  });

  it("filtering hides points but keeps the document intact", () => {
    app.setFilter(0);
    const expected = fixture.records.cluster.filter((c) => c === 0).length;
    expect(app.pointsDrawn).toBe(expected);
    app.setFilter(null);
    expect(app.pointsDrawn).toBe(fixture.meta.n);
  });

  it("a schema violation produces a visible report and no render", () => {
    const raw = JSON.parse(fixtureText);
    delete raw.model.p;
    app.loadText(JSON.stringify(raw));
    expect(app.currentState).toBeNull();
    expect(app.pointsDrawn).toBe(0);
    expect(elements.statusHost.getAttribute("data-error")).toBe("true");
    expect(elements.statusHost.textContent).toContain("$.model.p");
    expect(elements.graphHost.children.length).toBe(0);
  });
});
