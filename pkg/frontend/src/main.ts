/**
 * Explorer application: wires the document loader, scatter canvas,
 * coloring/filter controls, F/W-B/W stepping, detail panel, and the
 * model graph. The app never mutates the loaded document; every
 * interaction produces a new state and re-renders.
 *
 * The canvas 2D context is injectable so the scripted interaction tests
 * can run against a recording fake under jsdom.
 */

import { ExportDocument, parseDocument } from "./document.js";
import { clusterDetails, recordDetails, renderDetails } from "./detail.js";
import { buildGraph } from "./graph.js";
import { Canvas2D, ScatterResult, drawScatter, hitTest } from "./scatter.js";
import {
  COLOR_MODES,
  ColorMode,
  ExplorerState,
  initialState,
  selectRecord,
  setClusterFilter,
  setColorMode,
  step,
} from "./state.js";

export interface AppElements {
  canvas: HTMLCanvasElement;
  graphHost: HTMLElement;
  detailHost: HTMLElement;
  statusHost: HTMLElement;
  modeSelect: HTMLSelectElement;
  filterSelect: HTMLSelectElement;
}

export class ExplorerApp {
  private state: ExplorerState | null = null;
  private lastScatter: ScatterResult | null = null;
  private readonly ctx: Canvas2D;

  constructor(
    private readonly elements: AppElements,
    context?: Canvas2D,
  ) {
    this.ctx = context ?? (elements.canvas.getContext("2d") as unknown as Canvas2D);
  }

  /** Parse and load a document; a validation failure renders nothing. */
  loadText(text: string): void {
    let doc: ExportDocument;
    try {
      doc = parseDocument(text);
    } catch (e) {
      this.state = null;
      this.lastScatter = null;
      this.elements.graphHost.replaceChildren();
      this.elements.detailHost.replaceChildren();
      this.setStatus((e as Error).message, true);
      return;
    }
    this.state = initialState(doc);
    this.populateControls(doc);
    this.setStatus(
      `loaded ${doc.meta.n} records, ${doc.meta.n_trajectories} trajectories, ` +
      `K=${doc.meta.k}, w=${doc.meta.w}`,
      false,
    );
    this.render();
  }

  get currentState(): ExplorerState | null {
    return this.state;
  }

  get pointsDrawn(): number {
    return this.lastScatter?.pointsDrawn ?? 0;
  }

  clickAt(px: number, py: number): void {
    if (this.state === null || this.lastScatter === null) {
      return;
    }
    const hit = hitTest(this.state, this.lastScatter.transform, px, py);
    if (hit !== null) {
      this.state = selectRecord(this.state, hit);
      this.render();
    }
  }

  selectIndex(index: number): void {
    if (this.state === null) {
      return;
    }
    this.state = selectRecord(this.state, index);
    this.render();
  }

  stepForward(): void {
    this.applyStep("forward");
  }

  stepBackward(): void {
    this.applyStep("backward");
  }

  setMode(mode: ColorMode): void {
    if (this.state === null) {
      return;
    }
    this.state = setColorMode(this.state, mode);
    this.render();
  }

  setFilter(cluster: number | null): void {
    if (this.state === null) {
      return;
    }
    this.state = setClusterFilter(this.state, cluster);
    this.render();
  }

  private applyStep(direction: "forward" | "backward"): void {
    if (this.state === null) {
      return;
    }
    this.state = step(this.state, direction);
    this.render();
    if (this.state.atBoundary) {
      this.setStatus("at trajectory boundary", false);
    }
  }

  private populateControls(doc: ExportDocument): void {
    const { modeSelect, filterSelect } = this.elements;
    modeSelect.replaceChildren();
    for (const mode of COLOR_MODES) {
      const option = modeSelect.ownerDocument.createElement("option");
      option.value = mode;
      option.textContent = mode;
      modeSelect.appendChild(option);
    }
    filterSelect.replaceChildren();
    const all = filterSelect.ownerDocument.createElement("option");
    all.value = "";
    all.textContent = "all clusters";
    filterSelect.appendChild(all);
    for (let i = 0; i < doc.meta.k; i++) {
      const option = filterSelect.ownerDocument.createElement("option");
      option.value = String(i);
      option.textContent = `cluster ${i}`;
      filterSelect.appendChild(option);
    }
  }

  private render(): void {
    if (this.state === null) {
      return;
    }
    const { canvas, graphHost, detailHost } = this.elements;
    this.lastScatter = drawScatter(this.ctx, this.state, canvas.width, canvas.height);

    graphHost.replaceChildren(
      buildGraph(graphHost.ownerDocument, this.state.doc, {
        width: 420,
        height: 420,
        highlight: this.state.traversedEdge,
      }),
    );

    detailHost.replaceChildren();
    if (this.state.selection !== null) {
      renderDetails(
        detailHost,
        recordDetails(this.state.doc, this.state.selection),
        "selected state",
      );
      const cluster = this.state.doc.records.cluster[this.state.selection];
      renderDetails(detailHost, clusterDetails(this.state.doc, cluster), "its cluster");
    } else {
      const hint = detailHost.ownerDocument.createElement("p");
      hint.textContent = "click a point to inspect it";
      detailHost.appendChild(hint);
    }
  }

  private setStatus(message: string, isError: boolean): void {
    const host = this.elements.statusHost;
    host.textContent = message;
    host.setAttribute("data-error", isError ? "true" : "false");
  }
}

/** Browser entry point: bind the app to the static page. */
export function bootstrap(doc: Document): ExplorerApp {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = doc.getElementById(id);
    if (el === null) {
      throw new Error(`missing element #${id}`);
    }
    return el as T;
  };
  const app = new ExplorerApp({
    canvas: byId<HTMLCanvasElement>("scatter"),
    graphHost: byId("graph"),
    detailHost: byId("detail"),
    statusHost: byId("status"),
    modeSelect: byId<HTMLSelectElement>("color-mode"),
    filterSelect: byId<HTMLSelectElement>("cluster-filter"),
  });

  byId<HTMLInputElement>("file-input").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file) {
      app.loadText(await file.text());
    }
  });
  byId<HTMLCanvasElement>("scatter").addEventListener("click", (event) => {
    const rect = (event.target as HTMLCanvasElement).getBoundingClientRect();
    app.clickAt(event.clientX - rect.left, event.clientY - rect.top);
  });
  byId("step-forward").addEventListener("click", () => app.stepForward());
  byId("step-backward").addEventListener("click", () => app.stepBackward());
  byId<HTMLSelectElement>("color-mode").addEventListener("change", (event) => {
    app.setMode((event.target as HTMLSelectElement).value as ColorMode);
  });
  byId<HTMLSelectElement>("cluster-filter").addEventListener("change", (event) => {
    const value = (event.target as HTMLSelectElement).value;
    app.setFilter(value === "" ? null : Number(value));
  });
  return app;
}
