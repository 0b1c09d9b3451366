import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { parseDocument, skillEdges, validateDocument } from "../src/document.js";

const fixtureText = readFileSync("fixtures/gridworld-export.json", "utf8");

describe("document validation", () => {
  it("accepts the gridworld export fixture", () => {
    const doc = parseDocument(fixtureText);
    expect(doc.meta.n).toBeGreaterThan(0);
    expect(doc.records.x.length).toBe(doc.meta.n);
    expect(validateDocument(JSON.parse(fixtureText))).toEqual([]);
  });

  it("rejects a document missing the transition matrix, naming the field", () => {
    const raw = JSON.parse(fixtureText);
    delete raw.model.p;
    const problems = validateDocument(raw);
    expect(problems.some((p) => p.includes("$.model.p"))).toBe(true);
    expect(() => parseDocument(JSON.stringify(raw))).toThrow(/\$\.model\.p/);
  });

  it("rejects wrong format markers and non-JSON", () => {
    const raw = JSON.parse(fixtureText);
    raw.format = "something-else";
    expect(validateDocument(raw).some((p) => p.includes("$.format"))).toBe(true);
    expect(() => parseDocument("{oops")).toThrow(/not valid JSON/);
  });

  it("rejects column length mismatches against meta.n", () => {
    const raw = JSON.parse(fixtureText);
    raw.records.reward = raw.records.reward.slice(0, 5);
    expect(validateDocument(raw).some((p) => p.includes("$.records.reward"))).toBe(true);
  });

  it("lists one skill edge per observed transition", () => {
    const doc = parseDocument(fixtureText);
    const edges = skillEdges(doc);
    let expected = 0;
    for (let i = 0; i < doc.meta.k; i++) {
      for (let j = 0; j < doc.meta.k; j++) {
        if (i !== j && doc.model.counts[i][j] > 0) expected++;
      }
    }
    expect(edges.length).toBe(expected);
    expect(edges.every((e) => e.from !== e.to)).toBe(true);
  });
});
