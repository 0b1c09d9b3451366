/**
 * Point coloring: a heat map for continuous fields (blue = low,
 * red = high) and a categorical palette for cluster indices.
 */

export const CATEGORICAL = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b",
];

export function categoricalColor(index: number): string {
  return CATEGORICAL[((index % CATEGORICAL.length) + CATEGORICAL.length) % CATEGORICAL.length];
}

/** Map t in [0, 1] onto blue -> cyan -> yellow -> red. */
export function heatColor(t: number): string {
  const x = Math.max(0, Math.min(1, t));
  const stops: [number, [number, number, number]][] = [
    [0.0, [42, 70, 180]],
    [0.35, [60, 180, 200]],
    [0.7, [235, 210, 80]],
    [1.0, [200, 40, 40]],
  ];
  for (let s = 0; s < stops.length - 1; s++) {
    const [t0, c0] = stops[s];
    const [t1, c1] = stops[s + 1];
    if (x <= t1) {
      const u = t1 === t0 ? 0 : (x - t0) / (t1 - t0);
      const rgb = c0.map((v, ch) => Math.round(v + u * (c1[ch] - v)));
      return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
    }
  }
  return "rgb(200,40,40)";
}

/** Per-point colors for a metadata column; categorical when discrete. */
export function colorsFor(values: number[], categorical: boolean): string[] {
  if (categorical) {
    return values.map((v) => categoricalColor(v));
  }
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const span = hi - lo;
  if (span <= 0) {
    return values.map(() => heatColor(0.5));
  }
  return values.map((v) => heatColor((v - lo) / span));
}
