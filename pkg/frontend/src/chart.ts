/** Learning-curve geometry: metric history in, SVG polyline points out.
 * Pure math so the chart stays testable without a DOM. */
import type { MetricPoint } from './types.js';

export interface ChartGeometry {
  /** one polyline per split, keyed by split name */
  lines: Map<string, string>;
  maxEpoch: number;
  /** y-axis gridline positions for 0/25/50/75/100 */
  gridY: number[];
}

export interface ChartBox {
  width: number;
  height: number;
  padding: number;
}

export function f1Series(series: MetricPoint[], split: string): [number, number][] {
  return series
    .filter((p) => p.split === split)
    .sort((a, b) => a.epoch - b.epoch)
    .map((p) => [p.epoch, p.f1]);
}

export function toPoints(
  pairs: [number, number][],
  box: ChartBox,
  maxEpoch: number,
  maxValue = 100,
): string {
  const innerW = box.width - 2 * box.padding;
  const innerH = box.height - 2 * box.padding;
  const denom = Math.max(1, maxEpoch - 1);
  return pairs
    .map(([epoch, value]) => {
      const x = box.padding + ((epoch - 1) / denom) * innerW;
      const y = box.padding + (1 - value / maxValue) * innerH;
      return `${round2(x)},${round2(y)}`;
    })
    .join(' ');
}

export function chartGeometry(series: MetricPoint[], box: ChartBox): ChartGeometry {
  const splits = [...new Set(series.map((p) => p.split))].sort();
  const maxEpoch = series.reduce((m, p) => Math.max(m, p.epoch), 1);
  const lines = new Map<string, string>();
  for (const split of splits) {
    lines.set(split, toPoints(f1Series(series, split), box, maxEpoch));
  }
  const innerH = box.height - 2 * box.padding;
  const gridY = [0, 25, 50, 75, 100].map(
    (v) => round2(box.padding + (1 - v / 100) * innerH),
  );
  return { lines, maxEpoch, gridY };
}

const round2 = (x: number) => Math.round(x * 100) / 100;
