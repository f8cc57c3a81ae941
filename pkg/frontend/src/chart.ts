/** Dependency-free SVG line charts: pure functions from history points to
 * polyline coordinates, so the scaling math is unit-testable. */

import { HistoryPoint } from "./history";

export interface ChartScale {
  minValue: number;
  maxValue: number;
  minTimeUs: number;
  maxTimeUs: number;
}

export function computeScale(points: readonly HistoryPoint[], pad = 0.1): ChartScale {
  if (points.length === 0) {
    return { minValue: 0, maxValue: 1, minTimeUs: 0, maxTimeUs: 1 };
  }
  let minValue = Infinity;
  let maxValue = -Infinity;
  for (const p of points) {
    minValue = Math.min(minValue, p.value);
    maxValue = Math.max(maxValue, p.value);
  }
  if (minValue === maxValue) {
    minValue -= 1;
    maxValue += 1;
  } else {
    const span = maxValue - minValue;
    minValue -= span * pad;
    maxValue += span * pad;
  }
  const minTimeUs = points[0].timestampUs;
  const maxTimeUs = Math.max(points[points.length - 1].timestampUs, minTimeUs + 1);
  return { minValue, maxValue, minTimeUs, maxTimeUs };
}

export function polylinePoints(points: readonly HistoryPoint[], width: number,
                               height: number, scale?: ChartScale): string {
  if (points.length === 0) {
    return "";
  }
  const s = scale ?? computeScale(points);
  const coords: string[] = [];
  for (const p of points) {
    const x = ((p.timestampUs - s.minTimeUs) / (s.maxTimeUs - s.minTimeUs)) * width;
    const y = height - ((p.value - s.minValue) / (s.maxValue - s.minValue)) * height;
    coords.push(`${x.toFixed(1)},${y.toFixed(1)}`);
  }
  return coords.join(" ");
}

export function chartSvg(series: Array<{ label: string; color: string;
                                         points: readonly HistoryPoint[] }>,
                         width = 640, height = 180): string {
  const all = series.flatMap((s) => [...s.points]);
  const scale = computeScale(all);
  const lines = series
    .filter((s) => s.points.length > 0)
    .map((s) =>
      `<polyline fill="none" stroke="${s.color}" stroke-width="1.5" ` +
      `points="${polylinePoints(s.points, width, height, scale)}"><title>${s.label}</title></polyline>`)
    .join("");
  const labels =
    `<text x="4" y="12" class="chart-label">${scale.maxValue.toFixed(1)}</text>` +
    `<text x="4" y="${height - 4}" class="chart-label">${scale.minValue.toFixed(1)}</text>`;
  return `<svg viewBox="0 0 ${width} ${height}" preserveAspectRatio="none" ` +
    `class="chart">${lines}${labels}</svg>`;
}
