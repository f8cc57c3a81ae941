/** Per-variable chart history: append-only, nondecreasing timestamps,
 * bounded to a retention window (24 h by default). */

export interface HistoryPoint {
  timestampUs: number;
  value: number;
}

export const DEFAULT_RETENTION_US = 24 * 3600 * 1_000_000;

export class HistoryBuffer {
  private points: HistoryPoint[] = [];

  constructor(private retentionUs: number = DEFAULT_RETENTION_US) {}

  /** Appends in nondecreasing timestamp order; out-of-order points are
   * dropped so chart traces never fold back on themselves. */
  append(timestampUs: number, value: number): boolean {
    const last = this.points[this.points.length - 1];
    if (last !== undefined && timestampUs < last.timestampUs) {
      return false;
    }
    this.points.push({ timestampUs, value });
    const horizon = timestampUs - this.retentionUs;
    let drop = 0;
    while (drop < this.points.length - 1 && this.points[drop].timestampUs < horizon) {
      drop += 1;
    }
    if (drop > 0) {
      this.points.splice(0, drop);
    }
    return true;
  }

  get all(): readonly HistoryPoint[] {
    return this.points;
  }

  get length(): number {
    return this.points.length;
  }

  get latest(): HistoryPoint | undefined {
    return this.points[this.points.length - 1];
  }
}
