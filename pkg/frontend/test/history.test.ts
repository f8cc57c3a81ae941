import { describe, expect, it } from "vitest";

import { HistoryBuffer } from "../src/history";

describe("HistoryBuffer", () => {
  it("appends in nondecreasing timestamp order", () => {
    const buffer = new HistoryBuffer();
    expect(buffer.append(100, 1.0)).toBe(true);
    expect(buffer.append(100, 1.5)).toBe(true); // equal timestamps allowed
    expect(buffer.append(200, 2.0)).toBe(true);
    expect(buffer.append(150, 9.9)).toBe(false); // out of order, dropped
    expect(buffer.all.map((p) => p.timestampUs)).toEqual([100, 100, 200]);
  });

  it("keeps only the retention window", () => {
    const buffer = new HistoryBuffer(1000);
    buffer.append(0, 1);
    buffer.append(500, 2);
    buffer.append(1600, 3); // horizon 600: both earlier points roll off
    expect(buffer.all.map((p) => p.value)).toEqual([3]);
    buffer.append(2600, 4); // exactly at the horizon: kept
    expect(buffer.all.map((p) => p.value)).toEqual([3, 4]);
    buffer.append(10_000, 5);
    expect(buffer.all.map((p) => p.value)).toEqual([5]);
  });

  it("exposes the latest point", () => {
    const buffer = new HistoryBuffer();
    expect(buffer.latest).toBeUndefined();
    buffer.append(5, 42);
    expect(buffer.latest).toEqual({ timestampUs: 5, value: 42 });
    expect(buffer.length).toBe(1);
  });

  it("handles a day of 10-second samples within the default window", () => {
    const buffer = new HistoryBuffer();
    const dayUs = 24 * 3600 * 1_000_000;
    for (let t = 0; t <= dayUs; t += 10_000_000) {
      buffer.append(t, Math.sin(t / 1e9));
    }
    expect(buffer.length).toBe(8641);
    buffer.append(dayUs + 10_000_000, 0);
    expect(buffer.length).toBe(8641); // oldest point rolled off
    expect(buffer.all[0].timestampUs).toBe(10_000_000);
  });
});
