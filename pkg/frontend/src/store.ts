/** Dashboard state: latest-value cache mirroring the engine plus chart
 * history, with optimistic writes that roll back on failure. */

import { HistoryBuffer } from "./history";
import { HistoryChannel, ROOM_IDS, RoomView, StreamRecord, VarsResponse } from "./types";
import { roomViews, varName } from "./varmap";

export type PostFn = (name: string, value: number) => Promise<unknown>;

export class DashboardStore {
  private vars: VarsResponse = {};
  private history = new Map<string, HistoryBuffer>();
  private listeners: Array<() => void> = [];

  constructor(private retentionUs?: number) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  private bufferFor(name: string): HistoryBuffer {
    let buffer = this.history.get(name);
    if (buffer === undefined) {
      buffer = new HistoryBuffer(this.retentionUs);
      this.history.set(name, buffer);
    }
    return buffer;
  }

  applySnapshot(snapshot: VarsResponse): void {
    for (const [name, record] of Object.entries(snapshot)) {
      const cached = this.vars[name];
      if (cached !== undefined && record.seq <= cached.seq) {
        continue;
      }
      this.vars[name] = record;
      this.bufferFor(name).append(record.timestamp_us, record.value);
    }
    this.notify();
  }

  applyRecord(record: StreamRecord): boolean {
    const cached = this.vars[record.name];
    if (cached !== undefined && record.seq <= cached.seq) {
      return false;
    }
    this.vars[record.name] = {
      value: record.value,
      timestamp_us: record.timestamp_us,
      seq: record.seq,
    };
    this.bufferFor(record.name).append(record.timestamp_us, record.value);
    this.notify();
    return true;
  }

  get(name: string): number | undefined {
    return this.vars[name]?.value;
  }

  historyOf(room: number, channel: HistoryChannel): HistoryBuffer {
    return this.bufferFor(varName(room, channel));
  }

  rooms(nowUs: number): RoomView[] {
    return roomViews(this.vars, nowUs);
  }

  get variableCount(): number {
    return Object.keys(this.vars).length;
  }

  /** Optimistic write: the UI shows the new value immediately, the next
   * streamed echo confirms it, and a failed POST restores the old value. */
  async write(name: string, value: number, post: PostFn): Promise<void> {
    const previous = this.vars[name];
    const optimistic = {
      value,
      timestamp_us: previous?.timestamp_us ?? 0,
      seq: previous?.seq ?? 0,
    };
    this.vars[name] = optimistic;
    this.notify();
    try {
      await post(name, value);
    } catch (error) {
      if (previous === undefined) {
        delete this.vars[name];
      } else {
        this.vars[name] = previous;
      }
      this.notify();
      throw error;
    }
  }
}

/** True once every room has all seven live variables, matching the
 * gateway's published name set (21 variables for three rooms). */
export function fullyPopulated(store: DashboardStore): boolean {
  const channels = ["temperature", "humidity", "light", "battery",
                    "heat_on", "cool_on", "light_on"];
  return ROOM_IDS.every((room) =>
    channels.every((channel) => store.get(varName(room, channel)) !== undefined));
}
