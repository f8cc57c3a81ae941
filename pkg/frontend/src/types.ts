/** JSON shapes exchanged with the bridge. */

export interface VarJson {
  value: number;
  timestamp_us: number;
  seq: number;
}

export type VarsResponse = Record<string, VarJson>;

export interface StreamRecord extends VarJson {
  name: string;
}

/** One sampled value with the timestamp of the underlying shared variable. */
export interface Reading {
  value: number;
  timestampUs: number;
}

export interface RoomView {
  room: number;
  temperature?: Reading;
  humidity?: Reading;
  light?: Reading;
  battery?: Reading;
  heatOn?: boolean;
  coolOn?: boolean;
  lightOn?: boolean;
  setpoint?: Reading;
  lightThreshold?: Reading;
  /** No data yet, or the newest reading is older than the staleness horizon. */
  stale: boolean;
}

export const ROOM_IDS = [1, 2, 3] as const;

export const HISTORY_CHANNELS = ["temperature", "humidity", "light"] as const;
export type HistoryChannel = (typeof HISTORY_CHANNELS)[number];
