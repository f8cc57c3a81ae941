/** Mapping between the bridge's flat variable names and per-room views. */

import { Reading, RoomView, ROOM_IDS, VarJson, VarsResponse } from "./types";

/** A reading is considered stale once it is older than three 10 s periods. */
export const STALE_AFTER_US = 30_000_000;

export function varName(room: number, channel: string): string {
  return `room${room}.${channel}`;
}

function reading(vars: VarsResponse, name: string): Reading | undefined {
  const record: VarJson | undefined = vars[name];
  if (record === undefined) {
    return undefined;
  }
  return { value: record.value, timestampUs: record.timestamp_us };
}

function flag(vars: VarsResponse, name: string): boolean | undefined {
  const record = vars[name];
  return record === undefined ? undefined : record.value !== 0.0;
}

export function roomView(vars: VarsResponse, room: number, nowUs: number): RoomView {
  const view: RoomView = {
    room,
    temperature: reading(vars, varName(room, "temperature")),
    humidity: reading(vars, varName(room, "humidity")),
    light: reading(vars, varName(room, "light")),
    battery: reading(vars, varName(room, "battery")),
    heatOn: flag(vars, varName(room, "heat_on")),
    coolOn: flag(vars, varName(room, "cool_on")),
    lightOn: flag(vars, varName(room, "light_on")),
    setpoint: reading(vars, varName(room, "setpoint")),
    lightThreshold: reading(vars, varName(room, "light_threshold")),
    stale: true,
  };
  const newest = [view.temperature, view.humidity, view.light, view.battery]
    .filter((r): r is Reading => r !== undefined)
    .map((r) => r.timestampUs);
  if (newest.length > 0) {
    view.stale = nowUs - Math.max(...newest) > STALE_AFTER_US;
  }
  return view;
}

export function roomViews(vars: VarsResponse, nowUs: number): RoomView[] {
  return ROOM_IDS.map((room) => roomView(vars, room, nowUs));
}
