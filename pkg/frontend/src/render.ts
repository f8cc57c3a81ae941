/** HTML fragments for the room tiles and control panel. Pure string
 * builders so they are testable without a DOM. */

import { Reading, RoomView } from "./types";

function fmt(reading: Reading | undefined, digits: number, unit: string): string {
  if (reading === undefined) {
    return `<span class="missing">--</span>`;
  }
  return `${reading.value.toFixed(digits)}<span class="unit">${unit}</span>`;
}

function indicator(label: string, on: boolean | undefined): string {
  const state = on === undefined ? "unknown" : on ? "on" : "off";
  return `<span class="indicator ${state}" data-indicator="${label}">${label}</span>`;
}

export function tileHtml(view: RoomView): string {
  const badge = view.stale
    ? `<span class="badge stale">STALE</span>`
    : `<span class="badge live">LIVE</span>`;
  const timestamp = view.temperature
    ? new Date(view.temperature.timestampUs / 1000).toISOString()
    : "no data";
  return `
    <div class="tile${view.stale ? " tile-stale" : ""}" data-room="${view.room}">
      <header><h2>Room ${view.room}</h2>${badge}</header>
      <div class="readings">
        <div class="reading temperature">${fmt(view.temperature, 2, "°C")}</div>
        <div class="reading humidity">${fmt(view.humidity, 1, "%RH")}</div>
        <div class="reading light">${fmt(view.light, 0, "lux")}</div>
      </div>
      <div class="indicators">
        ${indicator("heat", view.heatOn)}
        ${indicator("cool", view.coolOn)}
        ${indicator("light", view.lightOn)}
      </div>
      <footer>
        <span class="battery">battery ${fmt(view.battery, 3, "V")}</span>
        <span class="timestamp" title="timestamp of the newest reading">${timestamp}</span>
      </footer>
    </div>`;
}

export function tilesHtml(views: RoomView[]): string {
  return views.map(tileHtml).join("\n");
}

export function controlRowHtml(view: RoomView): string {
  const setpoint = view.setpoint?.value;
  const threshold = view.lightThreshold?.value;
  return `
    <tr data-room="${view.room}">
      <td>Room ${view.room}</td>
      <td><input type="number" step="0.5" min="10" max="30"
                 data-field="setpoint" data-room="${view.room}"
                 value="${setpoint ?? ""}"> °C</td>
      <td><input type="number" step="10" min="0" max="2000"
                 data-field="light_threshold" data-room="${view.room}"
                 value="${threshold ?? ""}"> lux</td>
      <td><button data-apply="${view.room}">Apply</button>
          <span class="apply-error" data-error="${view.room}"></span></td>
    </tr>`;
}

export function controlTableHtml(views: RoomView[]): string {
  return `
    <table class="control-table">
      <thead><tr><th>Room</th><th>Setpoint</th><th>Light threshold</th><th></th></tr></thead>
      <tbody>${views.map(controlRowHtml).join("\n")}</tbody>
    </table>`;
}
