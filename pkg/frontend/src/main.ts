/** Dashboard entry point: wires the store, bridge client and renderers to
 * the page. Live tiles on top, history tabs (temperature/humidity/light)
 * below, control panel last. */

import { BridgeClient, ReconnectingStream } from "./bridge-client";
import { chartSvg } from "./chart";
import { controlTableHtml, tilesHtml } from "./render";
import { DashboardStore } from "./store";
import { HISTORY_CHANNELS, HistoryChannel, ROOM_IDS } from "./types";
import { validateSetpoint, validateThreshold } from "./validation";
import { varName } from "./varmap";

const ROOM_COLORS = ["#d9472b", "#2b7bd9", "#3c9d4e"];
const CHANNEL_UNITS: Record<HistoryChannel, string> = {
  temperature: "°C",
  humidity: "%RH",
  light: "lux",
};

function nowUs(): number {
  return Date.now() * 1000;
}

function byId(id: string): HTMLElement {
  const element = document.getElementById(id);
  if (element === null) {
    throw new Error(`missing #${id}`);
  }
  return element;
}

async function start(): Promise<void> {
  const base = `${location.protocol}//${location.host}`;
  const client = new BridgeClient(base, (url, init) => fetch(url, init));
  const store = new DashboardStore();
  let activeTab: HistoryChannel = "temperature";

  const banner = byId("banner");
  const tiles = byId("tiles");
  const chart = byId("chart");
  const tabs = byId("tabs");
  const panel = byId("control-panel");

  function renderTiles(): void {
    tiles.innerHTML = tilesHtml(store.rooms(nowUs()));
  }

  function renderChart(): void {
    const series = ROOM_IDS.map((room, i) => ({
      label: `Room ${room}`,
      color: ROOM_COLORS[i],
      points: store.historyOf(room, activeTab).all,
    }));
    chart.innerHTML =
      `<h3>${activeTab} (${CHANNEL_UNITS[activeTab]}, last 24 h)</h3>` +
      chartSvg(series);
  }

  function renderPanel(): void {
    panel.innerHTML = controlTableHtml(store.rooms(nowUs()));
  }

  function renderAll(): void {
    renderTiles();
    renderChart();
  }

  tabs.innerHTML = HISTORY_CHANNELS
    .map((channel) => `<button data-tab="${channel}">${channel}</button>`)
    .join("");
  tabs.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const tab = target.dataset.tab as HistoryChannel | undefined;
    if (tab !== undefined) {
      activeTab = tab;
      renderChart();
    }
  });

  panel.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const room = target.dataset.apply;
    if (room === undefined) {
      return;
    }
    const errorSlot = panel.querySelector(`[data-error="${room}"]`) as HTMLElement;
    errorSlot.textContent = "";
    for (const field of ["setpoint", "light_threshold"] as const) {
      const input = panel.querySelector(
        `input[data-field="${field}"][data-room="${room}"]`) as HTMLInputElement;
      const value = Number(input.value);
      const check = field === "setpoint"
        ? validateSetpoint(value) : validateThreshold(value);
      if (!check.ok) {
        errorSlot.textContent = `${field}: ${check.message}`;
        renderPanel();  // restore the previous value
        return;
      }
      try {
        await store.write(varName(Number(room), field), value,
                          (name, v) => client.postVar(name, v));
      } catch (error) {
        errorSlot.textContent = `${field}: ${String(error)}`;
        renderPanel();
        return;
      }
    }
  });

  store.onChange(renderTiles);

  try {
    store.applySnapshot(await client.fetchSnapshot());
    banner.hidden = true;
  } catch (error) {
    banner.hidden = false;
    banner.textContent = "bridge unreachable, retrying…";
  }
  renderAll();
  renderPanel();

  const wsUrl = base.replace(/^http/, "ws") + "/api/stream";
  const stream = new ReconnectingStream(wsUrl, (url) => new WebSocket(url));
  stream.onRecord = (record) => {
    store.applyRecord(record);
    renderChart();
  };
  stream.onStatus = (connected) => {
    banner.hidden = connected;
    if (!connected) {
      banner.textContent = "stream disconnected, reconnecting…";
    } else {
      // pick up anything missed while the socket was down
      client.fetchSnapshot().then((snapshot) => store.applySnapshot(snapshot))
        .catch(() => undefined);
    }
  };
  stream.connect();

  // periodic re-render keeps staleness badges honest between updates
  setInterval(renderTiles, 1000);
}

window.addEventListener("load", () => {
  void start();
});
