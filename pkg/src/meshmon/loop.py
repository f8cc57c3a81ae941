"""Closed-loop wiring: simulator -> serial bytes -> gateway -> control ->
actuation back into the simulated rooms, with every converted reading and
actuator state published as shared variables.

All core components read an injected simulated clock (config start time
plus elapsed simulated seconds), so a 24-hour run is reproducible byte
for byte and finishes in seconds at speed 0.
"""

from __future__ import annotations

import json
import sys
import threading
import time
from dataclasses import replace
from pathlib import Path

from .config import AppConfig
from .control import ControlOutputs, ControlState, evaluate_room
from .gateway import Gateway
from .lvm import DEFAULT_CHANNELS, LvmWriter
from .sharedvar import SharedVarEngine
from .sim import Simulation, estimate_lifetime


class ClosedLoop:
    def __init__(self, config: AppConfig, seed: int | None = None,
                 lvm_path: str | Path | None = None,
                 stream_path: str | Path | None = None,
                 engine: SharedVarEngine | None = None):
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.epoch = config.sim.start_time.timestamp()
        self.sim = Simulation(config.sim, seed=self.seed)
        self.engine = engine if engine is not None else SharedVarEngine(clock=self.clock)
        self.gateway = Gateway(config.gateway, clock=self.clock,
                               publisher=self._publish)
        self.rooms = sorted(config.gateway.rooms)
        self.control_states = {room: ControlState() for room in self.rooms}
        self.last_outputs = {room: ControlOutputs() for room in self.rooms}
        self.mode_switches = {room: 0 for room in self.rooms}
        self.heat_seconds = {room: 0 for room in self.rooms}
        self.cool_seconds = {room: 0 for room in self.rooms}
        self.light_seconds = {room: 0 for room in self.rooms}
        self.coactivations = 0
        self.stale_events = 0
        self.stop_requested = threading.Event()
        self._lvm = LvmWriter(lvm_path, channels=DEFAULT_CHANNELS,
                              start_time=config.sim.start_time) if lvm_path else None
        if stream_path is None:
            self._stream = None
        elif str(stream_path) == "-":
            self._stream = sys.stdout.buffer
        else:
            self._stream = open(stream_path, "wb")
        self._publish_control_defaults()

    def clock(self) -> float:
        return self.epoch + self.sim.time

    def _publish(self, name: str, value: float, timestamp_us: int) -> None:
        self.engine.publish_value(name, value, timestamp_us=timestamp_us)

    def _publish_control_defaults(self) -> None:
        timestamp_us = int(self.clock() * 1_000_000)
        for room in self.rooms:
            self._publish(f"room{room}.setpoint", self.config.control.setpoint_c,
                          timestamp_us)
            self._publish(f"room{room}.light_threshold",
                          self.config.control.light_threshold_lux, timestamp_us)
            for channel in ("heat_on", "cool_on", "light_on"):
                self._publish(f"room{room}.{channel}", 0.0, timestamp_us)

    def _room_config(self, room: int):
        """Per-room control config with live setpoint/threshold overrides."""
        setpoint = self.engine.value(f"room{room}.setpoint",
                                     self.config.control.setpoint_c)
        threshold = self.engine.value(f"room{room}.light_threshold",
                                      self.config.control.light_threshold_lux)
        return replace(self.config.control, setpoint_c=setpoint,
                       light_threshold_lux=threshold)

    def _evaluate_controls(self) -> None:
        timestamp_us = int(self.clock() * 1_000_000)
        snapshot = self.gateway.snapshot()
        for room in self.rooms:
            state = snapshot[room]
            if state.reading is None:
                continue
            next_state, outputs = evaluate_room(
                state.reading.temperature_c, state.reading.light_lux,
                state.movement, self._room_config(room), self.control_states[room])
            if outputs.heat_on and outputs.cool_on:
                self.coactivations += 1
            if next_state.mode != self.control_states[room].mode:
                self.mode_switches[room] += 1
            self.control_states[room] = next_state
            if outputs != self.last_outputs[room]:
                self.sim.apply_actuation(room, outputs)
                self._publish(f"room{room}.heat_on", float(outputs.heat_on), timestamp_us)
                self._publish(f"room{room}.cool_on", float(outputs.cool_on), timestamp_us)
                self._publish(f"room{room}.light_on", float(outputs.light_on), timestamp_us)
                self.last_outputs[room] = outputs
            if outputs.heat_on:
                self.heat_seconds[room] += 1
            if outputs.cool_on:
                self.cool_seconds[room] += 1
            if outputs.light_on:
                self.light_seconds[room] += 1

    def _log_row(self) -> None:
        if self._lvm is None:
            return
        snapshot = self.gateway.snapshot()
        values = []
        for room in self.rooms:
            reading = snapshot[room].reading
            if reading is None:
                values += [float("nan")] * 3
            else:
                values += [reading.temperature_c, reading.humidity_pct,
                           reading.light_lux]
        self._lvm.append(self.sim.time, values)

    def run(self, duration_s: float, speed: float = 0.0) -> dict:
        """Runs the loop for the simulated duration; speed is a real-time
        multiplier (0 = as fast as possible). Returns the run summary."""
        log_period = self.config.gateway.sample_period_s
        next_log = 0.0
        wall_start = time.monotonic()
        while self.sim.time < duration_s - 1e-9 and not self.stop_requested.is_set():
            chunk = self.sim.emit_due_samples()
            if chunk and self._stream is not None:
                self._stream.write(chunk)
                if speed > 0:
                    self._stream.flush()  # live pipe consumers want low latency
            self.gateway.ingest(chunk)
            self.stale_events += len(self.gateway.detect_stale())
            self._evaluate_controls()
            if self.sim.time + 1e-9 >= next_log:
                self._log_row()
                next_log += log_period
            self.sim.advance(1.0)
            if speed > 0:
                target = wall_start + self.sim.time / speed
                delay = target - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        return self.summary(duration_s)

    def close(self) -> None:
        if self._lvm is not None:
            self._lvm.close()
        if self._stream is not None and self._stream is not sys.stdout.buffer:
            self._stream.close()

    def summary(self, duration_s: float) -> dict:
        rooms = {}
        snapshot = self.gateway.snapshot()
        for room in self.rooms:
            state = snapshot[room]
            rooms[str(room)] = {
                "node": state.node_id,
                "mode_switches": self.mode_switches[room],
                "heat_seconds": self.heat_seconds[room],
                "cool_seconds": self.cool_seconds[room],
                "light_seconds": self.light_seconds[room],
                "packets_received": state.packets_received,
                "packets_dropped": state.packets_dropped,
                "last_temperature_c": (state.reading.temperature_c
                                       if state.reading else None),
            }
        lifetimes = {}
        for node in self.sim.nodes:
            hours = estimate_lifetime(node.power_mode, node.battery_mah,
                                      node.sample_period_s, node.duty_cycle)
            lifetimes[str(node.id)] = {"mode": node.power_mode, "hours": hours}
        return {
            "seed": self.seed,
            "duration_s": duration_s,
            "frames": {
                "generated": self.sim.frames_generated,
                "delivered": self.sim.frames_delivered,
                "rejected": self.gateway.frames_rejected,
            },
            "per_origin": {
                str(origin): {
                    "generated": self.sim.generated_by[origin],
                    "delivered": self.sim.delivered_by[origin],
                } for origin in sorted(self.sim.generated_by)},
            "rooms": rooms,
            "coactivations": self.coactivations,
            "stale_events": self.stale_events,
            "energy_mah": {str(nid): states
                           for nid, states in sorted(self.sim.ledger.as_dict().items())},
            "lifetime_hours": lifetimes,
            "lvm_rows": self._lvm.rows_written if self._lvm else 0,
            "shared_variables": len(self.engine.snapshot_vars("*")),
        }


def summary_json(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=2) + "\n"
