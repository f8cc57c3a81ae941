"""Deterministic simulator of the deployed mesh.

Nodes sample their room at a fixed period, invert the engineering-unit
conversions to synthesize raw payloads, and forward frames hop by hop
along a static shortest-hop tree toward the base station. Frames that
survive every Bernoulli link draw are serialized exactly as the real
serial stream the gateway parses. Battery draw is integrated per node
from the IRIS current table, split by radio/MCU state.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from datetime import datetime

from . import convert, wire
from .control import ControlOutputs

HP = "HP"
LP = "LP"

# IRIS current draw per operating state, milliamps
IRIS_CURRENTS_MA = {
    "mcu_full": 8.0,
    "mcu_sleep": 0.008,
    "radio_rx": 16.0,
    "radio_tx": 17.0,
    "radio_sleep": 0.001,
    "flash_write": 15.0,
    "flash_read": 4.0,
    "flash_sleep": 0.002,
}

ENERGY_STATES = ("mcu_full", "mcu_sleep", "radio_rx", "radio_tx", "radio_sleep")

HEALTH_EVERY_N_DATA = 10
MAX_TRUTH_LUX = convert.LIGHT_COUNT_MAX * convert.DEFAULT_CONSTANTS.lux_per_count

BATTERY_FULL_V = 3.0
BATTERY_EMPTY_V = 2.4
BATTERY_FLOOR_V = 2.0


class PartitionedNetwork(Exception):
    def __init__(self, unreachable: list[int]):
        self.unreachable = sorted(unreachable)
        super().__init__(f"no route to base for nodes {self.unreachable}")


@dataclass
class NodeSpec:
    id: int
    room: int
    position: tuple[float, float]
    power_mode: str = HP
    sample_period_s: float = 10.0
    battery_mah: float = 2000.0
    radio_range_m: float = 30.0
    duty_cycle: float = 0.01  # LP only

    def __post_init__(self) -> None:
        if self.id == 0:
            raise ValueError("node id 0 is reserved for the base station")
        if self.power_mode not in (HP, LP):
            raise ValueError(f"power mode must be HP or LP, got {self.power_mode!r}")
        if not 10.0 <= self.sample_period_s <= 60.0:
            raise ValueError(f"sample period {self.sample_period_s} outside [10, 60] s")
        if self.battery_mah <= 0 or self.radio_range_m <= 0:
            raise ValueError("battery capacity and radio range must be positive")
        if not 0.0 < self.duty_cycle <= 1.0:
            raise ValueError("duty cycle must be in (0, 1]")


@dataclass
class Topology:
    nodes: list[NodeSpec]
    base_position: tuple[float, float] = (0.0, 0.0)
    base_range_m: float = 30.0
    base_id: int = wire.BASE_ADDR

    def __post_init__(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids in topology")

    def adjacency(self) -> dict[int, set[int]]:
        """Disc link model: an undirected edge exists when the distance is
        within both endpoints' radio ranges."""
        points = {self.base_id: (self.base_position, self.base_range_m)}
        for node in self.nodes:
            points[node.id] = (node.position, node.radio_range_m)
        adj: dict[int, set[int]] = {nid: set() for nid in points}
        ids = sorted(points)
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                (pa, ra), (pb, rb) = points[a], points[b]
                if math.dist(pa, pb) <= min(ra, rb):
                    adj[a].add(b)
                    adj[b].add(a)
        return adj


def build_routes(topology: Topology) -> dict[int, int]:
    """Shortest-hop parent per node, ties broken by lowest address."""
    adj = topology.adjacency()
    hops = {topology.base_id: 0}
    frontier = [topology.base_id]
    while frontier:
        nxt = []
        for nid in frontier:
            for neigh in adj[nid]:
                if neigh not in hops:
                    hops[neigh] = hops[nid] + 1
                    nxt.append(neigh)
        frontier = sorted(nxt)
    unreachable = [n.id for n in topology.nodes if n.id not in hops]
    if unreachable:
        raise PartitionedNetwork(unreachable)
    parents: dict[int, int] = {}
    for node in topology.nodes:
        candidates = [n for n in adj[node.id] if hops[n] == hops[node.id] - 1]
        parents[node.id] = min(candidates)
    return parents


@dataclass
class OutdoorConfig:
    mean_c: float = 16.0
    amplitude_c: float = 4.0
    period_s: float = 86400.0
    phase_s: float = 0.0

    def temperature(self, t: float) -> float:
        # coldest at t = phase (midnight by default), warmest half a period later
        return self.mean_c - self.amplitude_c * math.cos(
            2.0 * math.pi * (t - self.phase_s) / self.period_s)


@dataclass
class RoomEnvConfig:
    initial_temp_c: float = 21.0
    humidity_mean_pct: float = 45.0
    humidity_amplitude_pct: float = 5.0
    daylight_peak_lux: float = 500.0
    night_lux: float = 5.0
    sunrise_s: float = 21600.0
    sunset_s: float = 64800.0
    lamp_lux: float = 400.0
    occupancy: list[tuple[float, float]] = field(default_factory=lambda: [(64800.0, 82800.0)])
    pressure_mean_mbar: float = 1013.2
    pressure_amplitude_mbar: float = 1.5

    def __post_init__(self) -> None:
        if not -10.0 <= self.initial_temp_c <= 50.0:
            raise ValueError(f"initial temperature {self.initial_temp_c} outside [-10, 50]")

    def daylight(self, t: float) -> float:
        day_t = t % 86400.0
        if not self.sunrise_s <= day_t <= self.sunset_s:
            return self.night_lux
        phase = (day_t - self.sunrise_s) / (self.sunset_s - self.sunrise_s)
        return self.night_lux + (self.daylight_peak_lux - self.night_lux) * math.sin(math.pi * phase)

    def humidity(self, t: float) -> float:
        value = self.humidity_mean_pct + self.humidity_amplitude_pct * math.sin(
            2.0 * math.pi * t / 86400.0)
        return min(100.0, max(0.0, value))

    def pressure(self, t: float) -> float:
        return self.pressure_mean_mbar + self.pressure_amplitude_mbar * math.sin(
            2.0 * math.pi * t / 86400.0)

    def occupied(self, t: float) -> bool:
        day_t = t % 86400.0
        return any(start <= day_t < end for start, end in self.occupancy)


@dataclass
class ThermalConfig:
    k_loss_per_h: float = 0.3
    heat_rate_c_per_h: float = 3.0
    cool_rate_c_per_h: float = 3.0


def env_step(temp_c: float, outdoor_c: float, heat_on: bool, cool_on: bool,
             dt_s: float, thermal: ThermalConfig) -> float:
    """Explicit-Euler room temperature update over dt_s seconds."""
    if dt_s <= 0:
        raise ValueError("dt must be positive")
    rate_per_s = (
        thermal.k_loss_per_h * (outdoor_c - temp_c)
        + (thermal.heat_rate_c_per_h if heat_on else 0.0)
        - (thermal.cool_rate_c_per_h if cool_on else 0.0)
    ) / 3600.0
    return temp_c + dt_s * rate_per_s


def estimate_lifetime(mode: str, battery_mah: float, sample_period_s: float = 10.0,
                      duty_cycle: float = 0.01) -> float:
    """Battery lifetime in hours from the IRIS current table.

    Transmission draw is below the model's resolution at 10-60 s sampling
    cadences, so the average current is state-occupancy only.
    """
    if battery_mah <= 0:
        raise ValueError("battery capacity must be positive")
    if not 0.0 < duty_cycle <= 1.0:
        raise ValueError("duty cycle must be in (0, 1]")
    if sample_period_s <= 0:
        raise ValueError("sample period must be positive")
    active_ma = IRIS_CURRENTS_MA["mcu_full"] + IRIS_CURRENTS_MA["radio_rx"]
    if mode == HP:
        average_ma = active_ma
    elif mode == LP:
        average_ma = (IRIS_CURRENTS_MA["mcu_sleep"] + IRIS_CURRENTS_MA["radio_sleep"]
                      + duty_cycle * active_ma)
    else:
        raise ValueError(f"mode must be HP or LP, got {mode!r}")
    return battery_mah / average_ma


class EnergyLedger:
    """Accumulated charge per node, split by operating state (mAh)."""

    def __init__(self, node_ids):
        self.charge_mah: dict[int, dict[str, float]] = {
            nid: {state: 0.0 for state in ENERGY_STATES} for nid in node_ids}

    def charge(self, node_id: int, state: str, current_ma: float, seconds: float) -> None:
        self.charge_mah[node_id][state] += current_ma * seconds / 3600.0

    def total_mah(self, node_id: int) -> float:
        return sum(self.charge_mah[node_id].values())

    def as_dict(self) -> dict[int, dict[str, float]]:
        return {nid: dict(states) for nid, states in self.charge_mah.items()}


@dataclass
class SimConfig:
    topology: Topology
    rooms: dict[int, RoomEnvConfig]
    outdoor: OutdoorConfig = field(default_factory=OutdoorConfig)
    thermal: ThermalConfig = field(default_factory=ThermalConfig)
    link_loss: float = 0.0
    tx_time_s: float = 0.004
    lp_startup_delay_s: float = 30.0
    channel: int = 26  # 802.15.4 channel, metadata only
    start_time: datetime = field(default_factory=lambda: datetime(2012, 6, 1))

    def __post_init__(self) -> None:
        if not 0.0 <= self.link_loss <= 1.0:
            raise ValueError("link loss must be a probability")
        for node in self.topology.nodes:
            if node.room not in self.rooms:
                raise ValueError(f"node {node.id} references unknown room {node.room}")


class Simulation:
    """Single-threaded deterministic event loop over one-second steps."""

    def __init__(self, config: SimConfig, seed: int = 0):
        self.config = config
        self.rng = random.Random(seed)
        self.time = 0.0
        self.parents = build_routes(config.topology)
        self.nodes = sorted(config.topology.nodes, key=lambda n: n.id)
        self.ledger = EnergyLedger([n.id for n in self.nodes])
        self.room_temp: dict[int, float] = {
            room: cfg.initial_temp_c for room, cfg in config.rooms.items()}
        self.actuation: dict[int, ControlOutputs] = {
            room: ControlOutputs() for room in config.rooms}
        self._next_sample = {
            n.id: (config.lp_startup_delay_s if n.power_mode == LP else 0.0)
            for n in self.nodes}
        self._seq = {n.id: 0 for n in self.nodes}
        self._data_count = {n.id: 0 for n in self.nodes}
        self.frames_generated = 0
        self.frames_delivered = 0
        self.generated_by: dict[int, int] = {n.id: 0 for n in self.nodes}
        self.delivered_by: dict[int, int] = {n.id: 0 for n in self.nodes}

    # -- environment truth ------------------------------------------------

    def room_light(self, room: int) -> float:
        cfg = self.config.rooms[room]
        lux = cfg.daylight(self.time)
        if self.actuation[room].light_on:
            lux += cfg.lamp_lux
        return min(lux, MAX_TRUTH_LUX)

    def room_truth(self, room: int) -> dict[str, float]:
        cfg = self.config.rooms[room]
        return {
            "temperature_c": self.room_temp[room],
            "humidity_pct": cfg.humidity(self.time),
            "light_lux": self.room_light(room),
            "pressure_mbar": cfg.pressure(self.time),
            "outdoor_c": self.config.outdoor.temperature(self.time),
            "occupied": float(cfg.occupied(self.time)),
        }

    def battery_volts(self, node: NodeSpec) -> float:
        used = self.ledger.total_mah(node.id) / node.battery_mah
        volts = BATTERY_FULL_V - (BATTERY_FULL_V - BATTERY_EMPTY_V) * used
        return max(volts, BATTERY_FLOOR_V)

    def apply_actuation(self, room: int, outputs: ControlOutputs) -> None:
        self.actuation[room] = outputs

    # -- frame generation and forwarding ----------------------------------

    def _next_seq(self, node_id: int) -> int:
        self._seq[node_id] = (self._seq[node_id] + 1) & 0xFFFF
        return self._seq[node_id]

    def _route_to_base(self, node_id: int) -> list[int]:
        path = [node_id]
        while path[-1] != self.config.topology.base_id:
            path.append(self.parents[path[-1]])
        return path

    def _forward(self, origin: int, frame: wire.SensorFrame) -> bytes | None:
        self.frames_generated += 1
        self.generated_by[origin] += 1
        path = self._route_to_base(origin)
        for transmitter, receiver in zip(path, path[1:]):
            self.ledger.charge(transmitter, "radio_tx",
                               IRIS_CURRENTS_MA["radio_tx"], self.config.tx_time_s)
            if self.rng.random() < self.config.link_loss:
                return None
            frame.mesh.source_addr = transmitter
            frame.tos.dest_addr = receiver
        self.frames_delivered += 1
        self.delivered_by[origin] += 1
        return wire.encode_frame(frame)

    def _sample_node(self, node: NodeSpec) -> bytes:
        cfg = self.config.rooms[node.room]
        occupied = cfg.occupied(self.time)
        if occupied:
            accel_x = self.rng.gauss(0.0, 0.2)
            accel_y = self.rng.gauss(0.0, 0.2)
        else:
            accel_x = accel_y = 0.0
        reading = convert.EngineeringReading(
            temperature_c=min(max(self.room_temp[node.room], -39.6), 124.23),
            humidity_pct=cfg.humidity(self.time),
            light_lux=max(0.0, self.room_light(node.room)),
            battery_v=self.battery_volts(node),
            pressure_mbar=cfg.pressure(self.time),
        )
        payload = convert.raw_from_engineering(reading, accel_x_g=accel_x, accel_y_g=accel_y)
        out = bytearray()
        frame = wire.make_data_frame(
            origin=node.id, seq=self._next_seq(node.id), payload=payload,
            parent=self.parents[node.id], dest=self.parents[node.id])
        chunk = self._forward(node.id, frame)
        if chunk:
            out += chunk
        self._data_count[node.id] += 1
        if self._data_count[node.id] % HEALTH_EVERY_N_DATA == 0:
            report = wire.HealthReport(
                node_id=node.id,
                parent=self.parents[node.id],
                battery_raw=convert.raw_vbat(self.battery_volts(node)),
                packets_sent=self._data_count[node.id],
                link_seq=self._seq[node.id],
            )
            health = wire.make_health_frame(
                origin=node.id, seq=self._next_seq(node.id), report=report,
                dest=self.parents[node.id])
            chunk = self._forward(node.id, health)
            if chunk:
                out += chunk
        return bytes(out)

    def _charge_baseline(self, seconds: float) -> None:
        for node in self.nodes:
            if node.power_mode == HP:
                self.ledger.charge(node.id, "mcu_full", IRIS_CURRENTS_MA["mcu_full"], seconds)
                self.ledger.charge(node.id, "radio_rx", IRIS_CURRENTS_MA["radio_rx"], seconds)
            else:
                self.ledger.charge(node.id, "mcu_sleep", IRIS_CURRENTS_MA["mcu_sleep"], seconds)
                self.ledger.charge(node.id, "radio_sleep", IRIS_CURRENTS_MA["radio_sleep"], seconds)
                self.ledger.charge(node.id, "mcu_full",
                                   node.duty_cycle * IRIS_CURRENTS_MA["mcu_full"], seconds)
                self.ledger.charge(node.id, "radio_rx",
                                   node.duty_cycle * IRIS_CURRENTS_MA["radio_rx"], seconds)

    # -- time advance ------------------------------------------------------

    def emit_due_samples(self) -> bytes:
        """Serial bytes for every sample scheduled at or before the current
        instant; node order is ascending id for determinism."""
        out = bytearray()
        for node in self.nodes:
            while self._next_sample[node.id] <= self.time + 1e-9:
                out += self._sample_node(node)
                self._next_sample[node.id] += node.sample_period_s
        return bytes(out)

    def advance(self, seconds: float = 1.0) -> None:
        """Integrate environment and baseline battery draw over one second."""
        self._charge_baseline(seconds)
        for room in self.config.rooms:
            outputs = self.actuation[room]
            self.room_temp[room] = env_step(
                self.room_temp[room],
                self.config.outdoor.temperature(self.time),
                outputs.heat_on, outputs.cool_on, seconds, self.config.thermal)
        self.time += seconds

    def step(self, dt: float = 1.0) -> bytes:
        """Advance the simulation by a whole number of seconds; returns the
        serial bytes that reached the base station during the interval."""
        if dt <= 0 or abs(dt - round(dt)) > 1e-9:
            raise ValueError("step size must be a positive whole number of seconds")
        out = bytearray()
        for _ in range(int(round(dt))):
            out += self.emit_due_samples()
            self.advance(1.0)
        return bytes(out)

    def run(self, duration_s: float) -> bytes:
        out = bytearray()
        while self.time < duration_s - 1e-9:
            out += self.step(1.0)
        return bytes(out)
