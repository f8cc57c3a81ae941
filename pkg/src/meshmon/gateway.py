"""Base-station side: parse the serial stream, track per-room state, log.

One ingestion context owns the deframer and mutates room state under a
lock; snapshot() hands out per-room copies so readers never observe a
half-applied update. Sequence numbers are accepted only when strictly
newer within a half-range wraparound window, so duplicates and reordered
frames are dropped and counted.
"""

from __future__ import annotations

import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable

from . import control, convert, wire

SEQ_WINDOW = 32768  # half of the u16 space

REJECT_DUPLICATE = "duplicate"
REJECT_UNKNOWN_NODE = "unknown-node"
REJECT_CONVERSION = "conversion-error"


@dataclass
class GatewayConfig:
    rooms: dict[int, int] = field(default_factory=lambda: {1: 101, 2: 102, 3: 103})
    sample_period_s: float = 10.0
    stale_after_periods: float = 3.0
    movement_window: int = 10
    movement_sigma_g: float = 0.05

    def __post_init__(self) -> None:
        nodes = list(self.rooms.values())
        if len(set(nodes)) != len(nodes):
            raise ValueError("room map must be a bijection")
        if self.sample_period_s <= 0:
            raise ValueError("sample period must be positive")

    @property
    def node_to_room(self) -> dict[int, int]:
        return {node: room for room, node in self.rooms.items()}


@dataclass
class RoomState:
    room_id: int
    node_id: int
    reading: convert.EngineeringReading | None = None
    last_seq: int | None = None
    last_update: float | None = None
    parent: int | None = None
    movement: bool = False
    stale: bool = True
    packets_received: int = 0
    packets_dropped: int = 0


@dataclass
class ReadingUpdated:
    room_id: int
    node_id: int
    reading: convert.EngineeringReading
    seq: int
    timestamp: float


@dataclass
class HealthUpdated:
    node_id: int
    parent: int
    battery_v: float
    packets_sent: int
    timestamp: float


@dataclass
class FrameRejected:
    reason: str
    detail: str


GatewayEvent = ReadingUpdated | HealthUpdated | FrameRejected

# publisher signature: (name, value, timestamp_us)
Publisher = Callable[[str, float, int], None]


def _seq_is_newer(seq: int, last_seq: int | None) -> bool:
    if last_seq is None:
        return True
    return 0 < ((seq - last_seq) & 0xFFFF) < SEQ_WINDOW


class Gateway:
    def __init__(self, config: GatewayConfig | None = None,
                 clock: Callable[[], float] = time.time,
                 publisher: Publisher | None = None,
                 constants: convert.ConversionConstants = convert.DEFAULT_CONSTANTS):
        self.config = config or GatewayConfig()
        self.clock = clock
        self.publisher = publisher
        self.constants = constants
        self._lock = threading.Lock()
        self._deframer = wire.Deframer()
        self._rooms: dict[int, RoomState] = {
            room: RoomState(room_id=room, node_id=node)
            for room, node in sorted(self.config.rooms.items())}
        self._node_to_room = self.config.node_to_room
        self._accel: dict[int, deque[float]] = {
            node: deque(maxlen=self.config.movement_window)
            for node in self._node_to_room}
        self.frames_rejected = 0

    # -- ingestion ---------------------------------------------------------

    def ingest(self, chunk: bytes) -> list[GatewayEvent]:
        if not chunk:
            return []
        events: list[GatewayEvent] = []
        frames, diagnostics = self._deframer.feed(chunk)
        for diag in diagnostics:
            self.frames_rejected += 1
            events.append(FrameRejected(reason=diag.reason, detail=diag.detail))
        for frame in frames:
            events.append(self._apply_frame(frame))
        return events

    def _apply_frame(self, frame: wire.SensorFrame) -> GatewayEvent:
        now = self.clock()
        origin = frame.mesh.origin_addr
        room_id = self._node_to_room.get(origin)
        if room_id is None:
            self.frames_rejected += 1
            return FrameRejected(reason=REJECT_UNKNOWN_NODE,
                                 detail=f"origin {origin} is not mapped to a room")
        with self._lock:
            state = self._rooms[room_id]
            if not _seq_is_newer(frame.mesh.seq, state.last_seq):
                self._rooms[room_id] = replace(
                    state, packets_dropped=state.packets_dropped + 1)
                self.frames_rejected += 1
                return FrameRejected(
                    reason=REJECT_DUPLICATE,
                    detail=f"origin {origin} seq {frame.mesh.seq} after {state.last_seq}")
            if frame.is_health:
                report = frame.body
                battery_v = report.battery_raw / 1000.0
                self._rooms[room_id] = replace(
                    state,
                    last_seq=frame.mesh.seq,
                    last_update=now,
                    parent=report.parent,
                    stale=False,
                    packets_received=state.packets_received + 1,
                )
                return HealthUpdated(node_id=origin, parent=report.parent,
                                     battery_v=battery_v,
                                     packets_sent=report.packets_sent, timestamp=now)
            payload = frame.body.payload
            try:
                reading = convert.reading_from_payload(payload, self.constants)
            except ValueError as exc:
                self._rooms[room_id] = replace(
                    state, packets_dropped=state.packets_dropped + 1)
                self.frames_rejected += 1
                return FrameRejected(reason=REJECT_CONVERSION, detail=str(exc))
            magnitude = math.hypot(convert.accel_g_from_raw(payload.accel_x_raw),
                                   convert.accel_g_from_raw(payload.accel_y_raw))
            self._accel[origin].append(magnitude)
            movement = control.detect_movement(
                self._accel[origin], window=self.config.movement_window,
                sigma_g=self.config.movement_sigma_g)
            self._rooms[room_id] = replace(
                state,
                reading=reading,
                last_seq=frame.mesh.seq,
                last_update=now,
                parent=frame.body.sensor.parent,
                movement=movement,
                stale=False,
                packets_received=state.packets_received + 1,
            )
        self._publish_reading(room_id, reading, now)
        return ReadingUpdated(room_id=room_id, node_id=origin, reading=reading,
                              seq=frame.mesh.seq, timestamp=now)

    def _publish_reading(self, room_id: int, reading: convert.EngineeringReading,
                         now: float) -> None:
        if self.publisher is None:
            return
        timestamp_us = int(now * 1_000_000)
        prefix = f"room{room_id}."
        self.publisher(prefix + "temperature", reading.temperature_c, timestamp_us)
        self.publisher(prefix + "humidity", reading.humidity_pct, timestamp_us)
        self.publisher(prefix + "light", reading.light_lux, timestamp_us)
        self.publisher(prefix + "battery", reading.battery_v, timestamp_us)

    # -- state access -------------------------------------------------------

    def detect_stale(self, now: float | None = None) -> list[int]:
        """Flags rooms whose node has been silent longer than the staleness
        horizon; returns only rooms that newly transitioned."""
        if now is None:
            now = self.clock()
        horizon = self.config.stale_after_periods * self.config.sample_period_s
        newly_stale = []
        with self._lock:
            for room_id, state in self._rooms.items():
                if state.stale or state.last_update is None:
                    continue
                if now - state.last_update > horizon:
                    self._rooms[room_id] = replace(state, stale=True)
                    newly_stale.append(room_id)
        return newly_stale

    def snapshot(self) -> dict[int, RoomState]:
        with self._lock:
            return {room_id: replace(state) for room_id, state in self._rooms.items()}

    def room(self, room_id: int) -> RoomState:
        with self._lock:
            return replace(self._rooms[room_id])
