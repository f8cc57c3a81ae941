"""Latest-value cache of named double variables with UDP fan-out.

Datagram format (all integers big-endian):

    magic    4 bytes   "SVE1"
    msg_type u8        1 publish, 2 subscribe, 3 snapshot-request, 4 heartbeat
    name_len u8
    name     name_len bytes, UTF-8 (pattern for subscribe/snapshot)
    -- publish only --
    type_tag u8        1 = double
    value    f64
    timestamp u64      microseconds since the Unix epoch
    seq      u32       per-name, strictly increasing

A publish datagram is therefore 27 + name_len bytes. Subscribers register
a name pattern (exact, or a trailing '*' prefix wildcard) and are evicted
after three missed 10-second heartbeats.
"""

from __future__ import annotations

import socket
import struct
import threading
import time
from dataclasses import dataclass
from typing import Callable

MAGIC = b"SVE1"
MSG_PUBLISH = 1
MSG_SUBSCRIBE = 2
MSG_SNAPSHOT_REQUEST = 3
MSG_HEARTBEAT = 4

TYPE_DOUBLE = 1

MAX_NAME_BYTES = 255
PUBLISH_OVERHEAD = 27  # datagram size minus the name

HEARTBEAT_INTERVAL_S = 10.0
HEARTBEAT_MISS_LIMIT = 3

DEFAULT_PORT = 45454

_PUBLISH_TAIL = struct.Struct(">BdQI")  # type_tag, value, timestamp_us, seq

Endpoint = tuple[str, int]


class MalformedDatagram(ValueError):
    pass


@dataclass(frozen=True)
class VarRecord:
    name: str
    value: float
    timestamp_us: int
    seq: int


@dataclass
class Subscription:
    endpoint: Endpoint
    pattern: str
    last_heartbeat: float


def _encode_name(name: str) -> bytes:
    encoded = name.encode("utf-8")
    if len(encoded) > MAX_NAME_BYTES:
        raise ValueError(f"name is {len(encoded)} bytes, limit is {MAX_NAME_BYTES}")
    return bytes([len(encoded)]) + encoded


def encode_publish(record: VarRecord) -> bytes:
    return (MAGIC + bytes([MSG_PUBLISH]) + _encode_name(record.name)
            + _PUBLISH_TAIL.pack(TYPE_DOUBLE, record.value, record.timestamp_us, record.seq))


def encode_subscribe(pattern: str) -> bytes:
    return MAGIC + bytes([MSG_SUBSCRIBE]) + _encode_name(pattern)


def encode_snapshot_request(pattern: str = "*") -> bytes:
    return MAGIC + bytes([MSG_SNAPSHOT_REQUEST]) + _encode_name(pattern)


def encode_heartbeat() -> bytes:
    return MAGIC + bytes([MSG_HEARTBEAT]) + _encode_name("")


def decode_datagram(data: bytes) -> tuple[int, str, VarRecord | None]:
    """Returns (msg_type, name_or_pattern, record-for-publishes)."""
    if len(data) < 6 or data[:4] != MAGIC:
        raise MalformedDatagram("bad magic or short datagram")
    msg_type = data[4]
    name_len = data[5]
    if len(data) < 6 + name_len:
        raise MalformedDatagram("truncated name")
    try:
        name = data[6:6 + name_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedDatagram("name is not valid UTF-8") from exc
    rest = data[6 + name_len:]
    if msg_type == MSG_PUBLISH:
        if len(rest) != _PUBLISH_TAIL.size:
            raise MalformedDatagram("publish payload must be 21 bytes after the name")
        type_tag, value, timestamp_us, seq = _PUBLISH_TAIL.unpack(rest)
        if type_tag != TYPE_DOUBLE:
            raise MalformedDatagram(f"unsupported type tag {type_tag}")
        return msg_type, name, VarRecord(name, value, timestamp_us, seq)
    if msg_type in (MSG_SUBSCRIBE, MSG_SNAPSHOT_REQUEST, MSG_HEARTBEAT):
        if rest:
            raise MalformedDatagram("unexpected trailing bytes")
        return msg_type, name, None
    raise MalformedDatagram(f"unknown message type {msg_type}")


def pattern_matches(pattern: str, name: str) -> bool:
    if pattern.endswith("*"):
        return name.startswith(pattern[:-1])
    return pattern == name


class SharedVarEngine:
    """Thread-safe last-writer-wins cache keyed by variable name.

    A publish is accepted only when its sequence number exceeds the cached
    one; accepted publishes fan out synchronously to every matching
    subscriber and in-process listener, which preserves per-name order.
    """

    def __init__(self, clock: Callable[[], float] = time.time,
                 send: Callable[[bytes, Endpoint], None] | None = None):
        self.clock = clock
        self.send = send or (lambda data, endpoint: None)
        self._lock = threading.Lock()
        self._cache: dict[str, VarRecord] = {}
        self._subs: list[Subscription] = []
        self._listeners: list[Callable[[VarRecord], None]] = []
        self.dropped_stale = 0
        self.malformed = 0

    def add_listener(self, callback: Callable[[VarRecord], None]) -> None:
        with self._lock:
            self._listeners.append(callback)

    def remove_listener(self, callback: Callable[[VarRecord], None]) -> None:
        with self._lock:
            if callback in self._listeners:
                self._listeners.remove(callback)

    def publish(self, record: VarRecord) -> bool:
        if len(record.name.encode("utf-8")) > MAX_NAME_BYTES:
            raise ValueError("variable name too long")
        with self._lock:
            cached = self._cache.get(record.name)
            if cached is not None and record.seq <= cached.seq:
                self.dropped_stale += 1
                return False
            self._cache[record.name] = record
            datagram = encode_publish(record)
            for sub in self._subs:
                if pattern_matches(sub.pattern, record.name):
                    self.send(datagram, sub.endpoint)
            for listener in self._listeners:
                listener(record)
        return True

    def publish_value(self, name: str, value: float,
                      timestamp_us: int | None = None) -> VarRecord:
        """Publish with the next sequence number for the name (internal writers)."""
        with self._lock:
            cached = self._cache.get(name)
            next_seq = (cached.seq + 1) if cached is not None else 1
        if timestamp_us is None:
            timestamp_us = int(self.clock() * 1_000_000)
        record = VarRecord(name=name, value=float(value),
                           timestamp_us=timestamp_us, seq=next_seq)
        self.publish(record)
        return record

    def get(self, name: str) -> VarRecord | None:
        with self._lock:
            return self._cache.get(name)

    def value(self, name: str, default: float | None = None) -> float | None:
        record = self.get(name)
        return record.value if record is not None else default

    def snapshot_vars(self, pattern: str = "*") -> list[VarRecord]:
        with self._lock:
            return sorted((r for r in self._cache.values()
                           if pattern_matches(pattern, r.name)),
                          key=lambda r: r.name)

    def subscribers(self) -> list[Subscription]:
        with self._lock:
            return list(self._subs)

    def handle_datagram(self, data: bytes, source: Endpoint) -> None:
        try:
            msg_type, name, record = decode_datagram(data)
        except MalformedDatagram:
            self.malformed += 1
            return
        if msg_type == MSG_PUBLISH:
            assert record is not None
            self.publish(record)
        elif msg_type == MSG_SUBSCRIBE:
            now = self.clock()
            with self._lock:
                for sub in self._subs:
                    if sub.endpoint == source and sub.pattern == name:
                        sub.last_heartbeat = now
                        return
                self._subs.append(Subscription(endpoint=source, pattern=name,
                                               last_heartbeat=now))
        elif msg_type == MSG_SNAPSHOT_REQUEST:
            for record in self.snapshot_vars(name):
                self.send(encode_publish(record), source)
        elif msg_type == MSG_HEARTBEAT:
            now = self.clock()
            with self._lock:
                for sub in self._subs:
                    if sub.endpoint == source:
                        sub.last_heartbeat = now

    def evict_stale_subscribers(self, now: float | None = None) -> list[Subscription]:
        if now is None:
            now = self.clock()
        limit = HEARTBEAT_INTERVAL_S * HEARTBEAT_MISS_LIMIT
        with self._lock:
            evicted = [s for s in self._subs if now - s.last_heartbeat > limit]
            self._subs = [s for s in self._subs if now - s.last_heartbeat <= limit]
        return evicted


class UdpSharedVarServer:
    """Serves a SharedVarEngine over a UDP socket on a background thread."""

    def __init__(self, engine: SharedVarEngine, host: str = "127.0.0.1",
                 port: int = DEFAULT_PORT):
        self.engine = engine
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_SNDBUF, 1 << 20)
        self._sock.bind((host, port))
        self._sock.settimeout(0.2)
        self._thread: threading.Thread | None = None
        self._running = False
        engine.send = self._send

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def _send(self, data: bytes, endpoint: Endpoint) -> None:
        try:
            self._sock.sendto(data, endpoint)
        except OSError:
            pass  # subscriber vanished; eviction will reap it

    def _loop(self) -> None:
        last_evict = time.monotonic()
        while self._running:
            try:
                data, source = self._sock.recvfrom(65535)
            except socket.timeout:
                data = None
            except OSError:
                break
            if data is not None:
                self.engine.handle_datagram(data, source)
            now = time.monotonic()
            if now - last_evict >= HEARTBEAT_INTERVAL_S:
                self.engine.evict_stale_subscribers()
                last_evict = now

    def start(self) -> "UdpSharedVarServer":
        self._running = True
        self._thread = threading.Thread(target=self._loop, name="sharedvar-udp",
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._running = False
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None
        self._sock.close()

    def __enter__(self) -> "UdpSharedVarServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
