"""Serial frame codec for the mesh byte stream.

Frame layout (unescaped, little-endian fields, CRC trailer big-endian):

    TinyOS header   5 bytes   dest(u16) am_type(u8) group(u8) length(u8)
    mesh header     7 bytes   source(u16) origin(u16) seq(u16) app_id(u8)
    data body      30 bytes   sensor header (4) + MTS400 payload (26)
      or
    health body    12 bytes   node(u16) parent(u16) battery_mv(u16)
                              packets_sent(u32) link_seq(u16)
    CRC-16/XMODEM   2 bytes   over everything above, sent MSB first

On the wire each frame is wrapped in 0x7E delimiters with 0x7D/XOR-0x20
byte stuffing, so a data frame is 44 unescaped bytes (46 framed when no
escapes occur) and a health frame 26 (28 framed).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

FLAG = 0x7E
ESCAPE = 0x7D
ESCAPE_XOR = 0x20

AM_DATA = 0x0B
AM_HEALTH = 0x0C
DEFAULT_GROUP = 0x7D
DEFAULT_APP_ID = 0x03
BOARD_ID_MTS400 = 0x85
BROADCAST_ADDR = 0xFFFF
BASE_ADDR = 0

TOS_HEADER_SIZE = 5
MESH_HEADER_SIZE = 7
SENSOR_HEADER_SIZE = 4
MTS400_PAYLOAD_SIZE = 26
HEALTH_BODY_SIZE = 12
CRC_SIZE = 2

# value of the TinyOS length field (mesh header + body, CRC excluded)
DATA_LENGTH = MESH_HEADER_SIZE + SENSOR_HEADER_SIZE + MTS400_PAYLOAD_SIZE  # 37
HEALTH_LENGTH = MESH_HEADER_SIZE + HEALTH_BODY_SIZE  # 19

DATA_FRAME_SIZE = TOS_HEADER_SIZE + DATA_LENGTH + CRC_SIZE  # 44
HEALTH_FRAME_SIZE = TOS_HEADER_SIZE + HEALTH_LENGTH + CRC_SIZE  # 26

# deframer discards and reports anything this long without a closing flag
MAX_FRAME_CONTENT = 512

_TOS_STRUCT = struct.Struct("<HBBB")
_MESH_STRUCT = struct.Struct("<HHHB")
_SENSOR_STRUCT = struct.Struct("<BBH")
_MTS400_STRUCT = struct.Struct("<8H")
_HEALTH_STRUCT = struct.Struct("<HHHIH")

RESERVED_BYTES = bytes(10)


class FrameError(Exception):
    """Base class for codec failures."""


class CrcMismatch(FrameError):
    pass


class Truncated(FrameError):
    pass


class UnknownAmType(FrameError):
    pass


class LengthMismatch(FrameError):
    pass


class DanglingEscape(FrameError):
    pass


class UnescapedFlag(FrameError):
    pass


class InvalidFrame(FrameError):
    """Frame violates an encode-side invariant (bad length, reserved bytes...)."""


def _make_crc_table(poly: int = 0x1021) -> tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ poly) if crc & 0x8000 else (crc << 1)
        table.append(crc & 0xFFFF)
    return tuple(table)


_CRC_TABLE = _make_crc_table()


def crc16(data: bytes, crc: int = 0x0000) -> int:
    """CRC-16/XMODEM: poly 0x1021, init 0x0000, no reflection, no final XOR."""
    for byte in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[(crc >> 8) ^ byte]
    return crc


def escape(data: bytes) -> bytes:
    """Replace every flag/escape byte with ESCAPE followed by byte^0x20."""
    out = bytearray()
    for byte in data:
        if byte in (FLAG, ESCAPE):
            out.append(ESCAPE)
            out.append(byte ^ ESCAPE_XOR)
        else:
            out.append(byte)
    return bytes(out)


def unescape(data: bytes) -> bytes:
    """Inverse of escape(). Rejects a trailing lone escape and embedded flags."""
    out = bytearray()
    pending = False
    for byte in data:
        if byte == FLAG:
            raise UnescapedFlag("flag byte 0x7E inside frame content")
        if pending:
            out.append(byte ^ ESCAPE_XOR)
            pending = False
        elif byte == ESCAPE:
            pending = True
        else:
            out.append(byte)
    if pending:
        raise DanglingEscape("frame content ends with a lone escape byte")
    return bytes(out)


@dataclass
class TinyOsHeader:
    dest_addr: int
    am_type: int
    group: int = DEFAULT_GROUP
    length: int = 0

    def pack(self) -> bytes:
        return _TOS_STRUCT.pack(self.dest_addr, self.am_type, self.group, self.length)

    @classmethod
    def unpack(cls, data: bytes) -> "TinyOsHeader":
        return cls(*_TOS_STRUCT.unpack(data))


@dataclass
class XMeshHeader:
    source_addr: int
    origin_addr: int
    seq: int
    app_id: int = DEFAULT_APP_ID

    def pack(self) -> bytes:
        return _MESH_STRUCT.pack(self.source_addr, self.origin_addr, self.seq, self.app_id)

    @classmethod
    def unpack(cls, data: bytes) -> "XMeshHeader":
        return cls(*_MESH_STRUCT.unpack(data))


@dataclass
class XSensorHeader:
    board_id: int = BOARD_ID_MTS400
    packet_id: int = 1
    parent: int = BASE_ADDR

    def pack(self) -> bytes:
        return _SENSOR_STRUCT.pack(self.board_id, self.packet_id, self.parent)

    @classmethod
    def unpack(cls, data: bytes) -> "XSensorHeader":
        return cls(*_SENSOR_STRUCT.unpack(data))


@dataclass
class Mts400RawPayload:
    voltage_raw: int = 0
    humidity_raw: int = 0
    temperature_raw: int = 0
    light_raw: int = 0
    press_temp_raw: int = 0
    pressure_raw: int = 0
    accel_x_raw: int = 0
    accel_y_raw: int = 0
    reserved: bytes = RESERVED_BYTES

    def pack(self) -> bytes:
        return _MTS400_STRUCT.pack(
            self.voltage_raw, self.humidity_raw, self.temperature_raw,
            self.light_raw, self.press_temp_raw, self.pressure_raw,
            self.accel_x_raw, self.accel_y_raw,
        ) + self.reserved

    @classmethod
    def unpack(cls, data: bytes) -> "Mts400RawPayload":
        fields = _MTS400_STRUCT.unpack(data[:16])
        return cls(*fields, reserved=bytes(data[16:26]))

    def validate(self) -> None:
        if self.reserved != RESERVED_BYTES:
            raise InvalidFrame("reserved payload bytes must be zero")
        if not 0 <= self.humidity_raw <= 4095:
            raise InvalidFrame(f"humidity_raw {self.humidity_raw} exceeds 12 bits")
        if not 0 <= self.temperature_raw <= 16383:
            raise InvalidFrame(f"temperature_raw {self.temperature_raw} exceeds 14 bits")


@dataclass
class HealthReport:
    node_id: int
    parent: int
    battery_raw: int  # millivolts
    packets_sent: int
    link_seq: int

    def pack(self) -> bytes:
        return _HEALTH_STRUCT.pack(
            self.node_id, self.parent, self.battery_raw, self.packets_sent, self.link_seq
        )

    @classmethod
    def unpack(cls, data: bytes) -> "HealthReport":
        return cls(*_HEALTH_STRUCT.unpack(data))


@dataclass
class DataBody:
    sensor: XSensorHeader
    payload: Mts400RawPayload


@dataclass
class SensorFrame:
    tos: TinyOsHeader
    mesh: XMeshHeader
    body: DataBody | HealthReport

    @property
    def is_health(self) -> bool:
        return isinstance(self.body, HealthReport)


def make_data_frame(
    origin: int,
    seq: int,
    payload: Mts400RawPayload,
    parent: int = BASE_ADDR,
    dest: int = BASE_ADDR,
    source: int | None = None,
    group: int = DEFAULT_GROUP,
    app_id: int = DEFAULT_APP_ID,
    packet_id: int = 1,
) -> SensorFrame:
    """Assemble a sensor data frame with a correct TinyOS length field."""
    tos = TinyOsHeader(dest_addr=dest, am_type=AM_DATA, group=group, length=DATA_LENGTH)
    mesh = XMeshHeader(source_addr=origin if source is None else source,
                       origin_addr=origin, seq=seq, app_id=app_id)
    sensor = XSensorHeader(board_id=BOARD_ID_MTS400, packet_id=packet_id, parent=parent)
    return SensorFrame(tos=tos, mesh=mesh, body=DataBody(sensor=sensor, payload=payload))


def make_health_frame(
    origin: int,
    seq: int,
    report: HealthReport,
    dest: int = BASE_ADDR,
    source: int | None = None,
    group: int = DEFAULT_GROUP,
    app_id: int = DEFAULT_APP_ID,
) -> SensorFrame:
    tos = TinyOsHeader(dest_addr=dest, am_type=AM_HEALTH, group=group, length=HEALTH_LENGTH)
    mesh = XMeshHeader(source_addr=origin if source is None else source,
                       origin_addr=origin, seq=seq, app_id=app_id)
    return SensorFrame(tos=tos, mesh=mesh, body=report)


def _pack_body(frame: SensorFrame) -> bytes:
    if isinstance(frame.body, DataBody):
        if frame.tos.am_type != AM_DATA:
            raise InvalidFrame("data body requires the data am_type")
        if frame.tos.length != DATA_LENGTH:
            raise InvalidFrame(
                f"data frame length field must be {DATA_LENGTH}, got {frame.tos.length}")
        frame.body.payload.validate()
        return frame.body.sensor.pack() + frame.body.payload.pack()
    if isinstance(frame.body, HealthReport):
        if frame.tos.am_type != AM_HEALTH:
            raise InvalidFrame("health body requires the health am_type")
        if frame.tos.length != HEALTH_LENGTH:
            raise InvalidFrame(
                f"health frame length field must be {HEALTH_LENGTH}, got {frame.tos.length}")
        return frame.body.pack()
    raise InvalidFrame(f"unsupported body type {type(frame.body).__name__}")


def encode_frame(frame: SensorFrame) -> bytes:
    """Serialize, append the CRC trailer (MSB first), stuff and delimit."""
    content = frame.tos.pack() + frame.mesh.pack() + _pack_body(frame)
    trailer = struct.pack(">H", crc16(content))
    return bytes([FLAG]) + escape(content + trailer) + bytes([FLAG])


def _decode_content(content: bytes) -> SensorFrame:
    """Parse one unescaped frame body (headers + body + CRC trailer)."""
    if len(content) < TOS_HEADER_SIZE + CRC_SIZE:
        raise Truncated(f"frame of {len(content)} bytes is too short")
    received = struct.unpack(">H", content[-CRC_SIZE:])[0]
    computed = crc16(content[:-CRC_SIZE])
    if received != computed:
        raise CrcMismatch(f"crc {received:#06x} != computed {computed:#06x}")
    tos = TinyOsHeader.unpack(content[:TOS_HEADER_SIZE])
    if tos.am_type == AM_DATA:
        expected_length = DATA_LENGTH
    elif tos.am_type == AM_HEALTH:
        expected_length = HEALTH_LENGTH
    else:
        raise UnknownAmType(f"am_type {tos.am_type:#04x} is not mapped")
    actual_length = len(content) - TOS_HEADER_SIZE - CRC_SIZE
    if tos.length != expected_length or actual_length != tos.length:
        raise LengthMismatch(
            f"length field {tos.length}, expected {expected_length}, "
            f"actual body {actual_length}")
    body_off = TOS_HEADER_SIZE + MESH_HEADER_SIZE
    mesh = XMeshHeader.unpack(content[TOS_HEADER_SIZE:body_off])
    if tos.am_type == AM_DATA:
        sensor = XSensorHeader.unpack(content[body_off:body_off + SENSOR_HEADER_SIZE])
        payload = Mts400RawPayload.unpack(
            content[body_off + SENSOR_HEADER_SIZE:body_off + SENSOR_HEADER_SIZE + MTS400_PAYLOAD_SIZE])
        body: DataBody | HealthReport = DataBody(sensor=sensor, payload=payload)
    else:
        body = HealthReport.unpack(content[body_off:body_off + HEALTH_BODY_SIZE])
    return SensorFrame(tos=tos, mesh=mesh, body=body)


def decode_frame(raw: bytes) -> SensorFrame:
    """Decode one delimited, escaped frame as produced by encode_frame()."""
    if len(raw) < 2 or raw[0] != FLAG or raw[-1] != FLAG:
        raise Truncated("frame is not delimited by flag bytes")
    return _decode_content(unescape(raw[1:-1]))


_REASONS = {
    CrcMismatch: "crc-mismatch",
    Truncated: "truncated",
    UnknownAmType: "unknown-am-type",
    LengthMismatch: "length-mismatch",
    DanglingEscape: "dangling-escape",
    UnescapedFlag: "unescaped-flag",
}


@dataclass
class DeframeDiagnostic:
    reason: str
    detail: str
    size: int  # bytes discarded


@dataclass
class Deframer:
    """Incremental frame extractor; tolerates arbitrary chunk boundaries.

    A flag byte both closes the current frame and opens the next one, so
    back-to-back frames and redundant delimiters are handled uniformly.
    Bytes seen before the first flag are discarded as line noise.
    """

    _buf: bytearray = field(default_factory=bytearray)
    _in_frame: bool = False
    _garbage: int = 0

    def feed(self, chunk: bytes) -> tuple[list[SensorFrame], list[DeframeDiagnostic]]:
        frames: list[SensorFrame] = []
        diagnostics: list[DeframeDiagnostic] = []
        for byte in chunk:
            if not self._in_frame:
                if byte == FLAG:
                    if self._garbage:
                        diagnostics.append(DeframeDiagnostic(
                            "garbage", f"{self._garbage} bytes outside any frame",
                            self._garbage))
                        self._garbage = 0
                    self._in_frame = True
                else:
                    self._garbage += 1
                continue
            if byte == FLAG:
                if self._buf:
                    content = bytes(self._buf)
                    self._buf.clear()
                    try:
                        frames.append(_decode_content(unescape(content)))
                    except FrameError as exc:
                        diagnostics.append(DeframeDiagnostic(
                            _REASONS.get(type(exc), "invalid"), str(exc), len(content)))
                continue
            self._buf.append(byte)
            if len(self._buf) > MAX_FRAME_CONTENT:
                diagnostics.append(DeframeDiagnostic(
                    "overflow", "frame exceeded maximum length without a closing flag",
                    len(self._buf)))
                self._buf.clear()
                self._in_frame = False
        return frames, diagnostics


def frame_to_hex(raw: bytes) -> str:
    return raw.hex()


def frame_from_hex(line: str) -> bytes:
    return bytes.fromhex(line.strip())
