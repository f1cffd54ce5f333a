"""Binary framing between the command process and its display processes.

Frame layout: magic 0x56 0x52, version 0x01, type byte, payload length as
little-endian u32, payload.  Strings are u16-length-prefixed UTF-8; reals are
little-endian IEEE-754 binary32.  The decoder is incremental: it reports "not
enough bytes yet" without consuming anything, and raises ProtocolError on the
first malformed byte, after which the stream must be dropped.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Optional, Union

MAGIC = b"\x56\x52"
VERSION = 0x01
HEADER_SIZE = 8
MAX_PAYLOAD = 1 << 20  # hostile length fields stop here

MODE_EXPLORATION = 0
MODE_SELECTION = 1
MODE_EDITING = 2

EYE_MONO = 0
EYE_LEFT = 1
EYE_RIGHT = 2

GESTURE_POINT = 0
GESTURE_SWIPE = 1

# u8 encodings used by EffectFired.
EFFECT_TYPE_CODES = {"audio": 0, "visual": 1, "haptic": 2}
TRIGGER_CODES = {"continuous": 0, "on_touch": 1, "frame": 2}
EFFECT_TYPE_NAMES = {v: k for k, v in EFFECT_TYPE_CODES.items()}
TRIGGER_NAMES = {v: k for k, v in TRIGGER_CODES.items()}


class ProtocolError(Exception):
    pass


Vec3F = tuple[float, float, float]
QuatF = tuple[float, float, float, float]


@dataclass(frozen=True)
class Heartbeat:
    pass


@dataclass(frozen=True)
class Hello:
    consumer_id: int
    responsibilities: int  # bitmask: bit0 visual, bit1 audio, bit2 haptic
    eye: int  # 0 mono, 1 left, 2 right


@dataclass(frozen=True)
class LoadScene:
    scene_path: str
    mapping_path: str


@dataclass(frozen=True)
class SceneLoaded:
    status: int  # 0 ok, 1 error
    node_count: int


@dataclass(frozen=True)
class ViewpointUpdate:
    position: Vec3F
    rotation_quat: QuatF


@dataclass(frozen=True)
class Pick:
    origin: Vec3F
    direction: Vec3F


@dataclass(frozen=True)
class ModeSwitch:
    # Deliberately unvalidated at the codec layer: an out-of-range byte must
    # reach the consumer so it can answer with an error Ack.
    mode: int


@dataclass(frozen=True)
class PlayAnimation:
    target_path: str
    axis: Vec3F
    rad_per_tick: float


@dataclass(frozen=True)
class Gesture:
    gesture_id: int  # 0 point, 1 swipe


@dataclass(frozen=True)
class Tick:
    tick: int


@dataclass(frozen=True)
class EffectFired:
    effect_type: int
    trigger: int
    path: str
    param: float
    tick: int


@dataclass(frozen=True)
class Ack:
    acked_type: int
    tick: int
    status: int = 0  # 0 ok, 1 error


Message = Union[
    Heartbeat,
    Hello,
    LoadScene,
    SceneLoaded,
    ViewpointUpdate,
    Pick,
    ModeSwitch,
    PlayAnimation,
    Gesture,
    Tick,
    EffectFired,
    Ack,
]

TYPE_BYTES: dict[type, int] = {
    Heartbeat: 0x00,
    Hello: 0x01,
    LoadScene: 0x02,
    SceneLoaded: 0x03,
    ViewpointUpdate: 0x04,
    Pick: 0x05,
    ModeSwitch: 0x06,
    PlayAnimation: 0x07,
    Gesture: 0x08,
    # 0x09 is unassigned.
    Tick: 0x0A,
    EffectFired: 0x0B,
    Ack: 0x0C,
}
ASSIGNED_TYPES = set(TYPE_BYTES.values())


def _check_u8(value: int, name: str, limit: int = 255) -> int:
    if not isinstance(value, int) or not 0 <= value <= limit:
        raise ProtocolError(f"{name} out of range: {value!r} (max {limit})")
    return value


def _check_u32(value: int, name: str) -> int:
    if not isinstance(value, int) or not 0 <= value <= 0xFFFFFFFF:
        raise ProtocolError(f"{name} out of range: {value!r}")
    return value


def _pack_str(s: str) -> bytes:
    data = s.encode("utf-8")
    if len(data) > 0xFFFF:
        raise ProtocolError(f"string too long: {len(data)} bytes (max 65535)")
    return struct.pack("<H", len(data)) + data


def _pack_f32(*values: float) -> bytes:
    return struct.pack(f"<{len(values)}f", *values)


def _payload(msg: Message) -> bytes:
    if isinstance(msg, Heartbeat):
        return b""
    if isinstance(msg, Hello):
        return struct.pack(
            "<BBB",
            _check_u8(msg.consumer_id, "consumer_id"),
            _check_u8(msg.responsibilities, "responsibilities", 7),
            _check_u8(msg.eye, "eye", 2),
        )
    if isinstance(msg, LoadScene):
        return _pack_str(msg.scene_path) + _pack_str(msg.mapping_path)
    if isinstance(msg, SceneLoaded):
        return struct.pack(
            "<BI", _check_u8(msg.status, "status", 1), _check_u32(msg.node_count, "node_count")
        )
    if isinstance(msg, ViewpointUpdate):
        return _pack_f32(*msg.position, *msg.rotation_quat)
    if isinstance(msg, Pick):
        return _pack_f32(*msg.origin, *msg.direction)
    if isinstance(msg, ModeSwitch):
        return struct.pack("<B", _check_u8(msg.mode, "mode"))
    if isinstance(msg, PlayAnimation):
        return _pack_str(msg.target_path) + _pack_f32(*msg.axis, msg.rad_per_tick)
    if isinstance(msg, Gesture):
        return struct.pack("<B", _check_u8(msg.gesture_id, "gesture_id", 1))
    if isinstance(msg, Tick):
        return struct.pack("<I", _check_u32(msg.tick, "tick"))
    if isinstance(msg, EffectFired):
        return (
            struct.pack(
                "<BB",
                _check_u8(msg.effect_type, "effect_type", 2),
                _check_u8(msg.trigger, "trigger", 2),
            )
            + _pack_str(msg.path)
            + _pack_f32(msg.param)
            + struct.pack("<I", _check_u32(msg.tick, "tick"))
        )
    if isinstance(msg, Ack):
        if msg.acked_type not in ASSIGNED_TYPES:
            raise ProtocolError(f"acked_type is not an assigned type byte: {msg.acked_type!r}")
        return struct.pack(
            "<BIB",
            msg.acked_type,
            _check_u32(msg.tick, "tick"),
            _check_u8(msg.status, "status", 1),
        )
    raise ProtocolError(f"not a protocol message: {msg!r}")


def encode_message(msg: Message) -> bytes:
    payload = _payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload too large: {len(payload)} bytes")
    return MAGIC + bytes([VERSION, TYPE_BYTES[type(msg)]]) + struct.pack("<I", len(payload)) + payload


class _Cursor:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ProtocolError("payload truncated mid-field")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, name: str, limit: int = 255) -> int:
        value = self._take(1)[0]
        if value > limit:
            raise ProtocolError(f"{name} out of range: {value} (max {limit})")
        return value

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def f32(self, n: int = 1):
        values = struct.unpack(f"<{n}f", self._take(4 * n))
        return values[0] if n == 1 else values

    def string(self) -> str:
        length = struct.unpack("<H", self._take(2))[0]
        raw = self._take(length)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"invalid UTF-8 in string field: {exc}") from exc

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ProtocolError(
                f"payload has {len(self.data) - self.pos} trailing byte(s)"
            )


def _decode_heartbeat(c: _Cursor) -> Message:
    return Heartbeat()


def _decode_hello(c: _Cursor) -> Message:
    return Hello(
        consumer_id=c.u8("consumer_id"),
        responsibilities=c.u8("responsibilities", 7),
        eye=c.u8("eye", 2),
    )


def _decode_load_scene(c: _Cursor) -> Message:
    return LoadScene(scene_path=c.string(), mapping_path=c.string())


def _decode_scene_loaded(c: _Cursor) -> Message:
    return SceneLoaded(status=c.u8("status", 1), node_count=c.u32())


def _decode_viewpoint(c: _Cursor) -> Message:
    return ViewpointUpdate(position=c.f32(3), rotation_quat=c.f32(4))


def _decode_pick(c: _Cursor) -> Message:
    return Pick(origin=c.f32(3), direction=c.f32(3))


def _decode_mode_switch(c: _Cursor) -> Message:
    return ModeSwitch(mode=c.u8("mode"))


def _decode_play_animation(c: _Cursor) -> Message:
    path = c.string()
    axis = c.f32(3)
    return PlayAnimation(target_path=path, axis=axis, rad_per_tick=c.f32())


def _decode_gesture(c: _Cursor) -> Message:
    return Gesture(gesture_id=c.u8("gesture_id", 1))


def _decode_tick(c: _Cursor) -> Message:
    return Tick(tick=c.u32())


def _decode_effect_fired(c: _Cursor) -> Message:
    effect_type = c.u8("effect_type", 2)
    trigger = c.u8("trigger", 2)
    path = c.string()
    param = c.f32()
    return EffectFired(effect_type=effect_type, trigger=trigger, path=path, param=param, tick=c.u32())


def _decode_ack(c: _Cursor) -> Message:
    acked = c.u8("acked_type")
    if acked not in ASSIGNED_TYPES:
        raise ProtocolError(f"acked_type is not an assigned type byte: {acked}")
    tick = c.u32()
    return Ack(acked_type=acked, tick=tick, status=c.u8("status", 1))


_DECODERS: dict[int, Callable[[_Cursor], Message]] = {
    0x00: _decode_heartbeat,
    0x01: _decode_hello,
    0x02: _decode_load_scene,
    0x03: _decode_scene_loaded,
    0x04: _decode_viewpoint,
    0x05: _decode_pick,
    0x06: _decode_mode_switch,
    0x07: _decode_play_animation,
    0x08: _decode_gesture,
    0x0A: _decode_tick,
    0x0B: _decode_effect_fired,
    0x0C: _decode_ack,
}


def decode_message(buffer: bytes) -> Optional[tuple[Message, int]]:
    """Decode one frame from the front of buffer.

    Returns (message, bytes consumed), or None when the buffer is a valid
    prefix that needs more bytes.  Raises ProtocolError as soon as any byte
    rules out a valid frame; the caller must then close the stream.
    """
    n = len(buffer)
    if n >= 1 and buffer[0] != MAGIC[0]:
        raise ProtocolError(f"bad magic: {buffer[0]:#04x}")
    if n >= 2 and buffer[1] != MAGIC[1]:
        raise ProtocolError(f"bad magic: {buffer[1]:#04x}")
    if n >= 3 and buffer[2] != VERSION:
        raise ProtocolError(f"unsupported version: {buffer[2]:#04x}")
    if n >= 4 and buffer[3] not in _DECODERS:
        raise ProtocolError(f"unknown message type: {buffer[3]:#04x}")
    if n < HEADER_SIZE:
        return None
    payload_len = struct.unpack("<I", buffer[4:8])[0]
    if payload_len > MAX_PAYLOAD:
        raise ProtocolError(f"declared payload too large: {payload_len} bytes")
    if n < HEADER_SIZE + payload_len:
        return None
    cursor = _Cursor(bytes(buffer[HEADER_SIZE : HEADER_SIZE + payload_len]))
    msg = _DECODERS[buffer[3]](cursor)
    cursor.done()
    return msg, HEADER_SIZE + payload_len


class StreamDecoder:
    """Per-connection reassembly buffer.  Not shareable between connections.

    After a ProtocolError the decoder is poisoned: every later feed raises,
    mirroring the requirement that a corrupted stream is never resynced.
    """

    def __init__(self):
        self._buffer = bytearray()
        self._dead: Optional[ProtocolError] = None

    def feed(self, data: bytes) -> list[Message]:
        if self._dead is not None:
            raise ProtocolError(f"stream already failed: {self._dead}")
        self._buffer.extend(data)
        out: list[Message] = []
        while True:
            try:
                decoded = decode_message(bytes(self._buffer))
            except ProtocolError as exc:
                self._dead = exc
                raise
            if decoded is None:
                return out
            msg, consumed = decoded
            del self._buffer[:consumed]
            out.append(msg)

    @property
    def pending_bytes(self) -> int:
        return len(self._buffer)
