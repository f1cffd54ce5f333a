"""Effect records, their playback semantics, and the event records they emit.

Three effect families share one play contract: audio (positional gain,
continuous or on-touch), haptic (per-triangle scalar field sampled to a
force), visual (the same field blended to a color ramp).  Playback never
produces sound or device output; it produces EffectEvent records that the
headless displays append to JSONL logs.
"""

from __future__ import annotations

import enum
import hashlib
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .geometry import Affine, Mesh, Vec3, triangle_areas


class EffectError(ValueError):
    pass


class EffectType(enum.Enum):
    AUDIO = "audio"
    VISUAL = "visual"
    HAPTIC = "haptic"


class AudioTrigger(enum.Enum):
    CONTINUOUS = "continuous"
    ON_TOUCH = "on_touch"


class EventTrigger(enum.Enum):
    CONTINUOUS = "continuous"
    ON_TOUCH = "on_touch"
    FRAME = "frame"


@dataclass(frozen=True)
class FileWaveform:
    path: str


@dataclass(frozen=True)
class SineWaveform:
    freq_hz: float
    amp: float
    duration_s: float


Waveform = Union[FileWaveform, SineWaveform]


@dataclass(frozen=True)
class AudioEffect:
    trigger: AudioTrigger
    waveform: Waveform
    ref_distance: float = 1.0
    rolloff: float = 1.0
    max_distance: float = 20.0
    # 0 until registration assigns playback identifiers.
    buffer_id: int = 0
    source_id: int = 0

    def __post_init__(self):
        if self.ref_distance <= 0:
            raise EffectError(f"ref_distance must be > 0, got {self.ref_distance}")
        if self.rolloff < 0:
            raise EffectError(f"rolloff must be >= 0, got {self.rolloff}")
        if self.max_distance < self.ref_distance:
            raise EffectError(
                f"max_distance {self.max_distance} below ref_distance {self.ref_distance}"
            )

    @property
    def initialized(self) -> bool:
        return self.buffer_id > 0 and self.source_id > 0


@dataclass(frozen=True)
class ScalarField:
    """Per-triangle scalar samples plus the value window they are read against."""

    field_name: str
    unit: str
    values: tuple[float, ...]
    value_min: float
    value_max: float

    def __post_init__(self):
        if not self.value_min < self.value_max:
            raise EffectError(
                f"value_min must be < value_max ({self.value_min} vs {self.value_max})"
            )

    def normalized(self, triangle: int) -> float:
        if not 0 <= triangle < len(self.values):
            raise IndexError(
                f"triangle {triangle} out of range for field of length {len(self.values)}"
            )
        v = min(max(self.values[triangle], self.value_min), self.value_max)
        return (v - self.value_min) / (self.value_max - self.value_min)


@dataclass(frozen=True)
class HapticEffect:
    field: ScalarField
    force_min: float = 0.0
    force_max: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.force_min <= self.force_max <= 1.0):
            raise EffectError(
                f"forces must satisfy 0 <= min <= max <= 1, got {self.force_min}, {self.force_max}"
            )


RGB = tuple[float, float, float]


@dataclass(frozen=True)
class VisualEffect:
    field: ScalarField
    color_cold: RGB = (0.0, 0.0, 1.0)
    color_hot: RGB = (1.0, 0.0, 0.0)

    def __post_init__(self):
        for color in (self.color_cold, self.color_hot):
            for c in color:
                if not 0.0 <= c <= 1.0:
                    raise EffectError(f"color component out of [0,1]: {color}")


Effect = Union[AudioEffect, HapticEffect, VisualEffect]


def effect_type(effect: Effect) -> EffectType:
    if isinstance(effect, AudioEffect):
        return EffectType.AUDIO
    if isinstance(effect, HapticEffect):
        return EffectType.HAPTIC
    if isinstance(effect, VisualEffect):
        return EffectType.VISUAL
    raise EffectError(f"not an effect: {effect!r}")


class AudioRegistry:
    """Allocates buffer/source identifiers for registered audio payloads.

    Buffers are keyed by content identity (file path, or block digest) so the
    same file registered twice shares one buffer while every registration
    still gets its own source.  Counters only ever increase.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._buffers: dict[str, int] = {}
        self._next_buffer = 1
        self._next_source = 1

    def register(self, key: str) -> tuple[int, int]:
        with self._lock:
            buf = self._buffers.get(key)
            if buf is None:
                buf = self._next_buffer
                self._next_buffer += 1
                self._buffers[key] = buf
            src = self._next_source
            self._next_source += 1
            return buf, src


_default_registry = AudioRegistry()


def set_audio_data(
    effect: AudioEffect,
    source: Union[str, Path, bytes, Sequence[float], np.ndarray],
    registry: Optional[AudioRegistry] = None,
) -> AudioEffect:
    """Assign buffer/source ids from a file payload or an in-memory block.

    Raises on missing files and empty blocks; the input effect is returned
    untouched in that case (it is immutable, the ids stay 0).
    """
    registry = registry or _default_registry
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise EffectError(f"cannot read audio file {path}: {exc}") from exc
        key = f"file:{path.resolve()}"
    else:
        if isinstance(source, np.ndarray):
            data = source.tobytes()
        elif isinstance(source, bytes):
            data = source
        else:
            data = np.asarray(list(source), dtype=np.float64).tobytes()
        if len(data) == 0:
            raise EffectError("audio sample block is empty")
        key = "block:" + hashlib.sha1(data).hexdigest()
    buf, src = registry.register(key)
    return replace(effect, buffer_id=buf, source_id=src)


def synthesize_sine(w: SineWaveform, sample_rate: int = 44100) -> np.ndarray:
    n = max(1, int(round(w.duration_s * sample_rate)))
    t = np.arange(n, dtype=np.float64) / sample_rate
    return w.amp * np.sin(2.0 * np.pi * w.freq_hz * t)


def audio_gain(distance: float, ref_distance: float, rolloff: float, max_distance: float) -> float:
    """Inverse-distance gain, clamped to [ref_distance, max_distance].

    g(ref) = 1, non-increasing in distance, constant beyond max_distance.
    """
    d = min(max(distance, ref_distance), max_distance)
    return ref_distance / (ref_distance + rolloff * (d - ref_distance))


@dataclass(frozen=True)
class EffectEvent:
    tick: int
    effect_type: EffectType
    trigger: EventTrigger
    path: str
    param: float
    color: Optional[RGB] = None
    # Present on frame-trigger events only: which eye rendered the frame and
    # from where.  Stripped by canonical log merging.
    eye: Optional[str] = None
    viewpoint: Optional[tuple[float, float, float]] = None

    def to_json_obj(self) -> dict:
        obj: dict = {
            "tick": self.tick,
            "type": self.effect_type.value,
            "trigger": self.trigger.value,
            "path": self.path,
            "param": self.param,
        }
        if self.color is not None:
            obj["color"] = list(self.color)
        if self.eye is not None:
            obj["eye"] = self.eye
        if self.viewpoint is not None:
            obj["viewpoint"] = list(self.viewpoint)
        return obj


@dataclass(frozen=True)
class ListenerPose:
    position: Vec3
    rotation: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class PlayContext:
    """Everything playback may consult for one node visit at one tick."""

    tick: int
    world: Affine
    listener: ListenerPose
    pick: Optional[tuple[int, tuple[float, float, float]]] = None  # (triangle, barycentric)
    mesh: Optional[Mesh] = None  # target geometry, for field-over-surface effects
    path: str = ""


def haptic_sample(effect: HapticEffect, triangle: int) -> float:
    """Force in [force_min, force_max] for the field value at one triangle."""
    s = effect.field.normalized(triangle)
    return effect.force_min + s * (effect.force_max - effect.force_min)


def visual_color(effect: VisualEffect, triangle: int) -> RGB:
    """Component-wise cold-to-hot blend at the triangle's normalized value."""
    s = effect.field.normalized(triangle)
    return tuple(c + s * (h - c) for c, h in zip(effect.color_cold, effect.color_hot))


def _mean_normalized(effect: VisualEffect, mesh: Optional[Mesh]) -> float:
    values = np.clip(
        np.asarray(effect.field.values, dtype=np.float64),
        effect.field.value_min,
        effect.field.value_max,
    )
    normalized = (values - effect.field.value_min) / (
        effect.field.value_max - effect.field.value_min
    )
    if mesh is not None and mesh.triangle_count() == len(normalized):
        areas = triangle_areas(mesh)
        total = float(areas.sum())
        if total > 0.0:
            return float((normalized * areas).sum() / total)
    return float(normalized.mean())


def play(effect: Effect, ctx: PlayContext) -> list[EffectEvent]:
    """Fire one effect for one node visit; pure given its context.

    Continuous audio emits exactly one event per call; on-touch audio and
    haptic emit only when the visit carries a pick; visual emits one summary
    event per call (area-weighted mean color over the field).
    """
    kind = effect_type(effect)
    if kind is EffectType.AUDIO:
        assert isinstance(effect, AudioEffect)
        if not effect.initialized:
            raise EffectError("audio effect has no buffer/source ids; call set_audio_data first")
        if effect.trigger is AudioTrigger.ON_TOUCH and ctx.pick is None:
            return []
        distance = (ctx.listener.position - ctx.world.origin()).norm()
        gain = audio_gain(distance, effect.ref_distance, effect.rolloff, effect.max_distance)
        trigger = (
            EventTrigger.CONTINUOUS
            if effect.trigger is AudioTrigger.CONTINUOUS
            else EventTrigger.ON_TOUCH
        )
        return [EffectEvent(ctx.tick, EffectType.AUDIO, trigger, ctx.path, gain)]
    if kind is EffectType.HAPTIC:
        assert isinstance(effect, HapticEffect)
        if ctx.pick is None:
            return []
        triangle, _ = ctx.pick
        force = haptic_sample(effect, triangle)
        return [EffectEvent(ctx.tick, EffectType.HAPTIC, EventTrigger.ON_TOUCH, ctx.path, force)]
    assert isinstance(effect, VisualEffect)
    s = _mean_normalized(effect, ctx.mesh)
    color = tuple(c + s * (h - c) for c, h in zip(effect.color_cold, effect.color_hot))
    return [EffectEvent(ctx.tick, EffectType.VISUAL, EventTrigger.FRAME, ctx.path, s, color=color)]
