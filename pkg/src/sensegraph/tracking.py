"""Motion-tracker input: ASCII datagram parsing and threshold gestures.

Datagrams use a line-oriented "fr/6d" grammar: a frame-counter line, then
optionally one body line carrying bracket groups.  Positions arrive in
millimeters.  The gesture recognizer turns a short window of samples into
Point (hold still) or Swipe (fast lateral move) using fixed thresholds.
"""

from __future__ import annotations

import re
import socket
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .geometry import Vec3

POINT_MAX_SPEED_MM_S = 50.0
POINT_MIN_SPAN_S = 0.5
SWIPE_MIN_DISTANCE_MM = 300.0
SWIPE_MAX_SPAN_S = 0.4
DEFAULT_RATE_HZ = 60.0


class TrackingError(ValueError):
    pass


@dataclass(frozen=True)
class TrackingSample:
    frame: int
    body_id: int
    quality: float  # -1 means the body was not visible this frame
    position: Vec3  # millimeters
    rotation: tuple[float, ...]  # 3x3, row-major

    @property
    def visible(self) -> bool:
        return self.quality >= 0.0


class GestureKind(Enum):
    POINT = "point"
    SWIPE = "swipe"


_BRACKET = re.compile(r"\[([^\]]*)\]")


def _floats(text: str, line_no: int, expected: int) -> list[float]:
    parts = text.split()
    if len(parts) != expected:
        raise TrackingError(
            f"line {line_no}: expected {expected} numbers, got {len(parts)} in {text!r}"
        )
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise TrackingError(f"line {line_no}: bad number in {text!r}") from exc


def _check_rotation(rot: list[float], line_no: int) -> None:
    # Row orthonormality within 1e-3 is enough to catch transposed or
    # truncated matrices without rejecting real tracker noise.
    rows = [rot[0:3], rot[3:6], rot[6:9]]
    for i in range(3):
        for j in range(3):
            dot = sum(a * b for a, b in zip(rows[i], rows[j]))
            want = 1.0 if i == j else 0.0
            if abs(dot - want) > 1e-3:
                raise TrackingError(f"line {line_no}: rotation matrix not orthonormal")


def parse_tracking_datagram(text: str) -> tuple[int, list[TrackingSample]]:
    """Parse one datagram: a "fr" line, then optionally one "6d" line."""
    lines = [ln for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise TrackingError("line 1: empty datagram")

    first = lines[0].split()
    if len(first) != 2 or first[0] != "fr":
        raise TrackingError(f"line 1: expected 'fr <frame>', got {lines[0]!r}")
    try:
        frame = int(first[1])
    except ValueError as exc:
        raise TrackingError(f"line 1: bad frame counter {first[1]!r}") from exc
    if frame < 0:
        raise TrackingError(f"line 1: negative frame counter {frame}")

    if len(lines) == 1:
        return frame, []
    if len(lines) > 2:
        raise TrackingError(f"line 3: unexpected extra line {lines[2]!r}")

    line = lines[1]
    head = line.split("[", 1)[0].split()
    if len(head) != 2 or head[0] != "6d":
        raise TrackingError(f"line 2: expected '6d <count>', got {line!r}")
    try:
        count = int(head[1])
    except ValueError as exc:
        raise TrackingError(f"line 2: bad body count {head[1]!r}") from exc

    groups = _BRACKET.findall(line)
    if len(groups) != 3 * count:
        raise TrackingError(
            f"line 2: body count {count} needs {3 * count} bracket groups, got {len(groups)}"
        )

    samples = []
    for b in range(count):
        id_quality = _floats(groups[3 * b], 2, 2)
        pos = _floats(groups[3 * b + 1], 2, 3)
        rot = _floats(groups[3 * b + 2], 2, 9)
        body_id = int(id_quality[0])
        quality = id_quality[1]
        if quality >= 0.0:
            _check_rotation(rot, 2)
        samples.append(
            TrackingSample(
                frame=frame,
                body_id=body_id,
                quality=quality,
                position=Vec3(pos[0], pos[1], pos[2]),
                rotation=tuple(rot),
            )
        )
    return frame, samples


def recognize_gesture(
    window: list[TrackingSample], rate_hz: float = DEFAULT_RATE_HZ
) -> Optional[GestureKind]:
    """Classify a time-ordered sample window, or None if nothing matches.

    Point wins when every inter-sample speed stays under 50 mm/s across a
    window of at least 500 ms; otherwise Swipe when the net displacement
    reaches 300 mm within 400 ms.  Point is checked first.
    """
    if len(window) < 2:
        raise TrackingError(f"gesture window needs >= 2 samples, got {len(window)}")
    for sample in window:
        if not sample.visible:
            raise TrackingError(f"gesture window contains invisible sample (frame {sample.frame})")
    frames = [s.frame for s in window]
    if any(b <= a for a, b in zip(frames, frames[1:])):
        raise TrackingError(f"gesture window frames not strictly increasing: {frames}")

    times = [f / rate_hz for f in frames]
    span = times[-1] - times[0]

    speeds = []
    for a, b, ta, tb in zip(window, window[1:], times, times[1:]):
        dist = (b.position - a.position).norm()
        speeds.append(dist / (tb - ta))
    if span >= POINT_MIN_SPAN_S and all(s < POINT_MAX_SPEED_MM_S for s in speeds):
        return GestureKind.POINT

    net = (window[-1].position - window[0].position).norm()
    if net >= SWIPE_MIN_DISTANCE_MM and span <= SWIPE_MAX_SPAN_S:
        return GestureKind.SWIPE
    return None


class TrackingReceiver:
    """Background UDP listener: one datagram in, one parsed callback out.

    Malformed datagrams are counted and dropped; a live tracker must never be
    able to kill the session loop.
    """

    def __init__(
        self,
        port: int,
        on_samples: Callable[[int, list[TrackingSample]], None],
        host: str = "127.0.0.1",
    ):
        self._on_samples = on_samples
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self._sock.settimeout(0.2)
        self._running = False
        self._thread: Optional[threading.Thread] = None
        self.errors = 0

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def start(self) -> None:
        self._running = True
        self._thread = threading.Thread(target=self._loop, name="tracking-udp", daemon=True)
        self._thread.start()

    def _loop(self) -> None:
        while self._running:
            try:
                data, _ = self._sock.recvfrom(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                frame, samples = parse_tracking_datagram(data.decode("utf-8", errors="strict"))
            except (TrackingError, UnicodeDecodeError):
                self.errors += 1
                continue
            self._on_samples(frame, samples)

    def stop(self) -> None:
        self._running = False
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None
        self._sock.close()


def gesture_window_tracker(
    rate_hz: float = DEFAULT_RATE_HZ,
    window_s: float = 1.0,
) -> Callable[[TrackingSample], Optional[GestureKind]]:
    """Stateful helper: push one sample per call, get a gesture when one fires.

    Keeps a sliding per-body window and reports a gesture at most once per
    window fill, resetting afterward so one long hold cannot fire twice.
    """
    windows: dict[int, list[TrackingSample]] = {}

    def push(sample: TrackingSample) -> Optional[GestureKind]:
        if not sample.visible:
            return None
        window = windows.setdefault(sample.body_id, [])
        window.append(sample)
        horizon = sample.frame - int(window_s * rate_hz)
        while window and window[0].frame < horizon:
            window.pop(0)
        if len(window) < 2:
            return None
        try:
            kind = recognize_gesture(window, rate_hz)
        except TrackingError:
            window.clear()
            return None
        if kind is not None:
            window.clear()
        return kind

    return push
