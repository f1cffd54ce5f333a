import socket
import time

import pytest

from sensegraph.geometry import Vec3
from sensegraph.tracking import (
    GestureKind,
    TrackingError,
    TrackingReceiver,
    TrackingSample,
    gesture_window_tracker,
    parse_tracking_datagram,
    recognize_gesture,
)

IDENTITY = "1 0 0 0 1 0 0 0 1"


def test_parse_single_body():
    frame, samples = parse_tracking_datagram(
        f"fr 5\n6d 1 [0 1.000][100.0 200.0 300.0][{IDENTITY}]"
    )
    assert frame == 5
    (s,) = samples
    assert s.body_id == 0
    assert s.quality == pytest.approx(1.0)
    assert s.position == Vec3(100.0, 200.0, 300.0)
    assert s.rotation == (1, 0, 0, 0, 1, 0, 0, 0, 1)
    assert s.visible


def test_parse_frame_only():
    frame, samples = parse_tracking_datagram("fr 3")
    assert frame == 3
    assert samples == []


def test_parse_two_bodies():
    text = (
        "fr 9\n"
        f"6d 2 [0 1.0][1 2 3][{IDENTITY}] [7 0.5][4 5 6][{IDENTITY}]"
    )
    frame, samples = parse_tracking_datagram(text)
    assert frame == 9
    assert [s.body_id for s in samples] == [0, 7]
    assert samples[1].position == Vec3(4, 5, 6)


def test_parse_count_mismatch():
    with pytest.raises(TrackingError, match=r"line 2"):
        parse_tracking_datagram(f"fr 1\n6d 2 [0 1.0][1 2 3][{IDENTITY}]")


def test_parse_bad_first_line():
    with pytest.raises(TrackingError, match=r"line 1"):
        parse_tracking_datagram("frame 5")
    with pytest.raises(TrackingError, match=r"line 1"):
        parse_tracking_datagram("")
    with pytest.raises(TrackingError, match=r"line 1"):
        parse_tracking_datagram("fr five")


def test_parse_bad_rotation_rejected():
    with pytest.raises(TrackingError, match=r"orthonormal"):
        parse_tracking_datagram("fr 1\n6d 1 [0 1.0][0 0 0][1 0 0 0 1 0 0 0 2]")


def test_parse_invisible_body_skips_rotation_check():
    _, samples = parse_tracking_datagram("fr 1\n6d 1 [3 -1][0 0 0][0 0 0 0 0 0 0 0 0]")
    assert not samples[0].visible


def test_parse_extra_line_rejected():
    with pytest.raises(TrackingError, match=r"line 3"):
        parse_tracking_datagram(f"fr 1\n6d 1 [0 1.0][1 2 3][{IDENTITY}]\nfr 2")


def test_parse_wrong_number_count_in_group():
    with pytest.raises(TrackingError, match=r"expected 3 numbers"):
        parse_tracking_datagram(f"fr 1\n6d 1 [0 1.0][1 2][{IDENTITY}]")


# --- gestures --------------------------------------------------------------


def sample(frame, x, y=0.0, z=0.0, body=0, quality=1.0):
    return TrackingSample(
        frame=frame,
        body_id=body,
        quality=quality,
        position=Vec3(x, y, z),
        rotation=(1, 0, 0, 0, 1, 0, 0, 0, 1),
    )


def test_point_gesture():
    # 7 samples over 600 ms at 60 Hz (frames 6 apart), total drift 5 mm.
    window = [sample(i * 6, x=i * 0.8) for i in range(7)]
    assert recognize_gesture(window) is GestureKind.POINT


def test_swipe_gesture():
    # 350 mm lateral move over 300 ms.
    window = [sample(i * 6, x=i * 116.7) for i in range(4)]
    assert recognize_gesture(window) is GestureKind.SWIPE


def test_slow_drift_is_neither():
    # 110 mm over 2 s: too fast for Point, far too slow and long for Swipe.
    window = [sample(i * 12, x=i * 11.0) for i in range(11)]
    assert recognize_gesture(window) is None


def test_short_still_window_is_not_point_yet():
    # Stillness over only 300 ms misses the 500 ms span requirement.
    window = [sample(i * 6, x=0.0) for i in range(4)]
    assert recognize_gesture(window) is None


def test_fast_but_short_displacement_is_not_swipe():
    # Quick 100 mm move: speed disqualifies Point, distance disqualifies Swipe.
    window = [sample(0, 0.0), sample(6, 100.0)]
    assert recognize_gesture(window) is None


def test_gesture_window_validation():
    with pytest.raises(TrackingError, match=r">= 2"):
        recognize_gesture([sample(0, 0.0)])
    with pytest.raises(TrackingError, match=r"increasing"):
        recognize_gesture([sample(5, 0.0), sample(5, 1.0)])
    with pytest.raises(TrackingError, match=r"increasing"):
        recognize_gesture([sample(5, 0.0), sample(3, 1.0)])
    with pytest.raises(TrackingError, match=r"invisible"):
        recognize_gesture([sample(0, 0.0), sample(6, 1.0, quality=-1.0)])


def test_gesture_determinism():
    window = [sample(i * 6, x=i * 116.7) for i in range(4)]
    assert recognize_gesture(window) == recognize_gesture(window)


def test_window_tracker_fires_once_then_resets():
    push = gesture_window_tracker()
    fired = []
    for i in range(4):
        kind = push(sample(i * 6, x=i * 116.7))
        if kind:
            fired.append((i, kind))
    assert fired == [(3, GestureKind.SWIPE)]
    # Window was cleared; the next sample alone cannot re-fire.
    assert push(sample(30, x=500.0)) is None


def test_window_tracker_separates_bodies():
    push = gesture_window_tracker()
    for i in range(4):
        push(sample(i * 6, x=0.0, body=1))
        kind = push(sample(i * 6, x=i * 116.7, body=2))
    assert kind is GestureKind.SWIPE


# --- UDP receiver ----------------------------------------------------------


def test_receiver_parses_datagrams():
    received = []
    recv = TrackingReceiver(port=0, on_samples=lambda f, s: received.append((f, s)))
    recv.start()
    try:
        sender = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        payload = f"fr 5\n6d 1 [0 1.000][100.0 200.0 300.0][{IDENTITY}]".encode()
        sender.sendto(payload, ("127.0.0.1", recv.port))
        sender.sendto(b"garbage", ("127.0.0.1", recv.port))
        sender.sendto(b"fr 6", ("127.0.0.1", recv.port))
        sender.close()
        deadline = time.monotonic() + 5.0
        while time.monotonic() < deadline and len(received) < 2:
            time.sleep(0.01)
    finally:
        recv.stop()
    assert [f for f, _ in received] == [5, 6]
    assert received[0][1][0].position == Vec3(100.0, 200.0, 300.0)
    assert recv.errors == 1
