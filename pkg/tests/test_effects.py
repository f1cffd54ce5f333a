import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sensegraph.effects import (
    AudioEffect,
    AudioRegistry,
    AudioTrigger,
    EffectError,
    EffectEvent,
    EffectType,
    EventTrigger,
    HapticEffect,
    ListenerPose,
    PlayContext,
    ScalarField,
    SineWaveform,
    VisualEffect,
    audio_gain,
    haptic_sample,
    play,
    set_audio_data,
    synthesize_sine,
    visual_color,
)
from sensegraph.geometry import Affine, Mesh, Vec3


def field(values, vmin=0.0, vmax=100.0):
    return ScalarField(
        field_name="temperature", unit="C", values=tuple(values), value_min=vmin, value_max=vmax
    )


def ctx(listener=Vec3(0, 0, 0), pick=None, mesh=None, tick=0, world=None):
    return PlayContext(
        tick=tick,
        world=world or Affine.identity(),
        listener=ListenerPose(position=listener),
        pick=pick,
        mesh=mesh,
        path="/root/x",
    )


# --- gain model ------------------------------------------------------------


def test_gain_at_ref_is_one():
    assert audio_gain(1.0, 1.0, 1.0, 20.0) == 1.0
    assert audio_gain(3.0, 3.0, 0.7, 9.0) == 1.0


def test_gain_hand_values():
    assert audio_gain(2.0, 1.0, 1.0, 20.0) == pytest.approx(0.5)
    assert audio_gain(100.0, 1.0, 1.0, 20.0) == pytest.approx(0.05)


def test_gain_below_ref_clamps_to_one():
    assert audio_gain(0.25, 1.0, 1.0, 20.0) == 1.0


def test_gain_rolloff_scales_decay():
    assert audio_gain(2.0, 1.0, 2.0, 20.0) == pytest.approx(1.0 / 3.0)


gain_params = st.tuples(
    st.floats(min_value=0.01, max_value=10.0),   # ref
    st.floats(min_value=0.0, max_value=10.0),    # rolloff
    st.floats(min_value=0.0, max_value=100.0),   # extra range above ref
)


@settings(max_examples=1000)
@given(
    params=gain_params,
    d1=st.floats(min_value=0.0, max_value=200.0),
    d2=st.floats(min_value=0.0, max_value=200.0),
)
def test_gain_monotone_non_increasing(params, d1, d2):
    ref, rolloff, extra = params
    maxd = ref + extra
    lo, hi = sorted((d1, d2))
    assert audio_gain(lo, ref, rolloff, maxd) >= audio_gain(hi, ref, rolloff, maxd)


@given(params=gain_params, beyond=st.floats(min_value=0.0, max_value=1e6))
def test_gain_constant_beyond_max(params, beyond):
    ref, rolloff, extra = params
    maxd = ref + extra
    assert audio_gain(maxd + beyond, ref, rolloff, maxd) == audio_gain(maxd, ref, rolloff, maxd)


@given(params=gain_params, d=st.floats(min_value=0.0, max_value=1e6))
def test_gain_in_unit_interval(params, d):
    ref, rolloff, extra = params
    g = audio_gain(d, ref, rolloff, ref + extra)
    assert 0.0 < g <= 1.0


# --- validation ------------------------------------------------------------


def test_audio_effect_validation():
    with pytest.raises(EffectError):
        AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(440, 1, 1), ref_distance=0)
    with pytest.raises(EffectError):
        AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(440, 1, 1), rolloff=-1)
    with pytest.raises(EffectError):
        AudioEffect(
            trigger=AudioTrigger.CONTINUOUS,
            waveform=SineWaveform(440, 1, 1),
            ref_distance=5,
            max_distance=4,
        )


def test_scalar_field_window_validation():
    with pytest.raises(EffectError):
        field([1.0], vmin=5.0, vmax=5.0)


def test_haptic_force_range_validation():
    with pytest.raises(EffectError):
        HapticEffect(field=field([0.0]), force_min=0.5, force_max=0.2)
    with pytest.raises(EffectError):
        HapticEffect(field=field([0.0]), force_min=0.0, force_max=1.5)


def test_visual_color_validation():
    with pytest.raises(EffectError):
        VisualEffect(field=field([0.0]), color_cold=(0, 0, 2))


# --- sampling --------------------------------------------------------------


def test_haptic_sample_endpoints():
    f = field([0.0, 100.0])
    eff = HapticEffect(field=f, force_min=0.1, force_max=0.9)
    assert haptic_sample(eff, 0) == pytest.approx(0.1)
    assert haptic_sample(eff, 1) == pytest.approx(0.9)


def test_haptic_sample_midpoint():
    eff = HapticEffect(field=field([50.0]), force_min=0.0, force_max=1.0)
    assert haptic_sample(eff, 0) == pytest.approx(0.5)


def test_haptic_sample_clamps_out_of_window_values():
    eff = HapticEffect(field=field([-40.0, 400.0]), force_min=0.0, force_max=1.0)
    assert haptic_sample(eff, 0) == 0.0
    assert haptic_sample(eff, 1) == 1.0


def test_haptic_sample_index_error():
    eff = HapticEffect(field=field([50.0]))
    with pytest.raises(IndexError):
        haptic_sample(eff, 1)


def test_visual_color_endpoints_and_midpoint():
    eff = VisualEffect(field=field([0.0, 100.0, 50.0]))
    assert visual_color(eff, 0) == pytest.approx((0.0, 0.0, 1.0))
    assert visual_color(eff, 1) == pytest.approx((1.0, 0.0, 0.0))
    assert visual_color(eff, 2) == pytest.approx((0.5, 0.0, 0.5))


@given(
    value=st.floats(min_value=-50, max_value=150),
    fmin=st.floats(min_value=0.0, max_value=0.5),
    span=st.floats(min_value=0.0, max_value=0.5),
)
def test_haptic_sample_stays_in_declared_range(value, fmin, span):
    eff = HapticEffect(field=field([value]), force_min=fmin, force_max=fmin + span)
    assert fmin <= haptic_sample(eff, 0) <= fmin + span


# --- registry --------------------------------------------------------------


def test_registry_counters_start_at_one(tmp_path):
    wav = tmp_path / "beep.wav"
    wav.write_bytes(b"RIFF....WAVE" + bytes(64))
    reg = AudioRegistry()
    eff = AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(440, 1, 1))
    out = set_audio_data(eff, wav, registry=reg)
    assert (out.buffer_id, out.source_id) == (1, 1)
    assert out.initialized
    assert not eff.initialized  # input untouched


def test_registry_same_file_shares_buffer_not_source(tmp_path):
    wav = tmp_path / "beep.wav"
    wav.write_bytes(bytes(32))
    reg = AudioRegistry()
    eff = AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(440, 1, 1))
    a = set_audio_data(eff, wav, registry=reg)
    b = set_audio_data(eff, wav, registry=reg)
    assert a.buffer_id == b.buffer_id == 1
    assert (a.source_id, b.source_id) == (1, 2)


def test_registry_distinct_content_distinct_buffers(tmp_path):
    reg = AudioRegistry()
    eff = AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(440, 1, 1))
    a = set_audio_data(eff, b"\x01\x02", registry=reg)
    b = set_audio_data(eff, b"\x03\x04", registry=reg)
    assert a.buffer_id != b.buffer_id


def test_registry_block_without_filesystem():
    reg = AudioRegistry()
    eff = AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(220, 0.5, 0.1))
    samples = synthesize_sine(SineWaveform(220, 0.5, 0.1))
    out = set_audio_data(eff, samples, registry=reg)
    assert out.initialized
    # Equal sample content registers the same buffer.
    again = set_audio_data(eff, samples.copy(), registry=reg)
    assert again.buffer_id == out.buffer_id


def test_set_audio_data_missing_file():
    reg = AudioRegistry()
    eff = AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(440, 1, 1))
    with pytest.raises(EffectError):
        set_audio_data(eff, "/definitely/not/here.wav", registry=reg)
    assert eff.buffer_id == 0 and eff.source_id == 0


def test_set_audio_data_empty_block():
    reg = AudioRegistry()
    eff = AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(440, 1, 1))
    with pytest.raises(EffectError):
        set_audio_data(eff, b"", registry=reg)


def test_registry_thread_safety():
    reg = AudioRegistry()
    out = []

    def worker(i):
        for _ in range(50):
            out.append(reg.register(f"key{i % 3}"))

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    sources = [src for _, src in out]
    assert sorted(sources) == list(range(1, len(out) + 1))
    assert {buf for buf, _ in out} == {1, 2, 3}


def test_synthesize_sine_shape():
    w = SineWaveform(freq_hz=440.0, amp=0.5, duration_s=0.25)
    samples = synthesize_sine(w, sample_rate=8000)
    assert len(samples) == 2000
    assert np.abs(samples).max() <= 0.5 + 1e-12


# --- play ------------------------------------------------------------------


def registered(trigger=AudioTrigger.CONTINUOUS, **kw):
    eff = AudioEffect(trigger=trigger, waveform=SineWaveform(440, 1, 1), **kw)
    return set_audio_data(eff, b"\x00\x01", registry=AudioRegistry())


def test_play_continuous_audio_at_source():
    events = play(registered(), ctx(listener=Vec3(0, 0, 0)))
    assert len(events) == 1
    ev = events[0]
    assert ev.effect_type is EffectType.AUDIO
    assert ev.trigger is EventTrigger.CONTINUOUS
    assert ev.param == pytest.approx(1.0)
    assert ev.path == "/root/x"


def test_play_continuous_audio_at_double_ref():
    events = play(registered(), ctx(listener=Vec3(2, 0, 0)))
    assert events[0].param == pytest.approx(0.5)


def test_play_continuous_uses_node_world_position():
    world = Affine(np.eye(3), np.array([10.0, 0.0, 0.0]))
    events = play(registered(), ctx(listener=Vec3(8, 0, 0), world=world))
    assert events[0].param == pytest.approx(0.5)


def test_play_uninitialized_audio_raises():
    eff = AudioEffect(trigger=AudioTrigger.CONTINUOUS, waveform=SineWaveform(440, 1, 1))
    with pytest.raises(EffectError):
        play(eff, ctx())


def test_play_on_touch_audio_requires_pick():
    eff = registered(trigger=AudioTrigger.ON_TOUCH)
    assert play(eff, ctx()) == []
    events = play(eff, ctx(pick=(0, (1.0, 0.0, 0.0))))
    assert len(events) == 1
    assert events[0].trigger is EventTrigger.ON_TOUCH


def test_play_continuous_ignores_pick_presence():
    eff = registered()
    with_pick = play(eff, ctx(pick=(0, (1.0, 0.0, 0.0))))
    without = play(eff, ctx())
    assert with_pick == without


def test_play_haptic_requires_pick():
    eff = HapticEffect(field=field([25.0]), force_min=0.0, force_max=1.0)
    assert play(eff, ctx()) == []
    events = play(eff, ctx(pick=(0, (0.3, 0.3, 0.4))))
    assert len(events) == 1
    assert events[0].param == pytest.approx(0.25)
    assert events[0].trigger is EventTrigger.ON_TOUCH


def test_play_visual_emits_frame_summary():
    events = play(VisualEffect(field=field([0.0, 100.0])), ctx())
    assert len(events) == 1
    ev = events[0]
    assert ev.trigger is EventTrigger.FRAME
    assert ev.param == pytest.approx(0.5)
    assert ev.color == pytest.approx((0.5, 0.0, 0.5))


def test_play_visual_area_weighted_mean():
    # Triangle areas 0.5 and 1.0; normalized values 0 and 1.  The big hot
    # triangle dominates: weighted mean 2/3, not the plain mean 1/2.
    mesh = Mesh(
        vertices=(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(2, 0, 0)),
        triangles=((0, 1, 2), (0, 3, 2)),
    )
    events = play(VisualEffect(field=field([0.0, 100.0])), ctx(mesh=mesh))
    assert events[0].param == pytest.approx(2.0 / 3.0)


def test_play_deterministic():
    eff = VisualEffect(field=field([10.0, 60.0, 90.0]))
    c = ctx()
    assert play(eff, c) == play(eff, c)


def test_event_json_key_order():
    ev = EffectEvent(
        tick=3,
        effect_type=EffectType.VISUAL,
        trigger=EventTrigger.FRAME,
        path="/root/g",
        param=0.5,
        color=(0.5, 0.0, 0.5),
        eye="left",
        viewpoint=(0.0, 1.0, 2.0),
    )
    obj = ev.to_json_obj()
    assert list(obj) == ["tick", "type", "trigger", "path", "param", "color", "eye", "viewpoint"]
    plain = EffectEvent(
        tick=0,
        effect_type=EffectType.AUDIO,
        trigger=EventTrigger.CONTINUOUS,
        path="/root/a",
        param=1.0,
    ).to_json_obj()
    assert list(plain) == ["tick", "type", "trigger", "path", "param"]
