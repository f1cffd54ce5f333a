"""Mapping files: attach effect descriptions to scene paths and rewrite graphs.

A mapping description pairs node paths with effect parameters.  Applying
it to a base graph yields the graph a display process actually walks: audio
sources become AudioNode children under their transform, touched or colored
surfaces become EffectGeoNodes, and everything outside the caller's
responsibilities is simply left out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .effects import (
    AudioEffect,
    AudioTrigger,
    Effect,
    EffectType,
    FileWaveform,
    HapticEffect,
    ScalarField,
    SineWaveform,
    VisualEffect,
    effect_type,
)
from .scene import (
    AudioNode,
    EffectGeoNode,
    GeoNode,
    SceneGraph,
    TransformNode,
    add_child,
    node_children,
    node_kind,
    replace_node,
)


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    entry_index: int
    code: str  # "missing_target" | "kind_mismatch" | "trigger_mismatch" | "field_length"
    message: str


class MappingValidationError(MappingError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        lines = "; ".join(f"entry {v.entry_index}: {v.message}" for v in violations)
        super().__init__(f"mapping fails validation: {lines}")


@dataclass(frozen=True)
class ResponsibilitySet:
    visual: bool = False
    audio: bool = False
    haptic: bool = False

    def includes(self, kind: EffectType) -> bool:
        return {
            EffectType.VISUAL: self.visual,
            EffectType.AUDIO: self.audio,
            EffectType.HAPTIC: self.haptic,
        }[kind]

    def to_mask(self) -> int:
        return (1 if self.visual else 0) | (2 if self.audio else 0) | (4 if self.haptic else 0)

    @staticmethod
    def from_mask(mask: int) -> "ResponsibilitySet":
        if not 0 <= mask <= 7:
            raise MappingError(f"responsibility mask out of range: {mask}")
        return ResponsibilitySet(
            visual=bool(mask & 1), audio=bool(mask & 2), haptic=bool(mask & 4)
        )

    def names(self) -> list[str]:
        out = []
        if self.visual:
            out.append("visual")
        if self.audio:
            out.append("audio")
        if self.haptic:
            out.append("haptic")
        return out

    @staticmethod
    def from_names(names) -> "ResponsibilitySet":
        allowed = {"visual", "audio", "haptic"}
        bad = [n for n in names if n not in allowed]
        if bad:
            raise MappingError(f"unknown responsibilities: {bad}")
        names = set(names)
        return ResponsibilitySet(
            visual="visual" in names, audio="audio" in names, haptic="haptic" in names
        )


FULL_RESPONSIBILITY = ResponsibilitySet(visual=True, audio=True, haptic=True)


@dataclass(frozen=True)
class MappingEntry:
    target: str
    effect: Effect


@dataclass(frozen=True)
class MappingDescription:
    scene: str
    entries: tuple[MappingEntry, ...] = field(default_factory=tuple)


# --- parsing ---------------------------------------------------------------


def _entry_error(index: int, msg: str) -> MappingError:
    return MappingError(f"entry {index}: {msg}")


def _require_keys(obj: dict, required: set, optional: set, index: int, what: str) -> None:
    missing = required - obj.keys()
    if missing:
        raise _entry_error(index, f"{what} missing field(s) {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise _entry_error(index, f"{what} has unknown field(s) {sorted(unknown)}")


def _parse_waveform(spec, index: int):
    if not isinstance(spec, dict) or len(spec) != 1:
        raise _entry_error(index, "waveform must be an object with exactly one of 'sine'/'file'")
    ((kind, body),) = spec.items()
    if not isinstance(body, dict):
        raise _entry_error(index, f"waveform {kind!r} body must be an object")
    if kind == "sine":
        _require_keys(body, {"freq_hz", "amp", "duration_s"}, set(), index, "sine waveform")
        return SineWaveform(
            freq_hz=float(body["freq_hz"]),
            amp=float(body["amp"]),
            duration_s=float(body["duration_s"]),
        )
    if kind == "file":
        _require_keys(body, {"path"}, set(), index, "file waveform")
        return FileWaveform(path=str(body["path"]))
    raise _entry_error(index, f"unknown waveform kind {kind!r}")


def _parse_field(spec: dict, index: int) -> ScalarField:
    return ScalarField(
        field_name=str(spec["field_name"]),
        unit=str(spec["unit"]),
        values=tuple(float(v) for v in spec["values"]),
        value_min=float(spec["value_min"]),
        value_max=float(spec["value_max"]),
    )


_FIELD_KEYS = {"field_name", "unit", "values", "value_min", "value_max"}


def _parse_effect(spec, index: int) -> Effect:
    if not isinstance(spec, dict) or "type" not in spec:
        raise _entry_error(index, "effect needs a 'type'")
    etype = spec["type"]
    try:
        if etype == "audio":
            _require_keys(
                spec,
                {"type", "trigger", "waveform"},
                {"ref_distance", "rolloff", "max_distance"},
                index,
                "audio effect",
            )
            trigger = spec["trigger"]
            if trigger not in ("continuous", "on_touch"):
                raise _entry_error(index, f"unknown audio trigger {trigger!r}")
            return AudioEffect(
                trigger=AudioTrigger(trigger),
                waveform=_parse_waveform(spec["waveform"], index),
                ref_distance=float(spec.get("ref_distance", 1.0)),
                rolloff=float(spec.get("rolloff", 1.0)),
                max_distance=float(spec.get("max_distance", 20.0)),
            )
        if etype == "haptic":
            _require_keys(
                spec, {"type"} | _FIELD_KEYS, {"force_min", "force_max"}, index, "haptic effect"
            )
            return HapticEffect(
                field=_parse_field(spec, index),
                force_min=float(spec.get("force_min", 0.0)),
                force_max=float(spec.get("force_max", 1.0)),
            )
        if etype == "visual":
            _require_keys(
                spec, {"type"} | _FIELD_KEYS, {"color_cold", "color_hot"}, index, "visual effect"
            )
            cold = spec.get("color_cold", (0.0, 0.0, 1.0))
            hot = spec.get("color_hot", (1.0, 0.0, 0.0))
            if len(cold) != 3 or len(hot) != 3:
                raise _entry_error(index, "colors must be [r, g, b]")
            return VisualEffect(
                field=_parse_field(spec, index),
                color_cold=tuple(float(c) for c in cold),
                color_hot=tuple(float(c) for c in hot),
            )
    except MappingError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise _entry_error(index, f"bad {etype} effect: {exc}") from exc
    raise _entry_error(index, f"unknown effect type {etype!r}")


def parse_mapping(text: str) -> MappingDescription:
    """Parse a mapping document; structural checks only.

    Checks that need the scene graph (target existence, kind pairing, field
    lengths) live in validate_mapping.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MappingError(f"malformed mapping document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MappingError("malformed mapping document: top level must be an object")
    unknown = doc.keys() - {"scene", "entries"}
    if unknown:
        raise MappingError(f"malformed mapping document: unknown key(s) {sorted(unknown)}")
    if "scene" not in doc or "entries" not in doc:
        raise MappingError("mapping document needs 'scene' and 'entries'")
    if not isinstance(doc["entries"], list):
        raise MappingError("'entries' must be a list")

    entries = []
    for i, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict):
            raise _entry_error(i, "entry must be an object")
        _require_keys(raw, {"target", "effect"}, set(), i, "entry")
        target = raw["target"]
        if not isinstance(target, str) or not target.startswith("/"):
            raise _entry_error(i, f"target must be an absolute path, got {target!r}")
        entries.append(MappingEntry(target=target, effect=_parse_effect(raw["effect"], i)))
    return MappingDescription(scene=str(doc["scene"]), entries=tuple(entries))


# --- serialization ---------------------------------------------------------


def _waveform_obj(w) -> dict:
    if isinstance(w, SineWaveform):
        return {"sine": {"freq_hz": w.freq_hz, "amp": w.amp, "duration_s": w.duration_s}}
    return {"file": {"path": w.path}}


def _effect_obj(effect: Effect) -> dict:
    if isinstance(effect, AudioEffect):
        return {
            "type": "audio",
            "trigger": effect.trigger.value,
            "waveform": _waveform_obj(effect.waveform),
            "ref_distance": effect.ref_distance,
            "rolloff": effect.rolloff,
            "max_distance": effect.max_distance,
        }
    f = effect.field
    obj = {
        "field_name": f.field_name,
        "unit": f.unit,
        "values": list(f.values),
        "value_min": f.value_min,
        "value_max": f.value_max,
    }
    if isinstance(effect, HapticEffect):
        obj.update({"type": "haptic", "force_min": effect.force_min, "force_max": effect.force_max})
    else:
        obj.update(
            {
                "type": "visual",
                "color_cold": list(effect.color_cold),
                "color_hot": list(effect.color_hot),
            }
        )
    return obj


def serialize_mapping(m: MappingDescription) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline.

    Serializing the same description twice yields identical bytes, which is
    what storage diffing and the byte-equality checks rely on.
    """
    doc = {
        "scene": m.scene,
        "entries": [
            {"target": e.target, "effect": _effect_obj(e.effect)} for e in m.entries
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --- validation ------------------------------------------------------------


def validate_mapping(graph: SceneGraph, m: MappingDescription) -> list[Violation]:
    """Graph-dependent checks; an empty list means apply_mapping may proceed."""
    violations: list[Violation] = []
    for i, entry in enumerate(m.entries):
        try:
            node = graph.node_at(entry.target)
        except Exception:
            violations.append(
                Violation(i, "missing_target", f"target {entry.target!r} not in scene")
            )
            continue
        kind = effect_type(entry.effect)
        if kind is EffectType.AUDIO:
            if isinstance(node, TransformNode):
                if entry.effect.trigger is not AudioTrigger.CONTINUOUS:
                    violations.append(
                        Violation(
                            i,
                            "trigger_mismatch",
                            f"audio on transform node {entry.target!r} must be continuous",
                        )
                    )
            elif isinstance(node, GeoNode):
                if entry.effect.trigger is not AudioTrigger.ON_TOUCH:
                    violations.append(
                        Violation(
                            i,
                            "trigger_mismatch",
                            f"audio on geo node {entry.target!r} must be on_touch",
                        )
                    )
            else:
                violations.append(
                    Violation(
                        i,
                        "kind_mismatch",
                        f"audio cannot target {node_kind(node)} node {entry.target!r}",
                    )
                )
        else:
            if not isinstance(node, GeoNode):
                violations.append(
                    Violation(
                        i,
                        "kind_mismatch",
                        f"{kind.value} effects target geo nodes, "
                        f"not {node_kind(node)} {entry.target!r}",
                    )
                )
            else:
                n_values = len(entry.effect.field.values)
                n_tris = graph.mesh_of(node).triangle_count()
                if n_values != n_tris:
                    violations.append(
                        Violation(
                            i,
                            "field_length",
                            f"field has {n_values} values but mesh of {entry.target!r} "
                            f"has {n_tris} triangles",
                        )
                    )
    return violations


# --- graph rewrite ---------------------------------------------------------


def apply_mapping(
    base: SceneGraph, m: MappingDescription, resp: ResponsibilitySet = FULL_RESPONSIBILITY
) -> SceneGraph:
    """Rewrite the base graph for one display's responsibilities.

    Transform-targeted audio entries append AudioNode children; geo-targeted
    entries replace the geo with an EffectGeoNode carrying the group's effects
    in entry order.  Entries outside resp contribute nothing, and a geo whose
    entries all filter away stays a plain GeoNode.

    New node ids derive from the unfiltered entry order ("audio_e3",
    "g__fx1"), so every responsibility subset names the nodes it does create
    identically.
    """
    violations = validate_mapping(base, m)
    if violations:
        raise MappingValidationError(violations)

    # Group geo-targeted entries by path, keeping unfiltered entry indexes.
    geo_groups: dict[str, list[tuple[int, Effect]]] = {}
    transform_audio: list[tuple[int, str, AudioEffect]] = []
    for i, entry in enumerate(m.entries):
        node = base.node_at(entry.target)
        if isinstance(node, TransformNode):
            transform_audio.append((i, entry.target, entry.effect))
        else:
            geo_groups.setdefault(entry.target, []).append((i, entry.effect))

    graph = base
    for i, target, effect in transform_audio:
        if not resp.audio:
            continue
        graph = add_child(graph, target, AudioNode(id=f"audio_e{i}", effect=effect))

    for target, group in geo_groups.items():
        kept = [eff for _, eff in group if resp.includes(effect_type(eff))]
        if not kept:
            continue
        old = base.node_at(target)
        assert isinstance(old, GeoNode)
        references = sum(
            1 for n in base.nodes.values() for c in node_children(n) if c == old.id
        )
        new_id = old.id if references <= 1 else f"{old.id}__fx{group[0][0]}"
        graph = replace_node(
            graph, target, EffectGeoNode(id=new_id, mesh=old.mesh, effects=tuple(kept))
        )
    return graph
