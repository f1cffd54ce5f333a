"""Display-side state machine.

A consumer owns one filtered copy of the scene and reacts to the message
stream from the session producer.  Everything here is pure over
ConsumerState so replays and tests can drive it without sockets; the
process entry point at the bottom adds the TCP/JSONL plumbing.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from ..effects import (
    AudioEffect,
    AudioRegistry,
    EffectEvent,
    EffectError,
    EffectType,
    EventTrigger,
    FileWaveform,
    ListenerPose,
    PlayContext,
    SineWaveform,
    play,
    set_audio_data,
    synthesize_sine,
)
from ..geometry import (
    IDENTITY_QUAT,
    Quat,
    Ray,
    Vec3,
    normalized_direction,
    quat_from_axis_angle,
    quat_multiply,
    quat_normalize,
    quat_rotate,
)
from ..mapping import MappingValidationError, ResponsibilitySet, parse_mapping, apply_mapping
from ..scene import (
    AudioNode,
    EffectGeoNode,
    GeoNode,
    SceneGraph,
    TransformNode,
    all_paths,
    count_reachable,
    load_scene,
    path_ids,
    ray_pick,
    set_transform,
    traverse,
)
from .. import wire

log = logging.getLogger(__name__)

EYE_NAMES = {wire.EYE_MONO: "mono", wire.EYE_LEFT: "left", wire.EYE_RIGHT: "right"}
DEFAULT_IPD = 0.064

_VALID_MODES = (wire.MODE_EXPLORATION, wire.MODE_SELECTION, wire.MODE_EDITING)


@dataclass(frozen=True)
class Animation:
    target_path: str
    axis: Vec3
    rad_per_tick: float


@dataclass(frozen=True)
class ConsumerState:
    responsibilities: ResponsibilitySet
    eye: str = "mono"
    ipd: float = DEFAULT_IPD
    graph: Optional[SceneGraph] = None
    pose_position: Vec3 = Vec3(0.0, 0.0, 0.0)
    pose_rotation: Quat = IDENTITY_QUAT
    mode: int = wire.MODE_EXPLORATION
    selected: Optional[str] = None
    pending_picks: tuple[Ray, ...] = ()
    animations: tuple[Animation, ...] = ()
    tick: int = -1  # last processed tick number


def eye_view(
    position: Vec3, rotation: Quat, eye: str, ipd: float = DEFAULT_IPD
) -> tuple[Vec3, Quat]:
    """Per-eye render pose: offset half the pupil distance along the local right axis."""
    if eye == "mono":
        return position, rotation
    right = quat_rotate(rotation, Vec3(1.0, 0.0, 0.0))
    half = ipd / 2.0
    if eye == "left":
        return position - right.scaled(half), rotation
    if eye == "right":
        return position + right.scaled(half), rotation
    raise ValueError(f"unknown eye {eye!r}")


def initialize_audio(graph: SceneGraph, storage: Path, registry: AudioRegistry) -> SceneGraph:
    """Register every audio effect's payload and bake the assigned ids back in.

    Nodes are visited in traversal order (first visit wins for shared nodes)
    so id assignment is reproducible for a given graph.
    """
    done: set[str] = set()
    nodes = dict(graph.nodes)
    for _, _, node in traverse(graph):
        if node.id in done:
            continue
        done.add(node.id)
        if isinstance(node, AudioNode):
            nodes[node.id] = replace(node, effect=load_audio_effect(node.effect, storage, registry))
        elif isinstance(node, EffectGeoNode):
            effects = tuple(
                load_audio_effect(e, storage, registry) if isinstance(e, AudioEffect) else e
                for e in node.effects
            )
            nodes[node.id] = replace(node, effects=effects)
    return replace(graph, nodes=nodes)


def load_audio_effect(effect: AudioEffect, storage: Path, registry: AudioRegistry) -> AudioEffect:
    w = effect.waveform
    if isinstance(w, FileWaveform):
        return set_audio_data(effect, storage / w.path, registry)
    if isinstance(w, SineWaveform):
        return set_audio_data(effect, synthesize_sine(w), registry)
    raise EffectError(f"unknown waveform {w!r}")


def consumer_load(
    state: ConsumerState, msg: wire.LoadScene, storage: Path
) -> tuple[ConsumerState, wire.SceneLoaded]:
    """Load scene + mapping from shared storage, filter by responsibilities.

    Any failure (missing file, bad document, mapping violations) reports an
    error status and leaves the state untouched.
    """
    registry = AudioRegistry()
    try:
        scene_text = (storage / msg.scene_path).read_text(encoding="utf-8")
        mapping_text = (storage / msg.mapping_path).read_text(encoding="utf-8")
        base = load_scene(scene_text)
        mapping = parse_mapping(mapping_text)
        graph = apply_mapping(base, mapping, state.responsibilities)
        graph = initialize_audio(graph, storage, registry)
    except (OSError, ValueError, MappingValidationError) as exc:
        log.warning("scene load failed: %s", exc)
        return state, wire.SceneLoaded(status=1, node_count=0)
    state = replace(
        state,
        graph=graph,
        selected=None,
        pending_picks=(),
        animations=(),
    )
    return state, wire.SceneLoaded(status=0, node_count=count_reachable(graph))


def _nearest_ancestor_transform(graph: SceneGraph, path: str) -> Optional[str]:
    ids = path_ids(path)
    for node_id in reversed(ids[:-1]):
        if isinstance(graph.node(node_id), TransformNode):
            return node_id
    return None


def handle_message(
    state: ConsumerState, msg: wire.Message
) -> tuple[ConsumerState, list[wire.Message]]:
    """Apply one non-Tick message; returns the new state and immediate replies."""
    if isinstance(msg, wire.Heartbeat):
        return state, []

    if isinstance(msg, wire.ModeSwitch):
        if msg.mode not in _VALID_MODES:
            reply = wire.Ack(
                acked_type=wire.TYPE_BYTES[wire.ModeSwitch], tick=state.tick + 1, status=1
            )
            return state, [reply]
        return replace(state, mode=msg.mode), []

    if isinstance(msg, wire.ViewpointUpdate):
        new_pos = Vec3(*msg.position)
        new_rot = quat_normalize(msg.rotation_quat)
        if (
            state.mode == wire.MODE_EDITING
            and state.selected is not None
            and state.graph is not None
        ):
            # Editing drag: the pose delta moves the selection instead of the
            # viewpoint.  The grabbed node is the selection's closest
            # enclosing transform; the viewpoint itself stays put.
            target = _nearest_ancestor_transform(state.graph, state.selected)
            if target is None:
                log.info("selected %s has no transform ancestor; drag ignored", state.selected)
                return state, []
            delta = new_pos - state.pose_position
            node = state.graph.node(target)
            assert isinstance(node, TransformNode)
            moved = replace(node.transform, translation=node.transform.translation + delta)
            return replace(state, graph=set_transform(state.graph, target, moved)), []
        return replace(state, pose_position=new_pos, pose_rotation=new_rot), []

    if isinstance(msg, wire.Pick):
        ray = Ray(Vec3(*msg.origin), normalized_direction(Vec3(*msg.direction)))
        return replace(state, pending_picks=state.pending_picks + (ray,)), []

    if isinstance(msg, wire.Gesture):
        if msg.gesture_id == wire.GESTURE_POINT and state.mode == wire.MODE_SELECTION:
            forward = quat_rotate(state.pose_rotation, Vec3(0.0, 0.0, -1.0))
            ray = Ray(state.pose_position, forward)
            return replace(state, pending_picks=state.pending_picks + (ray,)), []
        return state, []

    if isinstance(msg, wire.PlayAnimation):
        if state.graph is None or msg.target_path not in all_paths(state.graph):
            log.info("animation target %s not in scene; ignored", msg.target_path)
            return state, []
        leaf = path_ids(msg.target_path)[-1]
        if not isinstance(state.graph.node(leaf), TransformNode):
            log.info("animation target %s is not a transform node; ignored", msg.target_path)
            return state, []
        anim = Animation(msg.target_path, Vec3(*msg.axis), msg.rad_per_tick)
        return replace(state, animations=state.animations + (anim,)), []

    log.debug("message %s has no display-side handling", type(msg).__name__)
    return state, []


def consumer_step(
    state: ConsumerState, inbox: list[wire.Message]
) -> tuple[ConsumerState, list[EffectEvent], list[wire.Message]]:
    """Process a batch of messages ending in Tick and run one simulation step.

    Step order: animations advance, pending picks resolve, effects play over
    one traversal, per-geo frame events are emitted, then the feedback
    messages (EffectFired per event, Ack for the tick) are produced.
    """
    if not inbox or not isinstance(inbox[-1], wire.Tick):
        raise ValueError("inbox must end with a Tick message")
    feedback: list[wire.Message] = []
    for msg in inbox[:-1]:
        state, replies = handle_message(state, msg)
        feedback.extend(replies)
    tick_msg = inbox[-1]
    assert isinstance(tick_msg, wire.Tick)
    tick = tick_msg.tick

    if state.graph is None:
        # No scene yet: nothing to simulate, but the tick still acks.
        state = replace(state, tick=tick)
        feedback.append(wire.Ack(acked_type=wire.TYPE_BYTES[wire.Tick], tick=tick, status=0))
        return state, [], feedback

    graph = state.graph

    # 1. animations advance
    for anim in state.animations:
        leaf = path_ids(anim.target_path)[-1]
        node = graph.node(leaf)
        assert isinstance(node, TransformNode)
        step_rot = quat_from_axis_angle(anim.axis, anim.rad_per_tick)
        rotation = quat_normalize(quat_multiply(step_rot, node.transform.rotation))
        graph = set_transform(graph, leaf, replace(node.transform, rotation=rotation))

    # 2. pending picks resolve against the freshly animated graph
    picks: dict[str, tuple[int, tuple[float, float, float]]] = {}
    selected = state.selected
    for ray in state.pending_picks:
        hit = ray_pick(graph, ray)
        if hit is None:
            continue
        picks[hit.path] = (hit.triangle, hit.barycentric)
        if state.mode in (wire.MODE_SELECTION, wire.MODE_EDITING):
            selected = hit.path

    # 3. + 4. one traversal gathers both effect playback and frame events
    listener = ListenerPose(position=state.pose_position, rotation=state.pose_rotation)
    view_position, _ = eye_view(state.pose_position, state.pose_rotation, state.eye, state.ipd)
    viewpoint = (view_position.x, view_position.y, view_position.z)
    events: list[EffectEvent] = []
    frame_events: list[EffectEvent] = []
    for path, world, node in traverse(graph):
        if isinstance(node, AudioNode):
            ctx = PlayContext(tick=tick, world=world, listener=listener, path=path)
            events.extend(play(node.effect, ctx))
        elif isinstance(node, EffectGeoNode):
            ctx = PlayContext(
                tick=tick,
                world=world,
                listener=listener,
                pick=picks.get(path),
                mesh=graph.mesh_of(node),
                path=path,
            )
            for effect in node.effects:
                events.extend(play(effect, ctx))
        if state.responsibilities.visual and isinstance(node, (GeoNode, EffectGeoNode)):
            frame_events.append(
                EffectEvent(
                    tick=tick,
                    effect_type=EffectType.VISUAL,
                    trigger=EventTrigger.FRAME,
                    path=path,
                    param=0.0,
                )
            )
    events.extend(frame_events)

    # Frame-trigger events record which eye produced them and from where;
    # merged canonical logs strip both again.
    events = [
        replace(ev, eye=state.eye, viewpoint=viewpoint)
        if ev.trigger is EventTrigger.FRAME
        else ev
        for ev in events
    ]

    # 5. feedback
    for ev in events:
        feedback.append(
            wire.EffectFired(
                effect_type=wire.EFFECT_TYPE_CODES[ev.effect_type.value],
                trigger=wire.TRIGGER_CODES[ev.trigger.value],
                path=ev.path,
                param=ev.param,
                tick=tick,
            )
        )
    feedback.append(wire.Ack(acked_type=wire.TYPE_BYTES[wire.Tick], tick=tick, status=0))

    state = replace(
        state,
        graph=graph,
        selected=selected,
        pending_picks=(),
        tick=tick,
    )
    return state, events, feedback


# --- process entry point ---------------------------------------------------


def consumer_main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="headless display consumer")
    parser.add_argument("--host", required=True)
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--name", required=True, help="consumer id used for the log filename")
    parser.add_argument("--index", type=int, required=True, help="numeric id sent in Hello")
    parser.add_argument("--responsibilities", type=int, required=True, help="bitmask")
    parser.add_argument("--eye", choices=["mono", "left", "right"], default="mono")
    parser.add_argument("--storage", required=True)
    parser.add_argument("--ipd", type=float, default=DEFAULT_IPD)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format=f"[{args.name}] %(message)s")
    storage = Path(args.storage)
    state = ConsumerState(
        responsibilities=ResponsibilitySet.from_mask(args.responsibilities),
        eye=args.eye,
        ipd=args.ipd,
    )
    eye_code = {"mono": wire.EYE_MONO, "left": wire.EYE_LEFT, "right": wire.EYE_RIGHT}[args.eye]

    log_path = storage / f"{args.name}.events.jsonl"
    decoder = wire.StreamDecoder()

    sock = socket.create_connection((args.host, args.port), timeout=30.0)
    try:
        sock.sendall(
            wire.encode_message(
                wire.Hello(
                    consumer_id=args.index,
                    responsibilities=args.responsibilities,
                    eye=eye_code,
                )
            )
        )
        with log_path.open("w", encoding="utf-8") as log_file:
            while True:
                try:
                    chunk = sock.recv(65536)
                except socket.timeout:
                    continue
                if not chunk:
                    break
                for msg in decoder.feed(chunk):
                    if isinstance(msg, wire.LoadScene):
                        state, reply = consumer_load(state, msg, storage)
                        sock.sendall(wire.encode_message(reply))
                    elif isinstance(msg, wire.Tick):
                        state, events, feedback = consumer_step(state, [msg])
                        for ev in events:
                            log_file.write(
                                json.dumps(ev.to_json_obj(), separators=(",", ":")) + "\n"
                            )
                        log_file.flush()
                        out = b"".join(wire.encode_message(m) for m in feedback)
                        if out:
                            sock.sendall(out)
                    else:
                        state, replies = handle_message(state, msg)
                        # Replies outside a tick (the invalid-mode ack) go out
                        # immediately so sessions are not left waiting.
                        out = b"".join(wire.encode_message(m) for m in replies)
                        if out:
                            sock.sendall(out)
    except wire.ProtocolError as exc:
        log.error("protocol failure: %s", exc)
        return 1
    finally:
        sock.close()
    return 0
