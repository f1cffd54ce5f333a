"""Operator console API: scene inspection, mapping authoring, effect preview,
and live session control over HTTP.

The service embeds the scene/mapping/effects modules directly for the
configurator role and drives a lockstep session for the control role.  One
working mapping at a time; every mutation happens under one lock.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import asdict
from pathlib import Path
from typing import Any, Optional

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .effects import (
    AudioEffect,
    AudioRegistry,
    ListenerPose,
    PlayContext,
    play,
)
from .geometry import Affine, Vec3, intersect_triangles, mesh_arrays, normalized_direction
from .mapping import (
    MappingDescription,
    MappingError,
    parse_mapping,
    serialize_mapping,
    validate_mapping,
)
from .runtime.consumer import load_audio_effect
from .runtime.producer import ScriptError, SessionError, SessionDriver, ConsumerSpec
from .scene import (
    EffectGeoNode,
    GeoNode,
    SceneError,
    SceneGraph,
    TransformNode,
    all_paths,
    count_reachable,
    load_scene,
    node_children,
    node_kind,
    path_join,
    world_transform,
)
from .cluster import load_config

log = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, violations=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.violations = violations


class ConsoleState:
    def __init__(self, storage: Path):
        self.storage = Path(storage)
        self.lock = threading.Lock()
        self.graph: Optional[SceneGraph] = None
        self.scene_path: Optional[str] = None
        self.working: Optional[MappingDescription] = None
        self.driver: Optional[SessionDriver] = None


def _require_scene(state: ConsoleState) -> tuple[SceneGraph, MappingDescription]:
    if state.graph is None or state.working is None:
        raise ApiError(409, "no_scene", "load a scene before using the configurator")
    return state.graph, state.working


def _parse_candidate(state: ConsoleState, entries_json: list) -> MappingDescription:
    """Parse a full candidate description so schema errors name true indexes."""
    assert state.working is not None
    doc = {"scene": state.working.scene, "entries": entries_json}
    try:
        return parse_mapping(json.dumps(doc))
    except MappingError as exc:
        raise ApiError(422, "bad_entry", str(exc)) from exc


def _validated(state: ConsoleState, candidate: MappingDescription) -> MappingDescription:
    assert state.graph is not None
    violations = validate_mapping(state.graph, candidate)
    if violations:
        raise ApiError(
            422,
            "mapping_invalid",
            f"{len(violations)} validation violation(s)",
            violations=[asdict(v) for v in violations],
        )
    return candidate


def _working_entries_json(state: ConsoleState) -> list:
    assert state.working is not None
    return json.loads(serialize_mapping(state.working))["entries"]


def _tree_dto(state: ConsoleState) -> dict:
    graph, working = _require_scene(state)
    by_target: dict[str, list[int]] = {}
    for i, entry in enumerate(working.entries):
        by_target.setdefault(entry.target, []).append(i)

    def build(node_id: str, path: str, world: Affine) -> dict:
        node = graph.node(node_id)
        if isinstance(node, TransformNode):
            world = world.compose(node.transform.as_affine())
        origin = world.apply(Vec3(0.0, 0.0, 0.0))
        return {
            "path": path,
            "kind": node_kind(node),
            "world_origin": [origin.x, origin.y, origin.z],
            "mapped_effects": by_target.get(path, []),
            "children": [
                build(child, path_join(path, child), world)
                for child in node_children(node)
            ],
        }

    return build(graph.root, f"/{graph.root}", Affine.identity())


def _feedback_obj(consumer: str, msg) -> dict:
    return {"consumer": consumer, "message": {"type": type(msg).__name__, **asdict(msg)}}


def create_app(storage: Path, ui_dir: Optional[Path] = None) -> FastAPI:
    state = ConsoleState(storage)
    app = FastAPI(title="sensegraph console")
    app.state.console = state

    if ui_dir is not None:
        # Mount last-resort static serving for the browser UI so it shares
        # the API's origin; the API itself never depends on these files.
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        body: dict[str, Any] = {"code": exc.code, "message": exc.message}
        if exc.violations is not None:
            body["violations"] = exc.violations
        return JSONResponse(status_code=exc.status, content=body)

    # -- configurator: scene ------------------------------------------------

    @app.post("/scene/load")
    def scene_load(body: dict = Body(...)):
        scene_path = body.get("scene_path")
        if not isinstance(scene_path, str) or not scene_path:
            raise ApiError(400, "bad_request", "body needs a scene_path string")
        try:
            text = (state.storage / scene_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ApiError(404, "not_found", f"cannot read scene {scene_path}: {exc}")
        try:
            graph = load_scene(text)
        except SceneError as exc:
            raise ApiError(400, "bad_scene", str(exc))
        with state.lock:
            state.graph = graph
            state.scene_path = scene_path
            state.working = MappingDescription(scene=scene_path, entries=())
        # Shared nodes make path count exceed node count; the tree mirrors paths.
        return {
            "scene_path": scene_path,
            "node_count": count_reachable(graph),
            "path_count": len(all_paths(graph)),
        }

    @app.get("/scene/tree")
    def scene_tree():
        with state.lock:
            return _tree_dto(state)

    # -- configurator: mapping ---------------------------------------------

    @app.get("/mapping")
    def get_mapping():
        with state.lock:
            _, working = _require_scene(state)
            text = serialize_mapping(working)
        # Returned as pre-serialized bytes: the body is the canonical form,
        # identical to what the mapping file would contain.
        return Response(content=text, media_type="application/json")

    @app.put("/mapping")
    def put_mapping(body: dict = Body(...)):
        with state.lock:
            _require_scene(state)
            try:
                candidate = parse_mapping(json.dumps(body))
            except MappingError as exc:
                raise ApiError(422, "bad_mapping", str(exc)) from exc
            state.working = _validated(state, candidate)
            return json.loads(serialize_mapping(state.working))

    @app.post("/mapping/entries")
    def post_entry(body: dict = Body(...)):
        with state.lock:
            _require_scene(state)
            entries = _working_entries_json(state)
            entries.append(body)
            candidate = _parse_candidate(state, entries)
            state.working = _validated(state, candidate)
            return json.loads(serialize_mapping(state.working))

    @app.delete("/mapping/entries/{index}")
    def delete_entry(index: int):
        with state.lock:
            _, working = _require_scene(state)
            if not 0 <= index < len(working.entries):
                raise ApiError(
                    404, "bad_index", f"no entry {index}; mapping has {len(working.entries)}"
                )
            entries = _working_entries_json(state)
            del entries[index]
            state.working = _parse_candidate(state, entries)
            return json.loads(serialize_mapping(state.working))

    @app.post("/mapping/save")
    def save_mapping(body: dict = Body(...)):
        mapping_path = body.get("mapping_path")
        if not isinstance(mapping_path, str) or not mapping_path:
            raise ApiError(400, "bad_request", "body needs a mapping_path string")
        with state.lock:
            _, working = _require_scene(state)
            text = serialize_mapping(working)
        target = state.storage / mapping_path
        target.write_text(text, encoding="utf-8")
        return {"mapping_path": mapping_path, "bytes": len(text.encode("utf-8"))}

    # -- configurator: preview ---------------------------------------------

    @app.post("/preview")
    def preview(body: dict = Body(...)):
        with state.lock:
            graph, working = _require_scene(state)
        target = body.get("target")
        effect_spec = body.get("effect")
        trajectory = body.get("trajectory")
        ticks = body.get("ticks")
        if not isinstance(target, str) or effect_spec is None or not isinstance(
            trajectory, list
        ):
            raise ApiError(400, "bad_request", "preview needs target, effect, trajectory")
        if ticks is not None and ticks != len(trajectory):
            raise ApiError(
                422, "bad_ticks", f"ticks={ticks} but trajectory has {len(trajectory)} steps"
            )
        candidate = _parse_candidate(state, [{"target": target, "effect": effect_spec}])
        # Validated alone: preview is independent of the working entries.
        violations = validate_mapping(graph, candidate)
        if violations:
            raise ApiError(
                422,
                "mapping_invalid",
                "preview entry is invalid",
                violations=[asdict(v) for v in violations],
            )
        effect = candidate.entries[0].effect
        if isinstance(effect, AudioEffect):
            # A per-preview registry keeps this endpoint free of side effects.
            effect = load_audio_effect(effect, state.storage, AudioRegistry())
        world = world_transform(graph, target)
        node = graph.node(target.rsplit("/", 1)[-1])
        mesh = graph.mesh_of(node) if isinstance(node, (GeoNode, EffectGeoNode)) else None

        events = []
        for step_index, step in enumerate(trajectory):
            listener, pick = _preview_step(step, step_index, world, mesh)
            ctx = PlayContext(
                tick=step_index,
                world=world,
                listener=listener,
                pick=pick,
                mesh=mesh,
                path=target,
            )
            events.extend(play(effect, ctx))
        return [e.to_json_obj() for e in events]

    def _preview_step(step, index: int, world, mesh):
        """A trajectory step is a listener position [x,y,z] or a pick ray
        {origin, direction}; rays also place the listener at their origin."""
        if isinstance(step, list) and len(step) == 3:
            return ListenerPose(position=Vec3(*map(float, step))), None
        if isinstance(step, dict) and "origin" in step and "direction" in step:
            origin = Vec3(*map(float, step["origin"]))
            direction = normalized_direction(Vec3(*map(float, step["direction"])))
            pick = None
            if mesh is not None:
                verts, tris = mesh_arrays(mesh)
                world_verts = world.apply_array(verts)
                hit, t, u, v = intersect_triangles(
                    origin.as_array(), direction.as_array(), world_verts, tris
                )
                if hit.any():
                    best = min(
                        (float(t[i]), int(i)) for i in np.flatnonzero(hit)
                    )[1]
                    uu, vv = float(u[best]), float(v[best])
                    pick = (best, (1.0 - uu - vv, uu, vv))
            return ListenerPose(position=origin), pick
        raise ApiError(
            422,
            "bad_trajectory",
            f"step {index} must be [x,y,z] or {{origin, direction}}",
        )

    # -- live control -------------------------------------------------------

    @app.post("/control/attach")
    def attach(body: dict = Body(...)):
        config_path = body.get("config_path")
        if not isinstance(config_path, str) or not config_path:
            raise ApiError(400, "bad_request", "body needs a config_path string")
        with state.lock:
            if state.driver is not None:
                raise ApiError(409, "attached", "a producer session is already attached")
            try:
                config = load_config(state.storage / config_path)
            except (OSError, ValueError) as exc:
                raise ApiError(400, "bad_config", str(exc))
            specs = [
                ConsumerSpec(
                    name=c.id,
                    host=c.host,
                    responsibilities=c.responsibilities.to_mask(),
                    eye=c.eye,
                )
                for c in config.consumers
            ]
            driver = SessionDriver(
                specs,
                storage=config.storage_path,
                listen_host=config.listen_host,
                listen_port=config.listen_port,
                ipd=config.ipd,
                tracking_port=config.tracking_port,
            )
            try:
                driver.start()
            except SessionError as exc:
                driver.stop()
                raise ApiError(502, "session_failed", str(exc))
            state.driver = driver
        return {"consumers": [c.id for c in config.consumers], "port": driver.port}

    @app.post("/control/detach")
    def detach():
        with state.lock:
            if state.driver is None:
                raise ApiError(409, "no_producer", "no producer session is attached")
            state.driver.stop()
            state.driver = None
        return {"detached": True}

    @app.post("/control/command")
    def command(body: dict = Body(...)):
        line = body.get("line")
        if not isinstance(line, str):
            raise ApiError(400, "bad_request", "body needs a line string")
        driver = state.driver
        if driver is None:
            raise ApiError(409, "no_producer", "no producer session is attached")
        try:
            msg = driver.command(line)
        except ScriptError as exc:
            raise ApiError(400, "bad_command", str(exc))
        except SessionError as exc:
            raise ApiError(502, "session_failed", str(exc))
        return {"sent": None if msg is None else type(msg).__name__}

    @app.get("/control/feedback")
    def feedback_stream():
        driver = state.driver
        if driver is None:
            raise ApiError(409, "no_producer", "no producer session is attached")

        def stream():
            cursor = 0
            while state.driver is not None:
                cursor, items = state.driver.feedback_since(cursor)
                if not items:
                    time.sleep(0.05)
                    continue
                for name, msg in items:
                    yield f"data: {json.dumps(_feedback_obj(name, msg))}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/control/feedback/poll")
    def feedback_poll(cursor: int = 0):
        driver = state.driver
        if driver is None:
            raise ApiError(409, "no_producer", "no producer session is attached")
        new_cursor, items = driver.feedback_since(cursor)
        return {
            "cursor": new_cursor,
            "items": [_feedback_obj(name, msg) for name, msg in items],
        }

    return app
