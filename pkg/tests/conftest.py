"""Shared test helpers: random scene generation and the independent pick oracle.

The oracle deliberately takes a different route from the implementation:
4x4 homogeneous matrices instead of affine pairs, and a 3x3 linear solve per
triangle instead of Moller-Trumbore.
"""

from __future__ import annotations

import math
import random

import numpy as np
from hypothesis import strategies as st

from sensegraph.effects import (
    AudioEffect,
    AudioTrigger,
    FileWaveform,
    HapticEffect,
    ScalarField,
    SineWaveform,
    VisualEffect,
)
from sensegraph import wire
from sensegraph.geometry import Mesh, Ray, Transform, Vec3
from sensegraph.mapping import MappingDescription, MappingEntry
from sensegraph.scene import (
    EffectGeoNode,
    GeoNode,
    GroupNode,
    SceneGraph,
    TransformNode,
    node_children,
)

DET_EPS = 1e-9
T_MIN = 1e-6


def random_unit_quat(rng: random.Random):
    # Uniform over SO(3) (Shoemake's method).
    u1, u2, u3 = rng.random(), rng.random(), rng.random()
    a, b = math.sqrt(1 - u1), math.sqrt(u1)
    return (
        a * math.sin(2 * math.pi * u2),
        a * math.cos(2 * math.pi * u2),
        b * math.sin(2 * math.pi * u3),
        b * math.cos(2 * math.pi * u3),
    )


def random_mesh(rng: random.Random, max_tris: int) -> Mesh:
    n_tris = rng.randint(1, max_tris)
    n_verts = n_tris + 2
    verts = tuple(
        Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n_verts)
    )
    # No repeated vertex triples: a duplicated triangle would make the
    # nearest-hit tie-break depend on last-ulp noise instead of geometry.
    tris = []
    seen = set()
    while len(tris) < n_tris:
        i, j, k = rng.sample(range(n_verts), 3)
        key = frozenset((i, j, k))
        if key in seen:
            continue
        seen.add(key)
        tris.append((i, j, k))
    return Mesh(vertices=verts, triangles=tuple(tris))


def random_transform(rng: random.Random) -> Transform:
    return Transform(
        translation=Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)),
        rotation=random_unit_quat(rng),
        scale=Vec3(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)),
    )


def random_scene(rng: random.Random, max_total_tris: int = 1000) -> SceneGraph:
    """Small random DAG with transform chains, shared meshes and a shared geo."""
    meshes = {}
    nodes = {}
    n_geo = rng.randint(1, 6)
    geo_ids = []
    budget = max_total_tris
    for g in range(n_geo):
        mid = f"mesh{g}"
        cap = max(1, budget // (n_geo - g + 1))
        mesh = random_mesh(rng, min(cap, 200))
        budget -= mesh.triangle_count()
        meshes[mid] = mesh
        gid = f"geo{g}"
        nodes[gid] = GeoNode(id=gid, mesh=mid)
        geo_ids.append(gid)

    top_children = []
    for c in range(rng.randint(1, 4)):
        chain = rng.randint(1, 3)
        child_id = rng.choice(geo_ids)
        prev = child_id
        for d in range(chain):
            tid = f"tr{c}_{d}"
            nodes[tid] = TransformNode(
                id=tid, transform=random_transform(rng), children=(prev,)
            )
            prev = tid
        top_children.append(prev)
    nodes["root"] = GroupNode(id="root", children=tuple(top_children))
    return SceneGraph(nodes=nodes, root="root", meshes=meshes)


def random_ray(rng: random.Random) -> Ray:
    # Origin on a sphere well outside the scene, aimed at a point near center.
    theta = rng.uniform(0, 2 * math.pi)
    z = rng.uniform(-1, 1)
    r = math.sqrt(1 - z * z)
    origin = Vec3(8 * r * math.cos(theta), 8 * r * math.sin(theta), 8 * z)
    target = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2))
    d = target - origin
    n = d.norm()
    return Ray(origin=origin, direction=Vec3(d.x / n, d.y / n, d.z / n))


def _mat4(t: Transform) -> np.ndarray:
    x, y, z, w = t.rotation
    n = math.sqrt(x * x + y * y + z * z + w * w)
    x, y, z, w = x / n, y / n, z / n, w / n
    rot = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
    m = np.eye(4)
    m[:3, :3] = rot @ np.diag([t.scale.x, t.scale.y, t.scale.z])
    m[:3, 3] = [t.translation.x, t.translation.y, t.translation.z]
    return m


def oracle_pick(graph: SceneGraph, ray: Ray):
    """Exhaustive scan of every triangle of every geometry instance.

    Returns (path, triangle index, distance) of the nearest hit or None, with
    the same (path, triangle) tie order the implementation promises.
    """
    hits: list[tuple[float, str, int]] = []
    o = np.array([ray.origin.x, ray.origin.y, ray.origin.z])
    d = np.array([ray.direction.x, ray.direction.y, ray.direction.z])

    def visit(node_id: str, path: str, world: np.ndarray) -> None:
        node = graph.nodes[node_id]
        if isinstance(node, TransformNode):
            world = world @ _mat4(node.transform)
        if isinstance(node, (GeoNode, EffectGeoNode)):
            mesh = graph.meshes[node.mesh]
            for tri_idx, (i, j, k) in enumerate(mesh.triangles):
                pts = []
                for vi in (i, j, k):
                    v = mesh.vertices[vi]
                    hom = world @ np.array([v.x, v.y, v.z, 1.0])
                    pts.append(hom[:3])
                v0, v1, v2 = pts
                a = np.column_stack([v1 - v0, v2 - v0, -d])
                if abs(np.linalg.det(a)) <= DET_EPS:
                    continue
                u, v, t = np.linalg.solve(a, o - v0)
                if u >= 0 and v >= 0 and u + v <= 1 and t >= T_MIN:
                    hits.append((float(t), path, tri_idx))
        for child in node_children(node):
            visit(child, f"{path}/{child}", world)

    visit(graph.root, f"/{graph.root}", np.eye(4))
    if not hits:
        return None
    return min(hits)


# --- mapping description strategies ---------------------------------------

_ids = st.from_regex(r"[a-z][a-z0-9_]{0,7}", fullmatch=True)
_paths = st.lists(_ids, min_size=1, max_size=4).map(lambda p: "/" + "/".join(p))
_plain = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e9, max_value=1e9)
_unit = st.floats(min_value=0.0, max_value=1.0)


@st.composite
def _audio_effects(draw):
    ref = draw(st.floats(min_value=1e-3, max_value=1e3))
    if draw(st.booleans()):
        waveform = SineWaveform(
            freq_hz=draw(st.floats(min_value=0.0, max_value=1e5)),
            amp=draw(_plain),
            duration_s=draw(st.floats(min_value=0.0, max_value=1e3)),
        )
    else:
        waveform = FileWaveform(path=draw(st.text(min_size=1, max_size=20)))
    return AudioEffect(
        trigger=draw(st.sampled_from(list(AudioTrigger))),
        waveform=waveform,
        ref_distance=ref,
        rolloff=draw(st.floats(min_value=0.0, max_value=1e3)),
        max_distance=ref + draw(st.floats(min_value=0.0, max_value=1e3)),
    )


@st.composite
def _scalar_fields(draw):
    vmin = draw(st.floats(min_value=-1e6, max_value=1e6))
    span = draw(st.floats(min_value=1e-3, max_value=1e6))
    return ScalarField(
        field_name=draw(st.text(min_size=1, max_size=12)),
        unit=draw(st.text(max_size=6)),
        values=tuple(draw(st.lists(_plain, min_size=1, max_size=8))),
        value_min=vmin,
        value_max=vmin + span,
    )


@st.composite
def _haptic_effects(draw):
    fmin = draw(_unit)
    return HapticEffect(
        field=draw(_scalar_fields()),
        force_min=fmin,
        force_max=fmin + (1.0 - fmin) * draw(_unit),
    )


_rgb = st.tuples(_unit, _unit, _unit)


@st.composite
def _visual_effects(draw):
    return VisualEffect(
        field=draw(_scalar_fields()),
        color_cold=draw(_rgb),
        color_hot=draw(_rgb),
    )


def mapping_entries():
    effects = st.one_of(_audio_effects(), _haptic_effects(), _visual_effects())
    return st.builds(MappingEntry, target=_paths, effect=effects)


def mapping_descriptions():
    return st.builds(
        MappingDescription,
        scene=st.text(max_size=20),
        entries=st.lists(mapping_entries(), max_size=6).map(tuple),
    )


# --- wire message strategies ----------------------------------------------

_f32 = st.floats(allow_nan=False, allow_infinity=False, width=32)
_v3f = st.tuples(_f32, _f32, _f32)
_q4f = st.tuples(_f32, _f32, _f32, _f32)
_u8 = st.integers(0, 255)
_u32 = st.integers(0, 2**32 - 1)
_wire_str = st.text(max_size=64)


def wire_messages():
    """Every message variant, valid field ranges only."""
    return st.one_of(
        st.just(wire.Heartbeat()),
        st.builds(
            wire.Hello,
            consumer_id=_u8,
            responsibilities=st.integers(0, 7),
            eye=st.integers(0, 2),
        ),
        st.builds(wire.LoadScene, scene_path=_wire_str, mapping_path=_wire_str),
        st.builds(wire.SceneLoaded, status=st.integers(0, 1), node_count=_u32),
        st.builds(wire.ViewpointUpdate, position=_v3f, rotation_quat=_q4f),
        st.builds(wire.Pick, origin=_v3f, direction=_v3f),
        st.builds(wire.ModeSwitch, mode=_u8),
        st.builds(wire.PlayAnimation, target_path=_wire_str, axis=_v3f, rad_per_tick=_f32),
        st.builds(wire.Gesture, gesture_id=st.integers(0, 1)),
        st.builds(wire.Tick, tick=_u32),
        st.builds(
            wire.EffectFired,
            effect_type=st.integers(0, 2),
            trigger=st.integers(0, 2),
            path=_wire_str,
            param=_f32,
            tick=_u32,
        ),
        st.builds(
            wire.Ack,
            acked_type=st.sampled_from(sorted(wire.ASSIGNED_TYPES)),
            tick=_u32,
            status=st.integers(0, 1),
        ),
    )
