"""Scene graph: typed nodes, DAG loading, transform-accumulating traversal,
ray picking and the editing primitives the mapping rewrite builds on.

Graphs are immutable values: every edit returns a new graph that shares
untouched node objects with the old one.  A node shared under several
parents is addressed per instance by its NodePath, a slash-joined id
sequence from the root ("/root/tr1/geo7").
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable, Iterator, Optional, Union

import numpy as np

from .effects import AudioEffect, Effect
from .geometry import (
    Affine,
    Mesh,
    Ray,
    Transform,
    Vec3,
    intersect_triangles,
    mesh_arrays,
)


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class GroupNode:
    id: str
    children: tuple[str, ...] = ()


@dataclass(frozen=True)
class TransformNode:
    id: str
    transform: Transform = Transform()
    children: tuple[str, ...] = ()


@dataclass(frozen=True)
class GeoNode:
    id: str
    mesh: str  # mesh-table key; instances may be shared between parents


@dataclass(frozen=True)
class AudioNode:
    id: str
    effect: AudioEffect


@dataclass(frozen=True)
class EffectGeoNode:
    id: str
    mesh: str
    effects: tuple[Effect, ...]

    def __post_init__(self):
        if len(self.effects) == 0:
            raise SceneError(f"effect-geo node {self.id!r} must carry at least one effect")


@dataclass(frozen=True)
class CameraNode:
    """Parsed and retained, but inert at runtime (viewpoint comes from the cluster)."""

    id: str


@dataclass(frozen=True)
class LightNode:
    """Parsed and retained, but inert (no shading happens here)."""

    id: str


Node = Union[GroupNode, TransformNode, GeoNode, AudioNode, EffectGeoNode, CameraNode, LightNode]

_KIND_NAMES = {
    GroupNode: "group",
    TransformNode: "transform",
    GeoNode: "geo",
    AudioNode: "audio",
    EffectGeoNode: "effect_geo",
    CameraNode: "camera",
    LightNode: "light",
}


def node_kind(node: Node) -> str:
    return _KIND_NAMES[type(node)]


def node_children(node: Node) -> tuple[str, ...]:
    if isinstance(node, (GroupNode, TransformNode)):
        return node.children
    return ()


# --- paths -----------------------------------------------------------------

def path_ids(path: str) -> list[str]:
    if not path.startswith("/") or path == "/":
        raise SceneError(f"malformed node path: {path!r}")
    parts = path[1:].split("/")
    if any(p == "" for p in parts):
        raise SceneError(f"malformed node path: {path!r}")
    return parts


def path_join(parent: str, child_id: str) -> str:
    return f"{parent}/{child_id}"


def path_parent(path: str) -> str:
    ids = path_ids(path)
    if len(ids) == 1:
        raise SceneError(f"root path {path!r} has no parent")
    return "/" + "/".join(ids[:-1])


def path_leaf(path: str) -> str:
    return path_ids(path)[-1]


@dataclass(frozen=True)
class SceneGraph:
    nodes: dict[str, Node]
    root: str
    meshes: dict[str, Mesh]

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise SceneError(f"unknown node id: {node_id!r}") from None

    def mesh_of(self, node: Union[GeoNode, EffectGeoNode]) -> Mesh:
        try:
            return self.meshes[node.mesh]
        except KeyError:
            raise SceneError(f"node {node.id!r} references unknown mesh {node.mesh!r}") from None

    def node_at(self, path: str) -> Node:
        ids = path_ids(path)
        if ids[0] != self.root:
            raise SceneError(f"path {path!r} does not start at root {self.root!r}")
        node = self.node(ids[0])
        for child_id in ids[1:]:
            if child_id not in node_children(node):
                raise SceneError(f"path {path!r}: {child_id!r} is not a child of {node.id!r}")
            node = self.node(child_id)
        return node

    def reachable_ids(self) -> set[str]:
        seen: set[str] = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            seen.add(nid)
            stack.extend(node_children(self.node(nid)))
        return seen


def validate_graph(graph: SceneGraph) -> None:
    """Check the full node table: resolvable references, no cycles, geometry
    indices in range.  Raises SceneError naming the offending id."""
    if graph.root not in graph.nodes:
        raise SceneError(f"dangling reference: root {graph.root!r} not in node table")
    for nid, node in graph.nodes.items():
        if node.id != nid:
            raise SceneError(f"node table key {nid!r} does not match node id {node.id!r}")
        kids = node_children(node)
        if len(set(kids)) != len(kids):
            raise SceneError(f"node {nid!r} lists the same child twice; paths would be ambiguous")
        for child in kids:
            if child not in graph.nodes:
                raise SceneError(f"dangling reference: {nid!r} lists unknown child {child!r}")
        if isinstance(node, (GeoNode, EffectGeoNode)):
            if node.mesh not in graph.meshes:
                raise SceneError(f"dangling reference: {nid!r} uses unknown mesh {node.mesh!r}")

    # Iterative three-color DFS over every table entry; a back edge is a cycle.
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {nid: WHITE for nid in graph.nodes}
    for start in graph.nodes:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, Iterator[str]]] = [(start, iter(node_children(graph.nodes[start])))]
        color[start] = GRAY
        while stack:
            nid, it = stack[-1]
            advanced = False
            for child in it:
                if color[child] == GRAY:
                    raise SceneError(f"cycle detected through node {child!r}")
                if color[child] == WHITE:
                    color[child] = GRAY
                    stack.append((child, iter(node_children(graph.nodes[child]))))
                    advanced = True
                    break
            if not advanced:
                color[nid] = BLACK
                stack.pop()


# --- scene file ------------------------------------------------------------

def load_scene(document: str) -> SceneGraph:
    """Parse the JSON scene format into a validated graph.

    Shared mesh references are preserved: the graph keeps one Mesh instance
    per mesh id no matter how many nodes use it.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SceneError(f"malformed scene document: {exc}") from exc
    if not isinstance(doc, dict):
        raise SceneError("malformed scene document: top level must be an object")
    for key in doc:
        if key not in ("meshes", "nodes", "root"):
            raise SceneError(f"malformed scene document: unknown top-level key {key!r}")
    if "nodes" not in doc or "root" not in doc:
        raise SceneError("malformed scene document: 'nodes' and 'root' are required")

    raw_meshes: dict[str, tuple[tuple[Vec3, ...], tuple[tuple[int, int, int], ...]]] = {}
    for mesh_id, spec in (doc.get("meshes") or {}).items():
        raw_meshes[mesh_id] = _parse_mesh_raw(mesh_id, spec)

    nodes: dict[str, Node] = {}
    for node_id, spec in doc["nodes"].items():
        nodes[node_id] = _parse_node(node_id, spec)

    # Range-check triangles only now, so the error can name the geo nodes
    # that use the offending mesh.
    meshes: dict[str, Mesh] = {}
    for mesh_id, (vertices, triangles) in raw_meshes.items():
        for tri in triangles:
            for idx in tri:
                if not 0 <= idx < len(vertices):
                    users = sorted(
                        n.id for n in nodes.values()
                        if isinstance(n, GeoNode) and n.mesh == mesh_id
                    )
                    used_by = f" (used by geo node(s) {', '.join(users)})" if users else ""
                    raise SceneError(
                        f"mesh {mesh_id!r}{used_by}: triangle index {idx} out of range "
                        f"(vertex count {len(vertices)})"
                    )
        meshes[mesh_id] = Mesh(vertices=vertices, triangles=triangles)

    graph = SceneGraph(nodes=nodes, root=doc["root"], meshes=meshes)
    validate_graph(graph)
    return graph


def _parse_mesh_raw(mesh_id: str, spec):
    if not isinstance(spec, dict) or "vertices" not in spec or "triangles" not in spec:
        raise SceneError(f"mesh {mesh_id!r}: needs 'vertices' and 'triangles'")
    try:
        vertices = tuple(Vec3.from_seq(v) for v in spec["vertices"])
    except (TypeError, ValueError) as exc:
        raise SceneError(f"mesh {mesh_id!r}: bad vertex data: {exc}") from exc
    try:
        triangles = tuple(tuple(int(x) for x in tri) for tri in spec["triangles"])
    except (TypeError, ValueError) as exc:
        raise SceneError(f"mesh {mesh_id!r}: bad triangle data: {exc}") from exc
    if any(len(t) != 3 for t in triangles):
        raise SceneError(f"mesh {mesh_id!r}: triangles must be index triples")
    if not triangles:
        raise SceneError(f"mesh {mesh_id!r}: must contain at least one triangle")
    return vertices, triangles


def _parse_transform(node_id: str, spec) -> Transform:
    try:
        translation = Vec3.from_seq(spec.get("translation", (0.0, 0.0, 0.0)))
        rq = spec.get("rotation_quat", (0.0, 0.0, 0.0, 1.0))
        rotation = (float(rq[0]), float(rq[1]), float(rq[2]), float(rq[3]))
        scale = Vec3.from_seq(spec.get("scale", (1.0, 1.0, 1.0)))
        return Transform(translation=translation, rotation=rotation, scale=scale)
    except (TypeError, ValueError, IndexError) as exc:
        raise SceneError(f"node {node_id!r}: bad transform: {exc}") from exc


def _parse_node(node_id: str, spec) -> Node:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SceneError(f"node {node_id!r}: needs a 'kind'")
    kind = spec["kind"]
    children = tuple(spec.get("children", ()))
    if kind == "group":
        return GroupNode(id=node_id, children=children)
    if kind == "transform":
        return TransformNode(
            id=node_id,
            transform=_parse_transform(node_id, spec.get("transform", {})),
            children=children,
        )
    if kind == "geo":
        if children:
            raise SceneError(f"node {node_id!r}: geo nodes cannot have children")
        if "mesh" not in spec:
            raise SceneError(f"node {node_id!r}: geo nodes need a 'mesh'")
        return GeoNode(id=node_id, mesh=spec["mesh"])
    if kind in ("camera", "light"):
        if children:
            raise SceneError(f"node {node_id!r}: {kind} nodes cannot have children")
        return CameraNode(id=node_id) if kind == "camera" else LightNode(id=node_id)
    raise SceneError(f"node {node_id!r}: unknown kind {kind!r}")


def dump_scene(graph: SceneGraph) -> str:
    """Serialize back to the scene file format (base-graph kinds only)."""
    meshes = {
        mid: {
            "vertices": [[v.x, v.y, v.z] for v in mesh.vertices],
            "triangles": [list(t) for t in mesh.triangles],
        }
        for mid, mesh in sorted(graph.meshes.items())
    }
    nodes = {}
    for nid, node in sorted(graph.nodes.items()):
        if isinstance(node, GroupNode):
            nodes[nid] = {"kind": "group", "children": list(node.children)}
        elif isinstance(node, TransformNode):
            t = node.transform
            nodes[nid] = {
                "kind": "transform",
                "children": list(node.children),
                "transform": {
                    "translation": [t.translation.x, t.translation.y, t.translation.z],
                    "rotation_quat": list(t.rotation),
                    "scale": [t.scale.x, t.scale.y, t.scale.z],
                },
            }
        elif isinstance(node, GeoNode):
            nodes[nid] = {"kind": "geo", "mesh": node.mesh}
        elif isinstance(node, CameraNode):
            nodes[nid] = {"kind": "camera"}
        elif isinstance(node, LightNode):
            nodes[nid] = {"kind": "light"}
        else:
            raise SceneError(f"cannot serialize runtime-only node kind: {node_kind(node)}")
    doc = {"meshes": meshes, "nodes": nodes, "root": graph.root}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --- traversal -------------------------------------------------------------

Visit = tuple[str, Affine, Node]


def traverse(
    graph: SceneGraph, visitor: Optional[Callable[[str, Affine, Node], None]] = None
) -> list[Visit]:
    """Depth-first pre-order walk from the root.

    A node shared under k paths is visited k times, once per path, each with
    the world transform accumulated along that path (left-to-right ancestor
    composition).
    """
    visits: list[Visit] = []

    def walk(node: Node, path: str, world: Affine) -> None:
        visits.append((path, world, node))
        if visitor is not None:
            visitor(path, world, node)
        for child_id in node_children(node):
            child = graph.node(child_id)
            child_world = world
            if isinstance(child, TransformNode):
                child_world = world.compose(child.transform.as_affine())
            walk(child, path_join(path, child_id), child_world)

    root = graph.node(graph.root)
    root_world = Affine.identity()
    if isinstance(root, TransformNode):
        root_world = root.transform.as_affine()
    walk(root, f"/{graph.root}", root_world)
    return visits


def world_transform(graph: SceneGraph, path: str) -> Affine:
    """World transform for one path, without walking the whole graph."""
    ids = path_ids(path)
    if ids[0] != graph.root:
        raise SceneError(f"path {path!r} does not start at root {graph.root!r}")
    node = graph.node(ids[0])
    world = Affine.identity()
    if isinstance(node, TransformNode):
        world = node.transform.as_affine()
    for child_id in ids[1:]:
        if child_id not in node_children(node):
            raise SceneError(f"path {path!r}: {child_id!r} is not a child of {node.id!r}")
        node = graph.node(child_id)
        if isinstance(node, TransformNode):
            world = world.compose(node.transform.as_affine())
    return world


# --- picking ---------------------------------------------------------------

@dataclass(frozen=True)
class PickResult:
    path: str
    triangle: int
    barycentric: tuple[float, float, float]
    point: Vec3
    distance: float


def ray_pick(graph: SceneGraph, ray: Ray) -> Optional[PickResult]:
    """Nearest triangle hit over every geometry instance, in world space.

    Equidistant hits resolve to the lexicographically smallest
    (path, triangle index), keeping replay deterministic.
    """
    origin = ray.origin.as_array()
    direction = ray.direction.as_array()
    best: Optional[tuple[float, str, int, float, float]] = None  # t, path, tri, u, v
    for path, world, node in traverse(graph):
        if not isinstance(node, (GeoNode, EffectGeoNode)):
            continue
        verts, tris = mesh_arrays(graph.mesh_of(node))
        world_verts = world.apply_array(verts)
        hit, t, u, v = intersect_triangles(origin, direction, world_verts, tris)
        if not hit.any():
            continue
        for idx in np.flatnonzero(hit):
            cand = (float(t[idx]), path, int(idx), float(u[idx]), float(v[idx]))
            if best is None or (cand[0], cand[1], cand[2]) < (best[0], best[1], best[2]):
                best = cand
    if best is None:
        return None
    t_best, path, tri, u, v = best
    point = Vec3(
        ray.origin.x + t_best * ray.direction.x,
        ray.origin.y + t_best * ray.direction.y,
        ray.origin.z + t_best * ray.direction.z,
    )
    return PickResult(
        path=path,
        triangle=tri,
        barycentric=(1.0 - u - v, u, v),
        point=point,
        distance=t_best,
    )


# --- editing ---------------------------------------------------------------

_CHILD_BEARING = (GroupNode, TransformNode)


def _check_child_kind(parent: Node, child: Node) -> None:
    if not isinstance(parent, _CHILD_BEARING):
        raise SceneError(
            f"node {parent.id!r} ({node_kind(parent)}) cannot hold children"
        )
    if isinstance(child, AudioNode) and not isinstance(parent, TransformNode):
        raise SceneError(
            f"audio node {child.id!r} must sit under a transform node, "
            f"not {node_kind(parent)} {parent.id!r}"
        )


def add_child(graph: SceneGraph, parent_path: str, node: Node) -> SceneGraph:
    """Append a node as the last child of the node at parent_path.

    Returns a new graph; all untouched nodes are shared with the input.
    """
    parent = graph.node_at(parent_path)
    _check_child_kind(parent, node)
    if node.id in graph.nodes:
        raise SceneError(f"node id {node.id!r} already present in graph")
    new_parent = replace(parent, children=parent.children + (node.id,))
    nodes = dict(graph.nodes)
    nodes[parent.id] = new_parent
    nodes[node.id] = node
    edited = replace(graph, nodes=nodes)
    validate_graph(edited)
    return edited


def replace_node(graph: SceneGraph, path: str, node: Node) -> SceneGraph:
    """Swap the node at one path for a replacement.

    Only the edge on this path is redirected: when the replaced node is
    shared, other paths keep reaching the original, and the replacement must
    then carry a fresh id.  An unshared node may be replaced under its own id.
    """
    old = graph.node_at(path)
    ids = path_ids(path)
    if len(ids) == 1:
        # Root slot: only child-bearing kinds may take it.
        if not isinstance(node, _CHILD_BEARING):
            raise SceneError(f"root must be a group or transform node, got {node_kind(node)}")
        if node.id != old.id and node.id in graph.nodes:
            raise SceneError(f"node id {node.id!r} already present in graph")
        nodes = dict(graph.nodes)
        nodes[node.id] = node
        edited = replace(graph, nodes=nodes, root=node.id)
        validate_graph(edited)
        return edited

    parent = graph.node_at(path_parent(path))
    _check_child_kind(parent, node)
    references = sum(
        1 for n in graph.nodes.values() for c in node_children(n) if c == old.id
    )
    if node.id == old.id:
        if references > 1:
            raise SceneError(
                f"node {old.id!r} is shared under {references} parents; "
                f"replacing one instance needs a fresh id"
            )
        nodes = dict(graph.nodes)
        nodes[node.id] = node
        edited = replace(graph, nodes=nodes)
        validate_graph(edited)
        return edited
    if node.id in graph.nodes:
        raise SceneError(f"node id {node.id!r} already present in graph")
    slot = parent.children.index(old.id)
    new_children = parent.children[:slot] + (node.id,) + parent.children[slot + 1 :]
    nodes = dict(graph.nodes)
    nodes[parent.id] = replace(parent, children=new_children)
    nodes[node.id] = node
    edited = replace(graph, nodes=nodes)
    validate_graph(edited)
    return edited


def set_transform(graph: SceneGraph, node_id: str, transform: Transform) -> SceneGraph:
    """Replace the transform of a transform node in place (same id, same edges)."""
    node = graph.node(node_id)
    if not isinstance(node, TransformNode):
        raise SceneError(f"node {node_id!r} is a {node_kind(node)}, not a transform node")
    nodes = dict(graph.nodes)
    nodes[node_id] = replace(node, transform=transform)
    return replace(graph, nodes=nodes)


def all_paths(graph: SceneGraph) -> list[str]:
    return [path for path, _, _ in traverse(graph)]


def count_reachable(graph: SceneGraph) -> int:
    return len(graph.reachable_ids())


def graphs_equal(a: SceneGraph, b: SceneGraph) -> bool:
    """Structural equality of the reachable part of two graphs."""
    if a.root != b.root:
        return False
    ra, rb = a.reachable_ids(), b.reachable_ids()
    if ra != rb:
        return False
    for nid in ra:
        if a.nodes[nid] != b.nodes[nid]:
            return False
    mesh_ids_a = {n.mesh for n in (a.nodes[i] for i in ra) if isinstance(n, (GeoNode, EffectGeoNode))}
    mesh_ids_b = {n.mesh for n in (b.nodes[i] for i in rb) if isinstance(n, (GeoNode, EffectGeoNode))}
    if mesh_ids_a != mesh_ids_b:
        return False
    return all(a.meshes[m] == b.meshes[m] for m in mesh_ids_a)
