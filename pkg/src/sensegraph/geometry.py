"""Vectors, quaternions, local transforms and their accumulated affine form.

Node-local transforms are translation/rotation/scale triples.  Accumulated
(world) transforms are kept as general affine maps because TRS triples are
not closed under composition once non-uniform scale meets rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Determinant cutoff below which a ray is treated as parallel to a triangle,
# and the minimum hit distance that rejects self-hits at the ray origin.
DET_EPSILON = 1e-9
MIN_HIT_DISTANCE = 1e-6

UNIT_EPSILON = 1e-6


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not math.isfinite(c):
                raise GeometryError(f"non-finite vector component: {c!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @staticmethod
    def from_seq(seq) -> "Vec3":
        x, y, z = seq
        return Vec3(float(x), float(y), float(z))

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


ZERO = Vec3(0.0, 0.0, 0.0)
ONES = Vec3(1.0, 1.0, 1.0)

# Quaternions are (x, y, z, w) tuples, matching the scene-file layout.
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (0.0, 0.0, 0.0, 1.0)


def quat_norm(q: Quat) -> float:
    return math.sqrt(sum(c * c for c in q))


def quat_normalize(q: Quat) -> Quat:
    n = quat_norm(q)
    if n == 0.0:
        raise GeometryError("cannot normalize zero quaternion")
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_multiply(a: Quat, b: Quat) -> Quat:
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return (
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    )


def quat_from_axis_angle(axis: Vec3, angle_rad: float) -> Quat:
    n = axis.norm()
    if n == 0.0:
        raise GeometryError("rotation axis must be non-zero")
    s = math.sin(angle_rad / 2.0) / n
    return (axis.x * s, axis.y * s, axis.z * s, math.cos(angle_rad / 2.0))


def quat_to_matrix(q: Quat) -> np.ndarray:
    """3x3 rotation matrix for a quaternion (normalized first)."""
    x, y, z, w = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    out = quat_to_matrix(q) @ v.as_array()
    return Vec3(float(out[0]), float(out[1]), float(out[2]))


@dataclass(frozen=True)
class Transform:
    """Node-local translation (m), unit rotation quaternion and per-axis scale."""

    translation: Vec3 = ZERO
    rotation: Quat = IDENTITY_QUAT
    scale: Vec3 = ONES

    def __post_init__(self):
        if abs(quat_norm(self.rotation) - 1.0) > UNIT_EPSILON:
            raise GeometryError(f"rotation quaternion not unit length: {self.rotation}")
        if self.scale.x <= 0 or self.scale.y <= 0 or self.scale.z <= 0:
            raise GeometryError(f"scale components must be strictly positive: {self.scale}")

    def as_affine(self) -> "Affine":
        linear = quat_to_matrix(self.rotation) @ np.diag(
            [self.scale.x, self.scale.y, self.scale.z]
        )
        return Affine(linear, self.translation.as_array())


IDENTITY_TRANSFORM = Transform()


class Affine:
    """General affine map p -> linear @ p + offset, closed under composition."""

    __slots__ = ("linear", "offset")

    def __init__(self, linear: np.ndarray, offset: np.ndarray):
        self.linear = np.asarray(linear, dtype=np.float64)
        self.offset = np.asarray(offset, dtype=np.float64)

    @staticmethod
    def identity() -> "Affine":
        return Affine(np.eye(3), np.zeros(3))

    def compose(self, child: "Affine") -> "Affine":
        """self applied after child's coordinates: world = self . child."""
        return Affine(self.linear @ child.linear, self.linear @ child.offset + self.offset)

    def apply(self, point: Vec3) -> Vec3:
        out = self.linear @ point.as_array() + self.offset
        return Vec3(float(out[0]), float(out[1]), float(out[2]))

    def apply_array(self, points: np.ndarray) -> np.ndarray:
        return points @ self.linear.T + self.offset

    def origin(self) -> Vec3:
        return Vec3(float(self.offset[0]), float(self.offset[1]), float(self.offset[2]))

    def almost_equal(self, other: "Affine", tol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.linear, other.linear, atol=tol)
            and np.allclose(self.offset, other.offset, atol=tol)
        )

    def __repr__(self):
        return f"Affine(linear={self.linear.tolist()}, offset={self.offset.tolist()})"


@dataclass(frozen=True)
class Mesh:
    """Indexed triangle mesh; triangles are (i, j, k) vertex-index triples."""

    vertices: tuple[Vec3, ...]
    triangles: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if len(self.triangles) < 1:
            raise GeometryError("mesh must contain at least one triangle")
        n = len(self.vertices)
        for tri in self.triangles:
            for idx in tri:
                if not 0 <= idx < n:
                    raise GeometryError(f"triangle index {idx} out of range (vertex count {n})")

    def triangle_count(self) -> int:
        return len(self.triangles)


# Mesh -> (vertex array, triangle index array), keyed by identity so repeated
# picks against the same immutable mesh skip the tuple-to-ndarray conversion.
_MESH_ARRAY_CACHE: dict[int, tuple[Mesh, np.ndarray, np.ndarray]] = {}


def mesh_arrays(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    cached = _MESH_ARRAY_CACHE.get(id(mesh))
    if cached is not None and cached[0] is mesh:
        return cached[1], cached[2]
    verts = np.array([v.as_tuple() for v in mesh.vertices], dtype=np.float64)
    tris = np.array(mesh.triangles, dtype=np.int64)
    _MESH_ARRAY_CACHE[id(mesh)] = (mesh, verts, tris)
    return verts, tris


def triangle_areas(mesh: Mesh) -> np.ndarray:
    verts, tris = mesh_arrays(mesh)
    a = verts[tris[:, 0]]
    b = verts[tris[:, 1]]
    c = verts[tris[:, 2]]
    cross = np.cross(b - a, c - a)
    return 0.5 * np.linalg.norm(cross, axis=1)


@dataclass(frozen=True)
class Ray:
    origin: Vec3
    direction: Vec3

    def __post_init__(self):
        if abs(self.direction.norm() - 1.0) > UNIT_EPSILON:
            raise GeometryError(f"ray direction must be unit length: {self.direction}")


def normalized_direction(v: Vec3) -> Vec3:
    n = v.norm()
    if n == 0.0:
        raise GeometryError("cannot normalize zero direction")
    return v.scaled(1.0 / n)


def intersect_triangles(
    origin: np.ndarray, direction: np.ndarray, verts: np.ndarray, tris: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Moller-Trumbore over all triangles at once.

    Returns (hit mask, t, u, v) where u/v weight the second/third triangle
    vertices.  Misses by parallelism, negative barycentrics or t below the
    self-hit cutoff are masked out.
    """
    v0 = verts[tris[:, 0]]
    e1 = verts[tris[:, 1]] - v0
    e2 = verts[tris[:, 2]] - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > DET_EPSILON
    inv_det = np.where(ok, det, 1.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) / inv_det
    qvec = np.cross(tvec, e1)
    v = np.einsum("j,ij->i", direction, qvec) / inv_det
    t = np.einsum("ij,ij->i", e2, qvec) / inv_det
    hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t >= MIN_HIT_DISTANCE)
    return hit, t, u, v
