"""Small 3D math kit: quaternions, rigid transforms, spherical placement.

Conventions used throughout the package:
  * world frame is right-handed, Z up, gravity along -Z
  * quaternions are (w, x, y, z), unit-norm
  * rigid transforms store a 3x3 rotation matrix and a translation vector
  * angles are radians internally; file formats use degrees
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUAT_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def vec3(x, y=None, z=None) -> np.ndarray:
    if y is None:
        a = np.asarray(x, dtype=float)
        if a.shape != (3,):
            raise ValueError(f"expected 3-vector, got shape {a.shape}")
        return a
    return np.array([x, y, z], dtype=float)


def normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize zero vector")
    return v / n


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=float) / np.linalg.norm(q)


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = normalize(vec3(axis))
    half = 0.5 * angle_rad
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotation_about_z(angle_rad: float) -> np.ndarray:
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass
class RigidTransform:
    """Rotation + translation, mapping local coordinates into the parent frame."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_quat(cls, q, t=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(quat_to_matrix(np.asarray(q, dtype=float)), vec3(t))

    @classmethod
    def from_euler_deg(cls, rx: float, ry: float, rz: float, t=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """XYZ-intrinsic Euler angles in degrees (the scene-file convention)."""
        qx = quat_from_axis_angle((1, 0, 0), np.radians(rx))
        qy = quat_from_axis_angle((0, 1, 0), np.radians(ry))
        qz = quat_from_axis_angle((0, 0, 1), np.radians(rz))
        return cls(quat_to_matrix(quat_mul(quat_mul(qz, qy), qx)), vec3(t))

    def to_euler_deg(self) -> tuple[float, float, float]:
        """Inverse of from_euler_deg, for serialization."""
        r = self.rotation
        sy = -r[2, 0]
        sy = float(np.clip(sy, -1.0, 1.0))
        ry = np.arcsin(sy)
        if abs(sy) < 1.0 - 1e-9:
            rx = np.arctan2(r[2, 1], r[2, 2])
            rz = np.arctan2(r[1, 0], r[0, 0])
        else:
            rx = np.arctan2(-r[1, 2], r[1, 1])
            rz = 0.0
        return float(np.degrees(rx)), float(np.degrees(ry)), float(np.degrees(rz))

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def apply_vector(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.rotation.T

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: apply `other` first, then `self`."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def __eq__(self, other):
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return (np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.translation, other.translation))


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> RigidTransform:
    """Camera-to-world transform: camera at `eye` looking at `target`.

    Camera space is right-handed with +X right, +Y up, viewing along -Z.
    """
    eye = vec3(eye)
    fwd = normalize(vec3(target) - eye)
    upv = vec3(up)
    right = np.cross(fwd, upv)
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(fwd, (0.0, 1.0, 0.0))
    right = normalize(right)
    cam_up = np.cross(right, fwd)
    rot = np.stack([right, cam_up, -fwd], axis=1)
    return RigidTransform(rot, eye)


def spherical_offset(azimuth_rad: float, elevation_rad: float, distance: float,
                     axis: np.ndarray) -> np.ndarray:
    """Offset vector at (azimuth, elevation) from a reference direction.

    `axis` is the horizontal reference direction (e.g. subject-to-camera);
    azimuth rotates about +Z (positive = counter-clockwise seen from above),
    elevation lifts toward +Z.
    """
    axis = vec3(axis).copy()
    axis[2] = 0.0
    axis = normalize(axis)
    base = rotation_about_z(azimuth_rad) @ axis
    horiz = np.cos(elevation_rad) * distance
    return np.array([base[0] * horiz, base[1] * horiz, np.sin(elevation_rad) * distance])


def segment_point_distance(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = np.clip((p - a) @ ab / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def segment_segment_distance(p1, q1, p2, q2) -> float:
    """Minimum distance between segments [p1,q1] and [p2,q2]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    if a <= 1e-12 and e <= 1e-12:
        return float(np.linalg.norm(r))
    if a <= 1e-12:
        s, t = 0.0, np.clip(f / e, 0.0, 1.0)
    else:
        c = d1 @ r
        if e <= 1e-12:
            t, s = 0.0, np.clip(-c / a, 0.0, 1.0)
        else:
            b = d1 @ d2
            denom = a * e - b * b
            s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-12 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t, s = 0.0, np.clip(-c / a, 0.0, 1.0)
            elif t > 1.0:
                t, s = 1.0, np.clip((b - c) / a, 0.0, 1.0)
    closest1 = p1 + s * d1
    closest2 = p2 + t * d2
    return float(np.linalg.norm(closest1 - closest2))
