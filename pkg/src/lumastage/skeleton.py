"""Articulated capsule mannequin: skeleton definition, pose state, FK.

The mannequin is a 19-joint tree (pelvis root).  Bones are capsules between
a joint and its parent; each bone carries a radius and a share of body mass
taken from standard anthropometric tables.  Rest pose stands on z=0 facing
+X with the pelvis at ``pelvis_height * scale``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .geometry import (QUAT_IDENTITY, RigidTransform, quat_from_axis_angle,
                       quat_normalize, quat_to_matrix, segment_segment_distance, vec3)

SKELETON_SCHEMA = "lumastage-skeleton/1"
POSES_SCHEMA = "lumastage-poses/1"

MASS_SUM_TOL = 1e-6


@dataclass
class Bone:
    name: str            # named after its child joint
    parent_joint: str
    child_joint: str
    radius: float
    mass_fraction: float


@dataclass
class Skeleton:
    joint_names: list
    parents: dict                 # joint -> parent joint (None for root)
    offsets: dict                 # joint -> rest offset from parent, meters
    bones: list                   # list[Bone]
    scale: float = 1.0
    albedo: np.ndarray = field(default_factory=lambda: np.array([0.78, 0.64, 0.54]))

    def __post_init__(self):
        self.albedo = np.asarray(self.albedo, dtype=float).reshape(3)
        roots = [j for j in self.joint_names if self.parents.get(j) is None]
        if roots != ["pelvis"]:
            raise ValueError(f"skeleton must be a tree rooted at pelvis, roots={roots}")
        total = sum(b.mass_fraction for b in self.bones)
        if abs(total - 1.0) > MASS_SUM_TOL:
            raise ValueError(f"bone mass fractions sum to {total}, expected 1")

    def shoulder_width(self) -> float:
        l = np.linalg.norm(vec3(self.offsets["l_shoulder"]))
        r = np.linalg.norm(vec3(self.offsets["r_shoulder"]))
        return (l + r) * self.scale

    def rest_pelvis_height(self) -> float:
        """Pelvis z with soles on z=0 in the rest pose (from rest FK)."""
        caps = forward_kinematics(self, HumanState.rest())
        low = min(min(c.p0[2], c.p1[2]) - c.radius for c in caps)
        return -low


@dataclass
class HumanState:
    joint_rotations: dict                          # joint -> quaternion (w,x,y,z)
    root_rotation: np.ndarray = field(default_factory=lambda: QUAT_IDENTITY.copy())
    root_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.root_rotation = np.asarray(self.root_rotation, dtype=float).reshape(4)
        self.root_translation = np.asarray(self.root_translation, dtype=float).reshape(3)

    @classmethod
    def rest(cls) -> "HumanState":
        return cls(joint_rotations={})

    def rotation_for(self, joint: str) -> np.ndarray:
        return np.asarray(self.joint_rotations.get(joint, QUAT_IDENTITY), dtype=float)

    def validate(self):
        for name, q in list(self.joint_rotations.items()) + [("root", self.root_rotation)]:
            if abs(np.linalg.norm(q) - 1.0) > 1e-6:
                raise ValueError(f"quaternion for {name} not normalized: |q|={np.linalg.norm(q)}")

    def to_dict(self) -> dict:
        return {
            "joint_rotations": {k: [float(x) for x in v] for k, v in sorted(self.joint_rotations.items())},
            "root_rotation": [float(x) for x in self.root_rotation],
            "root_translation": [float(x) for x in self.root_translation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HumanState":
        return cls(joint_rotations={k: np.asarray(v, dtype=float)
                                    for k, v in d.get("joint_rotations", {}).items()},
                   root_rotation=d.get("root_rotation", QUAT_IDENTITY),
                   root_translation=d.get("root_translation", (0.0, 0.0, 0.0)))


@dataclass
class BoneCapsule:
    name: str
    p0: np.ndarray
    p1: np.ndarray
    radius: float

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p0 + self.p1)

    def length(self) -> float:
        return float(np.linalg.norm(self.p1 - self.p0))


@dataclass
class PosePreset:
    name: str
    joint_rotations: dict
    anchor_requirement: str | None = None


def forward_kinematics(skel: Skeleton, h: HumanState) -> list:
    """World-frame bone capsules for the given pose."""
    root = RigidTransform(quat_to_matrix(quat_normalize(h.root_rotation)),
                          h.root_translation)
    world: dict[str, RigidTransform] = {}
    positions: dict[str, np.ndarray] = {}
    for joint in skel.joint_names:
        parent = skel.parents.get(joint)
        local = RigidTransform(quat_to_matrix(quat_normalize(h.rotation_for(joint))),
                               vec3(skel.offsets[joint]) * skel.scale)
        if parent is None:
            world[joint] = root.compose(local)
        else:
            world[joint] = world[parent].compose(local)
        positions[joint] = world[joint].translation
    return [BoneCapsule(b.name, positions[b.parent_joint].copy(),
                        positions[b.child_joint].copy(), b.radius * skel.scale)
            for b in skel.bones]


def _perp_frame(axis: np.ndarray):
    """Deterministic perpendicular frame; second vector as vertical as possible."""
    n = np.linalg.norm(axis)
    a = axis / n if n > 1e-12 else np.array([0.0, 0.0, 1.0])
    u = np.cross(a, np.array([0.0, 0.0, 1.0]))
    if np.linalg.norm(u) < 1e-9:
        u = np.array([1.0, 0.0, 0.0])
    else:
        u = u / np.linalg.norm(u)
    v = np.cross(a, u)
    return a, u, v


def skeletal_samples(capsules, per_bone: int = 12) -> np.ndarray:
    """Deterministic sample points on each bone: axis run, side surface, tips.

    Layout per bone (per_bone >= 8): n_axis points along the axis (gap <=
    length/4), four mid-bone surface points at the capsule radius, and the
    two capsule tips.
    """
    if per_bone < 8:
        raise ValueError("per_bone must be >= 8")
    n_axis = per_bone - 6
    pts = []
    for cap in capsules:
        a, u, v = _perp_frame(cap.p1 - cap.p0)
        ts = np.linspace(0.0, 1.0, n_axis)
        axis_pts = cap.p0[None, :] + ts[:, None] * (cap.p1 - cap.p0)[None, :]
        mid = cap.midpoint()
        r = cap.radius
        side = np.stack([mid + r * u, mid - r * u, mid + r * v, mid - r * v])
        tips = np.stack([cap.p0 - r * a, cap.p1 + r * a])
        pts.append(np.concatenate([axis_pts, side, tips]))
    return np.concatenate(pts) if pts else np.zeros((0, 3))


def bone_sample_slices(n_bones: int, per_bone: int = 12):
    return [slice(i * per_bone, (i + 1) * per_bone) for i in range(n_bones)]


def center_of_mass(skel: Skeleton, capsules) -> np.ndarray:
    """Mass-weighted bone midpoints (capsule centroid equals axis midpoint)."""
    by_name = {c.name: c for c in capsules}
    com = np.zeros(3)
    for b in skel.bones:
        com += b.mass_fraction * by_name[b.name].midpoint()
    return com


def self_collision_free(skel: Skeleton, capsules, slack: float = 0.01) -> bool:
    """Capsule-capsule overlap test skipping adjacent bones.

    A pair is adjacent (and exempt, as in ragdoll collision masks) when the
    bones share a joint or any of their joints are parent/child in the tree.
    """
    joints_of = {b.name: {b.parent_joint, b.child_joint} for b in skel.bones}

    def adjacent(a_joints, b_joints):
        if a_joints & b_joints:
            return True
        for j in a_joints:
            for k in b_joints:
                if skel.parents.get(j) == k or skel.parents.get(k) == j:
                    return True
        return False

    for i, a in enumerate(capsules):
        for b in capsules[i + 1:]:
            if adjacent(joints_of[a.name], joints_of[b.name]):
                continue
            d = segment_segment_distance(a.p0, a.p1, b.p0, b.p1)
            if d < a.radius + b.radius - slack:
                return False
    return True


# ---------------------------------------------------------------- data files

def _read_package_json(relpath: str) -> dict:
    ref = resources.files("lumastage").joinpath("data").joinpath(relpath)
    return json.loads(ref.read_text(encoding="utf-8"))


def load_skeleton(data: dict | None = None) -> Skeleton:
    if data is None:
        data = _read_package_json("skeleton/default.json")
    if data.get("schema") != SKELETON_SCHEMA:
        raise ValueError(f"unsupported skeleton schema {data.get('schema')!r}")
    joint_names = [j["name"] for j in data["joints"]]
    parents = {j["name"]: j.get("parent") for j in data["joints"]}
    offsets = {j["name"]: vec3(j["offset"]) for j in data["joints"]}
    bones = [Bone(name=b["child"], parent_joint=parents[b["child"]], child_joint=b["child"],
                  radius=float(b["radius"]), mass_fraction=float(b["mass_fraction"]))
             for b in data["bones"]]
    return Skeleton(joint_names=joint_names, parents=parents, offsets=offsets,
                    bones=bones, scale=float(data.get("scale", 1.0)),
                    albedo=data.get("albedo", [0.78, 0.64, 0.54]))


def _rotations_from_spec(rots: list) -> dict:
    out: dict[str, np.ndarray] = {}
    for r in rots:
        q = quat_from_axis_angle(r["axis"], np.radians(r["deg"]))
        j = r["joint"]
        out[j] = quat_normalize(np.asarray(
            q if j not in out else _quat_mul_keep(out[j], q)))
    return out


def _quat_mul_keep(a, b):
    from .geometry import quat_mul
    return quat_mul(a, b)


def load_pose_presets(data: dict | None = None) -> dict:
    """Name -> PosePreset from the shipped pose preset file."""
    if data is None:
        data = _read_package_json("poses/presets.json")
    if data.get("schema") != POSES_SCHEMA:
        raise ValueError(f"unsupported poses schema {data.get('schema')!r}")
    out = {}
    for rec in data["presets"]:
        out[rec["name"]] = PosePreset(
            name=rec["name"],
            joint_rotations=_rotations_from_spec(rec.get("rotations", [])),
            anchor_requirement=rec.get("anchor_requirement"))
    return out
