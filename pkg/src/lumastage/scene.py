"""Static environment model: objects, emitters, occluder panels, scene file IO.

Scene files are JSON (schema ``lumastage-scene/1``), UTF-8, with angles in
degrees and lengths in meters.  Serialization is canonical (fixed key order,
2-space indent, trailing newline) so load→save round-trips byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import shapes
from .geometry import RigidTransform

SCENE_SCHEMA = "lumastage-scene/1"

SHAPE_KINDS = ("box", "sphere", "cylinder", "plane-quad")
EMITTER_KINDS = ("point", "spot", "rect-area", "disk-area", "directional", "env-dominant")
AFFORDANCE_TAGS = ("seat", "lean-surface", "stand-zone", "backdrop", "landmark", "table-surface")

DEFAULT_QUAD_THICKNESS = 0.02
DEFAULT_SPOT_ANGLE_DEG = 40.0


class SceneError(Exception):
    """Base class for scene loading problems."""


class SceneParseError(SceneError):
    pass


class SceneValidationError(SceneError):
    def __init__(self, message: str, entity_id: str | None = None):
        super().__init__(message if entity_id is None else f"{entity_id}: {message}")
        self.entity_id = entity_id


@dataclass
class SceneObject:
    id: str
    label: str
    shape: str
    transform: RigidTransform
    dimensions: dict
    albedo: np.ndarray
    affordances: frozenset = frozenset()

    def __post_init__(self):
        self.albedo = np.asarray(self.albedo, dtype=float).reshape(3)
        self.affordances = frozenset(self.affordances)

    def validate(self):
        if self.shape not in SHAPE_KINDS:
            raise SceneValidationError(f"unknown shape {self.shape!r}", self.id)
        for key, val in self.dimensions.items():
            if not val > 0:
                raise SceneValidationError(f"dimension {key} must be > 0, got {val}", self.id)
        if np.any(self.albedo < 0) or np.any(self.albedo > 1):
            raise SceneValidationError(f"albedo must be in [0,1], got {self.albedo.tolist()}", self.id)
        bad = set(self.affordances) - set(AFFORDANCE_TAGS)
        if bad:
            raise SceneValidationError(f"unknown affordance tags {sorted(bad)}", self.id)

    # local-frame half extents used by the kernels
    def _params(self):
        d = self.dimensions
        if self.shape == "box":
            return np.array([d["x"], d["y"], d["z"]]) * 0.5
        if self.shape == "sphere":
            return d["radius"]
        if self.shape == "cylinder":
            return d["radius"], d["height"] * 0.5
        if self.shape == "plane-quad":
            return (d["width"] * 0.5, d["height"] * 0.5,
                    d.get("thickness", DEFAULT_QUAD_THICKNESS) * 0.5)
        raise SceneValidationError(f"unknown shape {self.shape!r}", self.id)

    def contains(self, points: np.ndarray) -> np.ndarray:
        local = self.transform.inverse().apply(np.atleast_2d(points))
        if self.shape == "box":
            return shapes.box_contains(local, self._params())
        if self.shape == "sphere":
            return shapes.sphere_contains(local, self._params())
        if self.shape == "cylinder":
            r, hh = self._params()
            return shapes.cylinder_contains(local, r, hh)
        r = self._params()
        return shapes.quad_contains(local, r[0], r[1], r[2])

    def intersect(self, origins: np.ndarray, dirs: np.ndarray):
        """Ray hits in world frame: (t, world normal)."""
        inv = self.transform.inverse()
        o = inv.apply(origins)
        d = inv.apply_vector(dirs)
        if self.shape == "box":
            t, n = shapes.box_intersect(o, d, self._params())
        elif self.shape == "sphere":
            t, n = shapes.sphere_intersect(o, d, self._params())
        elif self.shape == "cylinder":
            r, hh = self._params()
            t, n = shapes.cylinder_intersect(o, d, r, hh)
        else:
            p = self._params()
            t, n = shapes.quad_intersect(o, d, p[0], p[1])
        return t, self.transform.apply_vector(n)

    def sample_surface(self, n: int, u: np.ndarray) -> np.ndarray:
        if self.shape == "box":
            pts = shapes.box_sample_surface(self._params(), n, u)
        elif self.shape == "sphere":
            pts = self._params() * shapes.fibonacci_sphere(n)
        elif self.shape == "cylinder":
            r, hh = self._params()
            pts = shapes.cylinder_sample_surface(r, hh, n, u)
        else:
            p = self._params()
            pts = shapes.quad_sample_surface(p[0], p[1], n, u)
        return self.transform.apply(pts)

    def aabb(self):
        """World-frame (min, max) corners."""
        if self.shape == "sphere":
            r = self._params()
            c = self.transform.translation
            return c - r, c + r
        if self.shape == "box":
            half = self._params()
        elif self.shape == "cylinder":
            r, hh = self._params()
            half = np.array([r, r, hh])
        else:
            p = self._params()
            half = np.array(p)
        corners = np.array([[sx * half[0], sy * half[1], sz * half[2]]
                            for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        world = self.transform.apply(corners)
        return world.min(axis=0), world.max(axis=0)

    def centroid(self) -> np.ndarray:
        return self.transform.translation.copy()


@dataclass
class Emitter:
    id: str
    kind: str
    transform: RigidTransform
    size: float = 0.0
    power: float = 0.0
    color_temp: float = 5500.0
    controllable: bool = False
    enabled: bool = True
    spot_angle_deg: float = DEFAULT_SPOT_ANGLE_DEG

    def validate(self):
        if self.kind not in EMITTER_KINDS:
            raise SceneValidationError(f"unknown emitter kind {self.kind!r}", self.id)
        if self.power < 0:
            raise SceneValidationError(f"power must be >= 0, got {self.power}", self.id)
        if self.kind in ("rect-area", "disk-area", "env-dominant") and not self.size > 0:
            raise SceneValidationError(f"area emitter needs size > 0, got {self.size}", self.id)
        if not (1500.0 <= self.color_temp <= 12000.0):
            raise SceneValidationError(
                f"color_temp must be in [1500, 12000] K, got {self.color_temp}", self.id)
        if self.kind == "env-dominant" and self.controllable:
            raise SceneValidationError("env-dominant emitters are non-controllable", self.id)

    @property
    def is_area(self) -> bool:
        return self.kind in ("rect-area", "disk-area", "env-dominant")

    def position(self) -> np.ndarray:
        return self.transform.translation.copy()


@dataclass
class OccluderPanel:
    id: str
    transform: RigidTransform
    width: float
    height: float

    def validate(self):
        if not (self.width > 0 and self.height > 0):
            raise SceneValidationError(
                f"panel extents must be > 0, got {self.width}x{self.height}", self.id)

    def intersect(self, origins: np.ndarray, dirs: np.ndarray):
        inv = self.transform.inverse()
        t, n = shapes.quad_intersect(inv.apply(origins), inv.apply_vector(dirs),
                                     self.width * 0.5, self.height * 0.5)
        return t, self.transform.apply_vector(n)


@dataclass
class Scene:
    objects: list = field(default_factory=list)
    emitters: list = field(default_factory=list)
    occluders: list = field(default_factory=list)
    ambient_env: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))
    voxel_resolution: float = 0.05

    def __post_init__(self):
        self.ambient_env = np.asarray(self.ambient_env, dtype=float).reshape(3)
        self.gravity = np.asarray(self.gravity, dtype=float).reshape(3)

    def validate(self):
        ids = [o.id for o in self.objects] + [e.id for e in self.emitters] \
            + [p.id for p in self.occluders]
        seen = set()
        for i in ids:
            if i in seen:
                raise SceneValidationError("duplicate id", i)
            seen.add(i)
        if not self.voxel_resolution > 0:
            raise SceneValidationError(f"voxel_resolution must be > 0, got {self.voxel_resolution}")
        if np.any(self.ambient_env < 0):
            raise SceneValidationError(f"ambient_env must be >= 0, got {self.ambient_env.tolist()}")
        for o in self.objects:
            o.validate()
        for e in self.emitters:
            e.validate()
        for p in self.occluders:
            p.validate()

    def object_by_id(self, oid: str) -> SceneObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    def emitter_by_id(self, eid: str) -> Emitter:
        for e in self.emitters:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def aabb(self):
        if not self.objects:
            z = np.zeros(3)
            return z, z
        los, his = zip(*(o.aabb() for o in self.objects))
        return np.min(los, axis=0), np.max(his, axis=0)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Direct primitive containment (union over objects)."""
        pts = np.atleast_2d(points)
        inside = np.zeros(len(pts), dtype=bool)
        for o in self.objects:
            inside |= o.contains(pts)
        return inside


# ---------------------------------------------------------------- file IO

def _transform_to_json(t: RigidTransform) -> dict:
    rx, ry, rz = t.to_euler_deg()
    return {"translation": [float(x) for x in t.translation],
            "rotation_deg": [round(rx, 9), round(ry, 9), round(rz, 9)]}


def _transform_from_json(d: dict) -> RigidTransform:
    rot = d.get("rotation_deg", [0.0, 0.0, 0.0])
    return RigidTransform.from_euler_deg(rot[0], rot[1], rot[2],
                                         d.get("translation", [0.0, 0.0, 0.0]))


def scene_to_dict(scene: Scene) -> dict:
    out = {"schema": SCENE_SCHEMA, "objects": [], "emitters": [], "occluders": [],
           "ambient_env": [float(x) for x in scene.ambient_env],
           "gravity": [float(x) for x in scene.gravity],
           "voxel_resolution": scene.voxel_resolution}
    for o in scene.objects:
        out["objects"].append({
            "id": o.id, "label": o.label, "shape": o.shape,
            "transform": _transform_to_json(o.transform),
            "dimensions": {k: float(v) for k, v in o.dimensions.items()},
            "albedo": [float(x) for x in o.albedo],
            "affordances": sorted(o.affordances),
        })
    for e in scene.emitters:
        rec = {"id": e.id, "kind": e.kind, "transform": _transform_to_json(e.transform),
               "size": float(e.size), "power": float(e.power),
               "color_temp": float(e.color_temp),
               "controllable": e.controllable, "enabled": e.enabled}
        if e.kind == "spot":
            rec["spot_angle_deg"] = float(e.spot_angle_deg)
        out["emitters"].append(rec)
    for p in scene.occluders:
        out["occluders"].append({"id": p.id, "transform": _transform_to_json(p.transform),
                                 "width": float(p.width), "height": float(p.height)})
    return out


def serialize_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2) + "\n"


def scene_from_dict(data: dict) -> Scene:
    if data.get("schema") != SCENE_SCHEMA:
        raise SceneValidationError(f"unsupported schema {data.get('schema')!r}")
    objects = []
    for rec in data.get("objects", []):
        try:
            objects.append(SceneObject(
                id=rec["id"], label=rec.get("label", rec["id"]), shape=rec["shape"],
                transform=_transform_from_json(rec.get("transform", {})),
                dimensions=dict(rec.get("dimensions", {})),
                albedo=rec.get("albedo", [0.5, 0.5, 0.5]),
                affordances=rec.get("affordances", []),
            ))
        except KeyError as exc:
            raise SceneValidationError(f"missing field {exc}", rec.get("id", "<object>"))
    emitters = []
    for rec in data.get("emitters", []):
        try:
            emitters.append(Emitter(
                id=rec["id"], kind=rec["kind"],
                transform=_transform_from_json(rec.get("transform", {})),
                size=float(rec.get("size", 0.0)), power=float(rec.get("power", 0.0)),
                color_temp=float(rec.get("color_temp", 5500.0)),
                controllable=bool(rec.get("controllable", False)),
                enabled=bool(rec.get("enabled", True)),
                spot_angle_deg=float(rec.get("spot_angle_deg", DEFAULT_SPOT_ANGLE_DEG)),
            ))
        except KeyError as exc:
            raise SceneValidationError(f"missing field {exc}", rec.get("id", "<emitter>"))
    occluders = []
    for rec in data.get("occluders", []):
        occluders.append(OccluderPanel(
            id=rec["id"], transform=_transform_from_json(rec.get("transform", {})),
            width=float(rec.get("width", 0.0)), height=float(rec.get("height", 0.0))))
    scene = Scene(objects=objects, emitters=emitters, occluders=occluders,
                  ambient_env=data.get("ambient_env", [0.0, 0.0, 0.0]),
                  gravity=data.get("gravity", [0.0, 0.0, -1.0]),
                  voxel_resolution=float(data.get("voxel_resolution", 0.05)))
    scene.validate()
    return scene


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneParseError(f"cannot read {path}: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"{path}: malformed JSON: {exc}")
    return scene_from_dict(data)


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(serialize_scene(scene), encoding="utf-8")
