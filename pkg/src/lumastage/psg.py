"""Photographic scene graph: typed nodes/edges, metering, photometric probing.

Nodes come from authoritative scene labels plus body parts of the current
pose; spatial predicates are geometric (thresholds recorded in the graph
metadata).  Emitter structure is probed actively: isolated contributions by
ambient subtraction at a probe anchor, distance-normalized pairwise ratios.
Serialized as JSON (schema ``lumastage-psg/1``), including raw probe
measurements for audit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exposure import CameraState, K_METER, project
from .render import LightRig, probe_measure
from .scene import Scene

PSG_SCHEMA = "lumastage-psg/1"

NEAR_DISTANCE = 1.5          # m, centroid distance for `near`
SUPPORT_GAP = 0.06           # m, vertical adjacency for `supports`
CAMERA_LR_MARGIN = 0.02      # normalized image units
DEPTH_ORDER_MARGIN = 0.10    # m, for in-front-of/behind

BODY_PART_BONES = {
    "face": ("head",),
    "torso": ("spine", "chest", "neck", "l_shoulder", "r_shoulder"),
    "full-body": None,       # all bones
}

_AFFORDANCE_SALIENCE = {"landmark": 0.9, "seat": 0.7, "table-surface": 0.6,
                        "lean-surface": 0.55, "stand-zone": 0.4, "backdrop": 0.35}


@dataclass
class NonEmissiveNode:
    id: str
    kind: str                 # "scene-object" | "body-part"
    label: str
    affordances: frozenset
    centroid: np.ndarray
    aabb_lo: np.ndarray
    aabb_hi: np.ndarray
    metered_ev100: float | None = None
    salience: float = 0.5
    source_id: str | None = None     # scene object id or body-part name

    def to_dict(self):
        return {"id": self.id, "kind": self.kind, "label": self.label,
                "affordances": sorted(self.affordances),
                "centroid": [float(x) for x in self.centroid],
                "aabb": [[float(x) for x in self.aabb_lo], [float(x) for x in self.aabb_hi]],
                "metered_ev100": self.metered_ev100,
                "salience": self.salience, "source_id": self.source_id}


@dataclass
class EmissiveNode:
    id: str
    source: str               # emitter id
    role: str                 # "environmental-dominant" | "controllable"
    r_to_ambient: float | None = None      # None = unprobed; inf = no ambient

    def to_dict(self):
        r = self.r_to_ambient
        if r is not None and math.isinf(r):
            r = "inf"
        return {"id": self.id, "source": self.source, "role": self.role,
                "r_to_ambient": r}


@dataclass
class SpatialRelation:
    from_id: str
    to_id: str
    predicate: str
    frame: str = "world"
    confidence: float = 1.0
    camera_revision: int | None = None

    def to_dict(self):
        return {"from": self.from_id, "to": self.to_id, "predicate": self.predicate,
                "frame": self.frame, "confidence": self.confidence,
                "camera_revision": self.camera_revision}


@dataclass
class LightInfluence:
    emitter_node: str
    target_node: str
    delta_ev: float

    def to_dict(self):
        d = self.delta_ev
        return {"emitter": self.emitter_node, "target": self.target_node,
                "delta_ev": "inf" if math.isinf(d) else d}


@dataclass
class EmitterRatio:
    a: str
    b: str
    ratio: float
    d_a: float
    d_b: float
    delta_m_a: float
    delta_m_b: float

    def to_dict(self):
        return {"a": self.a, "b": self.b, "ratio": self.ratio,
                "d_a": self.d_a, "d_b": self.d_b,
                "delta_m_a": self.delta_m_a, "delta_m_b": self.delta_m_b}


@dataclass
class PhotoSceneGraph:
    non_emissive: list = field(default_factory=list)
    emissive: list = field(default_factory=list)
    n2n: list = field(default_factory=list)
    e2n: list = field(default_factory=list)
    e2e: list = field(default_factory=list)
    revision: int = 0
    probe_raw: dict = field(default_factory=dict)
    meta: dict = field(default_factory=lambda: {
        "near_distance_m": NEAR_DISTANCE, "support_gap_m": SUPPORT_GAP,
        "probe_distance_convention": "emitter-to-probe-center"})

    def node(self, nid: str) -> NonEmissiveNode:
        for n in self.non_emissive:
            if n.id == nid:
                return n
        raise KeyError(nid)

    def emissive_node(self, nid: str) -> EmissiveNode:
        for n in self.emissive:
            if n.id == nid:
                return n
        raise KeyError(nid)

    def validate(self):
        ids = {n.id for n in self.non_emissive} | {n.id for n in self.emissive}
        for rel in self.n2n:
            if rel.from_id not in ids or rel.to_id not in ids:
                raise ValueError(f"dangling edge {rel.from_id}->{rel.to_id}")
        pair = {(r.a, r.b): r.ratio for r in self.e2e}
        for (a, b), r in pair.items():
            rev = pair.get((b, a))
            if rev is not None and r > 0 and abs(r * rev - 1.0) > 1e-6:
                raise ValueError(f"ratio reciprocity violated for {a},{b}")

    def bump(self):
        self.revision += 1

    def to_dict(self) -> dict:
        return {"schema": PSG_SCHEMA, "revision": self.revision,
                "non_emissive": [n.to_dict() for n in self.non_emissive],
                "emissive": [n.to_dict() for n in self.emissive],
                "n2n": [e.to_dict() for e in self.n2n],
                "e2n": [e.to_dict() for e in self.e2n],
                "e2e": [e.to_dict() for e in self.e2e],
                "probe_raw": self.probe_raw, "meta": self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "PhotoSceneGraph":
        if d.get("schema") != PSG_SCHEMA:
            raise ValueError(f"unsupported graph schema {d.get('schema')!r}")
        g = cls(revision=int(d.get("revision", 0)),
                probe_raw=d.get("probe_raw", {}), meta=d.get("meta", {}))
        for n in d.get("non_emissive", []):
            g.non_emissive.append(NonEmissiveNode(
                id=n["id"], kind=n["kind"], label=n["label"],
                affordances=frozenset(n.get("affordances", [])),
                centroid=np.array(n["centroid"], dtype=float),
                aabb_lo=np.array(n["aabb"][0], dtype=float),
                aabb_hi=np.array(n["aabb"][1], dtype=float),
                metered_ev100=n.get("metered_ev100"),
                salience=float(n.get("salience", 0.5)),
                source_id=n.get("source_id")))
        for n in d.get("emissive", []):
            r = n.get("r_to_ambient")
            g.emissive.append(EmissiveNode(
                id=n["id"], source=n["source"], role=n["role"],
                r_to_ambient=math.inf if r == "inf" else r))
        for e in d.get("n2n", []):
            g.n2n.append(SpatialRelation(e["from"], e["to"], e["predicate"],
                                         e.get("frame", "world"),
                                         float(e.get("confidence", 1.0)),
                                         e.get("camera_revision")))
        for e in d.get("e2n", []):
            dv = e["delta_ev"]
            g.e2n.append(LightInfluence(e["emitter"], e["target"],
                                        math.inf if dv == "inf" else float(dv)))
        for e in d.get("e2e", []):
            g.e2e.append(EmitterRatio(e["a"], e["b"], float(e["ratio"]),
                                      float(e["d_a"]), float(e["d_b"]),
                                      float(e["delta_m_a"]), float(e["delta_m_b"])))
        return g


# ---------------------------------------------------------------- construction

def _xy_overlap(lo_a, hi_a, lo_b, hi_b) -> bool:
    return (lo_a[0] <= hi_b[0] and lo_b[0] <= hi_a[0]
            and lo_a[1] <= hi_b[1] and lo_b[1] <= hi_a[1])


def _capsule_bounds(caps: list) -> tuple:
    lo = np.min([np.minimum(c.p0, c.p1) - c.radius for c in caps], axis=0)
    hi = np.max([np.maximum(c.p0, c.p1) + c.radius for c in caps], axis=0)
    return lo, hi


def body_part_nodes(capsules: list) -> list:
    by = {c.name: c for c in capsules}
    nodes = []
    for part, bone_names in BODY_PART_BONES.items():
        caps = capsules if bone_names is None else [by[b] for b in bone_names if b in by]
        if not caps:
            continue
        lo, hi = _capsule_bounds(caps)
        centroid = np.mean([c.midpoint() for c in caps], axis=0)
        nodes.append(NonEmissiveNode(
            id=f"body:{part}", kind="body-part", label=part,
            affordances=frozenset(), centroid=centroid, aabb_lo=lo, aabb_hi=hi,
            salience=1.0, source_id=part))
    return nodes


def build_initial_graph(scene: Scene, capsules: list | None = None,
                        camera: CameraState | None = None) -> PhotoSceneGraph:
    g = PhotoSceneGraph()
    for obj in scene.objects:
        lo, hi = obj.aabb()
        sal = max([_AFFORDANCE_SALIENCE.get(a, 0.3) for a in obj.affordances],
                  default=0.3)
        g.non_emissive.append(NonEmissiveNode(
            id=f"obj:{obj.id}", kind="scene-object", label=obj.label,
            affordances=obj.affordances, centroid=obj.centroid(),
            aabb_lo=lo, aabb_hi=hi, salience=sal, source_id=obj.id))
    if capsules:
        g.non_emissive.extend(body_part_nodes(capsules))
    for e in scene.emitters:
        if e.kind == "env-dominant":
            g.emissive.append(EmissiveNode(f"emi:{e.id}", e.id, "environmental-dominant"))
        elif e.controllable:
            g.emissive.append(EmissiveNode(f"emi:{e.id}", e.id, "controllable"))
    objs = [n for n in g.non_emissive if n.kind == "scene-object"]
    for a in objs:
        for b in objs:
            if a.id >= b.id:
                continue
            dist = float(np.linalg.norm(a.centroid - b.centroid))
            if dist < NEAR_DISTANCE:
                g.n2n.append(SpatialRelation(a.id, b.id, "near"))
                g.n2n.append(SpatialRelation(b.id, a.id, "near"))
        for b in objs:
            if a.id == b.id:
                continue
            if not _xy_overlap(a.aabb_lo, a.aabb_hi, b.aabb_lo, b.aabb_hi):
                continue
            # a supports b: b rests on top of a
            if abs(b.aabb_lo[2] - a.aabb_hi[2]) <= SUPPORT_GAP:
                g.n2n.append(SpatialRelation(a.id, b.id, "supports"))
            if b.aabb_lo[2] >= a.aabb_hi[2] - 1e-9:
                g.n2n.append(SpatialRelation(b.id, a.id, "above"))
                g.n2n.append(SpatialRelation(a.id, b.id, "below"))
            if (np.all(b.aabb_lo >= a.aabb_lo - 1e-9)
                    and np.all(b.aabb_hi <= a.aabb_hi + 1e-9)):
                g.n2n.append(SpatialRelation(a.id, b.id, "contains"))
    g.bump()
    if camera is not None:
        update_camera_relations(g, camera)
    return g


def update_camera_relations(g: PhotoSceneGraph, camera: CameraState) -> PhotoSceneGraph:
    """Recompute view-dependent predicates from projected centroids."""
    g.n2n = [r for r in g.n2n if r.frame != "camera"]
    g.bump()
    nodes = list(g.non_emissive)
    if not nodes:
        return g
    centroids = np.stack([n.centroid for n in nodes])
    uv, depth, front = project(camera, centroids)
    for i, a in enumerate(nodes):
        for j, b in enumerate(nodes):
            if i == j or not (front[i] and front[j]):
                continue
            if uv[i, 0] < uv[j, 0] - CAMERA_LR_MARGIN:
                g.n2n.append(SpatialRelation(a.id, b.id, "left-of", frame="camera",
                                             camera_revision=g.revision))
            elif uv[j, 0] < uv[i, 0] - CAMERA_LR_MARGIN:
                g.n2n.append(SpatialRelation(a.id, b.id, "right-of", frame="camera",
                                             camera_revision=g.revision))
            if depth[i] + DEPTH_ORDER_MARGIN < depth[j]:
                g.n2n.append(SpatialRelation(a.id, b.id, "in-front-of", frame="camera",
                                             camera_revision=g.revision))
    return g


# ---------------------------------------------------------------- metering

def projected_region(camera: CameraState, node: NonEmissiveNode,
                     aspect_hw: float = 1.0, pad: float = 0.0):
    """Normalized (u0, v0, u1, v1) of the node's projected AABB, or None."""
    lo, hi = node.aabb_lo, node.aabb_hi
    corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    uv, _, front = project(camera, corners, aspect_hw)
    if not front.any():
        return None
    uv = uv[front]
    u0, v0 = uv.min(axis=0) - pad
    u1, v1 = uv.max(axis=0) + pad
    if u1 <= 0 or v1 <= 0 or u0 >= 1 or v0 >= 1:
        return None
    return (max(u0, 0.0), max(v0, 0.0), min(u1, 1.0), min(v1, 1.0))


def meter_node(g: PhotoSceneGraph, node_id: str, hdr: np.ndarray,
               camera: CameraState, scene: Scene | None = None,
               rig: LightRig | None = None, capsules: list | None = None) -> float | None:
    """Spot-meter the node's projected image region; None marks unmetered.

    With a scene supplied, an occluded node falls back to a probe reading
    just above it; a node that cannot be probed stays unmetered.
    """
    from .exposure import meter_scene, UNMETERABLE
    from .render import ProbeError, object_surface_samples, visibility_fraction
    node = g.node(node_id)
    aspect = hdr.shape[0] / hdr.shape[1]
    region = projected_region(camera, node, aspect)
    if region is not None:
        # inset so border pixels straddling the silhouette don't pollute
        u0, v0, u1, v1 = region
        iu, iv = 0.12 * (u1 - u0), 0.12 * (v1 - v0)
        region = (u0 + iu, v0 + iv, u1 - iu, v1 - iv)
    visible = region is not None
    if visible and scene is not None and node.kind == "scene-object":
        obj = scene.object_by_id(node.source_id)
        pts = object_surface_samples(obj, 64)
        visible = visibility_fraction(scene, camera, pts, exclude_prims={obj.id},
                                      capsules=capsules, aspect_hw=aspect) > 0.0
    if not visible:
        ev = None
        if scene is not None:
            top = np.array([node.centroid[0], node.centroid[1],
                            node.aabb_hi[2] + 0.15])
            try:
                ev = probe_ev100(scene, rig, top)
            except ProbeError:
                ev = None
        node.metered_ev100 = ev
        g.bump()
        return node.metered_ev100
    _, ev = meter_scene(hdr, mode="spot", region=region)
    node.metered_ev100 = None if ev == UNMETERABLE else float(ev)
    g.bump()
    return node.metered_ev100


def probe_ev100(scene: Scene, rig: LightRig | None, position,
                enabled_ids=None) -> float | None:
    """Reflected-light EV of a probe at `position` (fallback for occluded
    nodes): EV100 of the probe luminance."""
    if enabled_ids is None:
        enabled_ids = {e.id for e in scene.emitters if e.enabled}
        if rig is not None:
            enabled_ids |= {e.id for e in rig.enabled_emitters()}
    m = probe_measure(scene, rig, position, frozenset(enabled_ids))
    if m <= 0:
        return None
    return math.log2(m * 100.0 / K_METER)


# ---------------------------------------------------------------- probing

def ambient_emitter_ids(scene: Scene) -> set:
    """Emitters forming the ambient baseline: enabled, environmental,
    not flagged dominant (dominant ones are 'occluded' by disabling)."""
    return {e.id for e in scene.emitters
            if e.enabled and not e.controllable and e.kind != "env-dominant"}


def probe_photometrics(g: PhotoSceneGraph, scene: Scene, rig: LightRig | None,
                       anchor_position, anchor_node_id: str | None = None,
                       view_dir=(1.0, 0.0, 0.0)) -> PhotoSceneGraph:
    """Populate emitter-to-ambient ratios, pairwise ratios and EV-lift edges
    by ambient-subtraction probing at the anchor.  Leaves all enabled flags
    untouched (probing selects emitter sets explicitly).

    `view_dir` orients the probe's metered hemisphere; pass the
    camera-to-subject axis so camera-relative light placements read
    symmetrically.
    """
    rig = rig or LightRig()
    anchor = np.asarray(anchor_position, dtype=float)
    amb_ids = ambient_emitter_ids(scene)
    m_amb = probe_measure(scene, rig, anchor, frozenset(amb_ids), view_dir=view_dir)
    raw = {"m_amb": m_amb, "anchor": [float(x) for x in anchor],
           "ambient_set": sorted(amb_ids), "view_dir": [float(x) for x in view_dir],
           "per_emitter": {}}
    all_emitters = {e.id: e for e in list(scene.emitters) + list(rig.emitters)}
    deltas: dict[str, float] = {}
    dists: dict[str, float] = {}
    for node in g.emissive:
        em = all_emitters.get(node.source)
        if em is None:
            continue
        m_with = probe_measure(scene, rig, anchor, frozenset(amb_ids | {em.id}),
                               view_dir=view_dir)
        delta = max(0.0, m_with - m_amb)
        deltas[node.id] = delta
        dists[node.id] = float(np.linalg.norm(em.position() - anchor))
        node.r_to_ambient = (delta / m_amb) if m_amb > 0 else math.inf
        raw["per_emitter"][node.id] = {"m_with_ambient": m_with, "delta_m": delta,
                                       "distance_m": dists[node.id]}
        if anchor_node_id is not None:
            lift = math.inf if m_amb <= 0 else math.log2(m_with / m_amb) if m_with > 0 else 0.0
            g.e2n = [e for e in g.e2n
                     if not (e.emitter_node == node.id and e.target_node == anchor_node_id)]
            g.e2n.append(LightInfluence(node.id, anchor_node_id, lift))
    g.e2e = []
    ids = sorted(deltas)
    for a in ids:
        for b in ids:
            if a == b or deltas[b] <= 0:
                continue
            ratio = (deltas[a] / deltas[b]) * (dists[a] / max(dists[b], 1e-9)) ** 2
            g.e2e.append(EmitterRatio(a, b, ratio, dists[a], dists[b],
                                      deltas[a], deltas[b]))
    g.probe_raw = raw
    g.bump()
    return g


# ---------------------------------------------------------------- query

def query(g: PhotoSceneGraph, affordance: str | None = None,
          predicate: str | None = None, emitter_role: str | None = None):
    """Filter nodes/edges; results ordered by id for stability."""
    if emitter_role is not None:
        return sorted((n for n in g.emissive if n.role == emitter_role),
                      key=lambda n: n.id)
    if predicate is not None:
        return sorted((e for e in g.n2n if e.predicate == predicate),
                      key=lambda e: (e.from_id, e.to_id))
    if affordance is not None:
        return sorted((n for n in g.non_emissive if affordance in n.affordances),
                      key=lambda n: n.id)
    return sorted(g.non_emissive, key=lambda n: n.id)
