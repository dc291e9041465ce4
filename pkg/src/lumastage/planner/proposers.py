"""Deterministic heuristic Photographer: staging, composition, lighting moves.

Staging ranks affordance-compatible anchors against the prompt; composition
keeps the camera in subject-centric spherical coordinates with a fixed hint
move table; lighting instantiates a portrait preset around the face anchor
and calibrates powers against probed ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..exposure import CameraState, FOCAL_LENGTHS_MM, project
from ..geometry import look_at, quat_to_matrix, spherical_offset
from ..psg import PhotoSceneGraph, probe_ev100, query
from ..render import LightRig, visibility_fraction
from ..skeleton import forward_kinematics, skeletal_samples
from .lighting import (PRESET_ORDER, add_negative_fill, adjust_device, calibrate_rig,
                       instantiate_preset, load_lighting_presets)
from .observe import LIGHTING_KEYWORDS, POSE_KEYWORDS, prompt_tokens

SMALL_AZIMUTH_DEG = 10.0
LARGE_AZIMUTH_DEG = 25.0
SMALL_DISTANCE_FACTOR = 0.15
LARGE_DISTANCE_FACTOR = 0.35
EYE_LEVEL_AZIMUTH_DEG = 35.0
PORTRAIT_DISTANCE_M = 2.4
REQUIRED_VISIBILITY = 0.6
THIRDS_V = 1.0 / 3.0

PRESET_FOR_AFFORDANCE = {"seat": "sit", "lean-surface": "lean", "stand-zone": "stand"}


@dataclass
class StagingProposal:
    preset_name: str
    anchor_node_id: str
    anchor_object_id: str
    anchor_label: str
    facing: tuple
    rank_score: float


@dataclass
class CameraSpec:
    azimuth_deg: float
    elevation_deg: float
    distance_m: float
    focal_mm: float
    thirds_u: float            # 1/3 or 2/3
    f_number: float = 2.8
    violation: bool = False

    def to_dict(self):
        return {"azimuth_deg": self.azimuth_deg, "elevation_deg": self.elevation_deg,
                "distance_m": self.distance_m, "focal_mm": self.focal_mm,
                "thirds_u": self.thirds_u, "f_number": self.f_number,
                "violation": self.violation}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def pose_for_prompt(prompt: str, available: set) -> str:
    toks = prompt_tokens(prompt)
    for pose, words in POSE_KEYWORDS:
        if pose in available and toks & set(words):
            return pose
    return "stand"


def lighting_preset_for_prompt(prompt: str) -> str:
    toks = prompt_tokens(prompt)
    for name, words in LIGHTING_KEYWORDS:
        if toks & set(words):
            return name
    return "rembrandt"


def aim_at_thirds(position: np.ndarray, face: np.ndarray, focal_mm: float,
                  target_uv: tuple, aspect_hw: float = 1.0) -> CameraState:
    """Camera at `position` oriented so the face projects at `target_uv`."""
    cam = CameraState(transform=look_at(position, face), focal_length_mm=focal_mm,
                      f_number=2.8,
                      focus_distance=float(np.linalg.norm(face - position)))
    sw = cam.sensor_width_mm
    sh = sw * aspect_hw
    for _ in range(6):
        uv, _, front = project(cam, face[None, :], aspect_hw)
        if not front[0]:
            break
        du = target_uv[0] - uv[0, 0]
        dv = target_uv[1] - uv[0, 1]
        if abs(du) < 1e-9 and abs(dv) < 1e-9:
            break
        yaw = math.atan(du * sw / focal_mm)
        pitch = math.atan(dv * sh / focal_mm)
        cy, sy = math.cos(yaw), math.sin(yaw)
        cp, sp = math.cos(pitch), math.sin(pitch)
        ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
        rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
        cam.transform.rotation = cam.transform.rotation @ ry @ rx
    return cam


class HeuristicPhotographer:
    """Rule-based proposer; every decision is a deterministic function of the
    graph, the prompt, and the hint stream."""

    def __init__(self, scene, grid, skeleton, pose_presets: dict, prompt: str,
                 use_affordances: bool = True, use_photometrics: bool = True):
        self.scene = scene
        self.grid = grid
        self.skeleton = skeleton
        self.pose_presets = pose_presets
        self.prompt = prompt
        self.use_affordances = use_affordances
        self.use_photometrics = use_photometrics
        self.lighting_presets = load_lighting_presets()
        self._staging_rank: list[StagingProposal] | None = None
        self._staging_index = 0
        self._preset_index: dict[str, int] = {}

    # ------------------------------------------------------------ staging

    def _rank_anchors(self, graph: PhotoSceneGraph) -> list:
        proposals = []
        toks = prompt_tokens(self.prompt)
        center = np.mean([n.centroid for n in graph.non_emissive
                          if n.kind == "scene-object"], axis=0) \
            if graph.non_emissive else np.zeros(3)
        ev_scene = None
        if self.use_photometrics:
            try:
                ev_scene = probe_ev100(self.scene, None,
                                       center + np.array([0, 0, 1.2]))
            except Exception:
                ev_scene = None
        if self.use_affordances:
            nodes = [n for n in graph.non_emissive if n.kind == "scene-object"
                     and n.affordances & {"seat", "stand-zone", "lean-surface"}]
        else:
            nodes = []
        available_presets = set(self.pose_presets)
        prompt_pose = pose_for_prompt(self.prompt, available_presets)
        for n in sorted(nodes, key=lambda n: n.id):
            for aff in sorted(n.affordances & {"seat", "stand-zone", "lean-surface"}):
                preset = PRESET_FOR_AFFORDANCE[aff]
                if preset == "stand" and self.pose_presets[prompt_pose].anchor_requirement \
                        in (None, "stand-zone"):
                    preset = prompt_pose
                kw = len(toks & (prompt_tokens(n.label) | {aff.split("-")[0]}
                                 | prompt_tokens(preset))) / max(len(toks), 1)
                score = 2.0 * kw + n.salience
                if ev_scene is not None and self.use_photometrics:
                    try:
                        ev_here = probe_ev100(self.scene, None,
                                              n.centroid + np.array([0, 0, n.aabb_hi[2]
                                                                     - n.centroid[2] + 0.8]))
                    except Exception:
                        ev_here = None
                    if ev_here is not None and abs(ev_here - ev_scene) <= 3.0:
                        score += 0.25
                facing = center - n.centroid
                facing[2] = 0.0
                if np.linalg.norm(facing) < 1e-6:
                    facing = np.array([1.0, 0.0, 0.0])
                facing = facing / np.linalg.norm(facing)
                if aff == "lean-surface":
                    # subject stands beside the surface facing it
                    facing = -facing
                elif aff == "seat":
                    from ..staging import clear_seat_facing
                    obj = self.scene.object_by_id(n.source_id)
                    facing = clear_seat_facing(self.scene, self.grid, obj, facing,
                                               self.pose_presets[preset], self.skeleton)
                proposals.append(StagingProposal(
                    preset_name=preset, anchor_node_id=n.id, anchor_object_id=n.source_id,
                    anchor_label=n.label, facing=tuple(facing), rank_score=score))
        if not proposals:
            # fall back to free-floor ring positions around the scene center
            for i, ang in enumerate((0.0, 72.0, 144.0, 216.0, 288.0)):
                off = spherical_offset(math.radians(ang), 0.0, 1.0, (1.0, 0.0, 0.0))
                facing = -off / np.linalg.norm(off)
                proposals.append(StagingProposal(
                    preset_name=pose_for_prompt(self.prompt, available_presets),
                    anchor_node_id=f"free:{i}", anchor_object_id="",
                    anchor_label="open floor",
                    facing=tuple(facing), rank_score=-float(i)))
        proposals.sort(key=lambda p: (-p.rank_score, p.anchor_node_id, p.preset_name))
        return proposals

    def propose_staging(self, graph: PhotoSceneGraph, hints: list) -> StagingProposal:
        if self._staging_rank is None:
            self._staging_rank = self._rank_anchors(graph)
        for h in hints:
            if h.code in ("change-anchor", "change-pose", "try-other-preset"):
                self._staging_index += 1
            elif h.code == "rotate-subject":
                p = self._staging_rank[self._staging_index % len(self._staging_rank)]
                ang = math.radians(30.0 if h.magnitude == "small" else 60.0)
                c, s = math.cos(ang), math.sin(ang)
                fx, fy = p.facing[0], p.facing[1]
                self._staging_rank[self._staging_index % len(self._staging_rank)] = \
                    StagingProposal(p.preset_name, p.anchor_node_id, p.anchor_object_id,
                                    p.anchor_label,
                                    (c * fx - s * fy, s * fx + c * fy, 0.0), p.rank_score)
        return self._staging_rank[self._staging_index % len(self._staging_rank)]

    def advance_staging(self):
        self._staging_index += 1

    # ------------------------------------------------------------ composition

    def initial_camera(self, human_state, aspect_hw: float = 1.0) -> tuple:
        """Eye-level 3/4 view, 50 mm, face at an upper-thirds point."""
        caps = forward_kinematics(self.skeleton, human_state)
        head = next(c for c in caps if c.name == "head")
        face = head.midpoint()
        fwd = quat_to_matrix(human_state.root_rotation) @ np.array([1.0, 0.0, 0.0])
        spec = CameraSpec(azimuth_deg=EYE_LEVEL_AZIMUTH_DEG, elevation_deg=0.0,
                          distance_m=PORTRAIT_DISTANCE_M, focal_mm=50.0,
                          thirds_u=2.0 / 3.0 if EYE_LEVEL_AZIMUTH_DEG >= 0 else 1.0 / 3.0)
        cam, spec = self.camera_from_spec(human_state, spec, aspect_hw)
        return cam, spec

    def camera_from_spec(self, human_state, spec: CameraSpec,
                         aspect_hw: float = 1.0) -> tuple:
        """Place/orient the camera; repair visibility by widening then backing
        off; nudge azimuth when the spot is inside geometry."""
        caps = forward_kinematics(self.skeleton, human_state)
        head = next(c for c in caps if c.name == "head")
        face = head.midpoint()
        fwd = quat_to_matrix(human_state.root_rotation) @ np.array([1.0, 0.0, 0.0])
        spec = CameraSpec(**{**spec.to_dict(), "violation": False})
        focal_ladder = [f for f in FOCAL_LENGTHS_MM if f <= spec.focal_mm]
        wiggles = (0.0, 15.0, -15.0, 30.0, -30.0, 50.0, -50.0, 75.0, -75.0, 105.0, -105.0)
        body_pts = skeletal_samples(caps, per_bone=12)
        face_pts = skeletal_samples([head], per_bone=12)
        best = None
        for wiggle in wiggles:
            az = math.radians(spec.azimuth_deg + wiggle)
            el = math.radians(spec.elevation_deg)
            pos = face + spherical_offset(az, el, spec.distance_m, fwd)
            pos[2] = max(pos[2], 0.3)
            if self.grid.query_one(pos) or self.grid.clearance(pos) < 0.12:
                continue
            cam = aim_at_thirds(pos, face, spec.focal_mm, (spec.thirds_u, THIRDS_V),
                                aspect_hw)
            cam.f_number = spec.f_number
            vis_face = visibility_fraction(self.scene, cam, face_pts,
                                           exclude_prims={"capsule:head", "capsule:neck"},
                                           capsules=caps, aspect_hw=aspect_hw)
            vis_body = visibility_fraction(
                self.scene, cam, body_pts,
                exclude_prims={f"capsule:{c.name}" for c in caps}, aspect_hw=aspect_hw)
            ok = vis_face >= REQUIRED_VISIBILITY and vis_body >= REQUIRED_VISIBILITY
            if best is None or (vis_face + vis_body) > best[0]:
                best = (vis_face + vis_body, cam, wiggle, ok)
            if ok:
                spec.azimuth_deg += wiggle
                return cam, spec
        # repair: widen lens, then increase distance
        for focal in [f for f in sorted(FOCAL_LENGTHS_MM, reverse=True) if f < spec.focal_mm]:
            wider = CameraSpec(**{**spec.to_dict(), "focal_mm": focal})
            cam, out = self.camera_from_spec(human_state, wider, aspect_hw)
            if not out.violation:
                return cam, out
        if spec.distance_m < PORTRAIT_DISTANCE_M * 2.5:
            farther = CameraSpec(**{**spec.to_dict(),
                                    "distance_m": spec.distance_m * 1.25})
            cam, out = self.camera_from_spec(human_state, farther, aspect_hw)
            if not out.violation:
                return cam, out
        if best is None:
            # nothing in free space: best effort straight-on camera
            pos = face + spherical_offset(0.0, 0.0, spec.distance_m, fwd)
            cam = aim_at_thirds(pos, face, spec.focal_mm, (spec.thirds_u, THIRDS_V),
                                aspect_hw)
            cam.f_number = spec.f_number
            spec.violation = True
            return cam, spec
        _, cam, wiggle, _ = best
        spec.azimuth_deg += wiggle
        spec.violation = True
        return cam, spec

    def refine_composition(self, human_state, spec: CameraSpec, hints: list,
                           aspect_hw: float = 1.0) -> tuple:
        spec = CameraSpec.from_dict(spec.to_dict())
        for h in hints:
            small = h.magnitude == "small"
            az = SMALL_AZIMUTH_DEG if small else LARGE_AZIMUTH_DEG
            dist = SMALL_DISTANCE_FACTOR if small else LARGE_DISTANCE_FACTOR
            steps = 1 if small else 2
            if h.code == "move-camera-left":
                spec.azimuth_deg += az
            elif h.code == "move-camera-right":
                spec.azimuth_deg -= az
            elif h.code == "move-camera-up":
                spec.elevation_deg = min(spec.elevation_deg + az, 65.0)
            elif h.code == "move-camera-down":
                spec.elevation_deg = max(spec.elevation_deg - az, -30.0)
            elif h.code == "camera-closer":
                spec.distance_m = max(spec.distance_m * (1.0 - dist), 0.8)
            elif h.code == "camera-farther":
                spec.distance_m *= 1.0 + dist
            elif h.code in ("lens-wider", "lens-tighter"):
                idx = FOCAL_LENGTHS_MM.index(spec.focal_mm)
                idx += -steps if h.code == "lens-wider" else steps
                spec.focal_mm = FOCAL_LENGTHS_MM[int(np.clip(idx, 0,
                                                             len(FOCAL_LENGTHS_MM) - 1))]
        return self.camera_from_spec(human_state, spec, aspect_hw)

    # ------------------------------------------------------------ lighting

    def initial_lighting(self, entry_key: str, face: np.ndarray, camera: CameraState,
                         prompt_preset: str | None = None) -> tuple:
        order = [lighting_preset_for_prompt(self.prompt)] if prompt_preset is None \
            else [prompt_preset]
        order += [p for p in PRESET_ORDER if p not in order]
        idx = self._preset_index.get(entry_key, 0)
        name = order[idx % len(order)]
        preset = self.lighting_presets[name]
        if self.use_photometrics:
            rig, report = calibrate_rig(preset, self.scene, face, camera.position())
        else:
            from .baselines import NOMINAL_POWERS
            rig = instantiate_preset(preset, face, camera.position(),
                                     powers=dict(NOMINAL_POWERS))
            report = {"calibrated": False, "reason": "photometrics disabled"}
        return rig, name, report

    def next_preset(self, entry_key: str):
        self._preset_index[entry_key] = self._preset_index.get(entry_key, 0) + 1

    def refine_lighting(self, rig: LightRig, face: np.ndarray, camera: CameraState,
                        hints: list) -> LightRig:
        out = LightRig.from_dict(rig.to_dict())
        for h in hints:
            if h.code == "add-negative-fill":
                add_negative_fill(out, face, camera.position())
            elif h.code.startswith(("key-", "fill-")):
                adjust_device(out, h.code, h.magnitude)
        return out

    @staticmethod
    def exposure_delta(features: dict) -> float:
        """Anchor exposure on the face, within one stop of the scene meter."""
        ev_face = features.get("ev_face")
        ev_global = features.get("ev_global")
        if ev_face is None or ev_global is None:
            return 0.0
        return float(np.clip(ev_global - ev_face, -1.0, 1.0))

    @staticmethod
    def apply_exposure_hints(delta: float, hints: list) -> float:
        for h in hints:
            step = 0.5 if h.magnitude == "small" else 1.0
            if h.code == "exposure-up":
                delta += step
            elif h.code == "exposure-down":
                delta -= step
        return float(np.clip(delta, -3.0, 3.0))
