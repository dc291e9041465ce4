"""Viewfinder observation: render a plan state and extract judge features.

The judge only ever sees the rendered image plus this feature summary, so
everything scene-derived (visibility, metered EVs, achieved light ratio)
is computed here once per candidate.
"""

from __future__ import annotations

import math

import numpy as np

from ..balance import collision_free, static_balance
from ..color import luma
from ..exposure import (apply_shutter, exposure_validity, meter_and_solve, meter_scene,
                        project, thirds_distance, UNMETERABLE)
from ..imaging import ViewfinderImage
from ..psg import BODY_PART_BONES, PhotoSceneGraph
from ..render import RenderSettings, render, visibility_fraction
from ..skeleton import forward_kinematics, skeletal_samples
from .state import PlanState

PROMPT_STOPWORDS = {"a", "an", "the", "of", "in", "on", "at", "by", "with", "and",
                    "or", "to", "near", "for"}

POSE_KEYWORDS = (
    ("sit", ("sit", "sitting", "seated", "bench", "chair", "coffee")),
    ("lean", ("lean", "leaning", "rail", "railing", "bar", "casual")),
    ("crouch", ("crouch", "crouching", "squat", "low")),
    ("stride", ("stride", "walking", "walk", "striding", "motion")),
    ("dance-a", ("dance", "dancing", "gracefully", "twirl")),
    ("dance-b", ("dance", "dancing", "lunge", "dynamic")),
    ("arms-crossed", ("confident", "arms", "crossed", "classic", "formal")),
    ("stand", ("stand", "standing", "upright", "portrait")),
)

LIGHTING_KEYWORDS = (
    ("split", ("dramatic", "moody", "noir", "mysterious")),
    ("rembrandt", ("melancholy", "painterly", "classic", "golden", "warm")),
    ("butterfly", ("glamour", "beauty", "soft", "gentle")),
    ("rim-only", ("silhouette", "edge", "backlit")),
    ("three-point", ("confident", "studio", "clean", "bright")),
    ("loop", ("candid", "natural", "morning", "friendly")),
)

_SYNONYMS = {name: set(words) | {name} for name, words in POSE_KEYWORDS}
for _name, _words in LIGHTING_KEYWORDS:
    _SYNONYMS.setdefault(_name, set()).update(_words)
    _SYNONYMS[_name].add(_name)


def prompt_tokens(prompt: str) -> set:
    return {t for t in "".join(c if c.isalnum() else " " for c in prompt.lower()).split()
            if t and t not in PROMPT_STOPWORDS}


def prompt_overlap(prompt: str, words: list) -> float:
    """Fraction of prompt tokens answered by the plan's choices; preset names
    expand to their keyword synonyms."""
    toks = prompt_tokens(prompt)
    if not toks:
        return 0.0
    vocab = set()
    for w in words:
        w = str(w)
        vocab |= prompt_tokens(w)
        for piece in prompt_tokens(w) | {w.lower()}:
            vocab |= _SYNONYMS.get(piece, set())
    return len(toks & vocab) / len(toks)


def _body_points(capsules, part: str) -> np.ndarray:
    bones = BODY_PART_BONES[part]
    caps = capsules if bones is None else [c for c in capsules if c.name in bones]
    return skeletal_samples(caps, per_bone=12)


def observe(scene, grid, skeleton, state: PlanState, settings: RenderSettings,
            prompt: str = "", graph: PhotoSceneGraph | None = None,
            key_fill_target: float | None = None) -> tuple[ViewfinderImage, dict]:
    """Render the state and compute the judge-facing feature summary."""
    capsules = forward_kinematics(skeleton, state.human) if state.human else None
    hdr = render(scene, capsules, state.rig, state.camera, settings,
                 human_albedo=skeleton.albedo)
    exposure_sol = meter_and_solve(hdr, state.camera.f_number)
    delta = state.camera.exposure_comp
    ldr = apply_shutter(hdr, exposure_sol, delta)
    image = ViewfinderImage(width=settings.width, height=settings.height,
                            hdr=hdr, ldr=ldr, camera=state.camera,
                            exposure=exposure_sol, seed=settings.seed)
    aspect = settings.height / settings.width

    features: dict = {"stage": state.stage}
    if capsules:
        face_pts = _body_points(capsules, "face")
        body_pts = _body_points(capsules, "full-body")
        head = next(c for c in capsules if c.name == "head")
        face_center = head.midpoint()
        features["visibility_face"] = visibility_fraction(
            scene, state.camera, face_pts,
            exclude_prims={"capsule:head", "capsule:neck"}, capsules=capsules,
            aspect_hw=aspect)
        features["visibility_body"] = visibility_fraction(
            scene, state.camera, body_pts,
            exclude_prims={f"capsule:{c.name}" for c in capsules}, capsules=None,
            aspect_hw=aspect)
        uv, _, front = project(state.camera, face_center[None, :], aspect)
        if front[0]:
            features["face_uv"] = [float(uv[0, 0]), float(uv[0, 1])]
            features["thirds_distance"] = thirds_distance(uv[0])
        else:
            features["thirds_distance"] = 1.0
        ok_coll, pen = collision_free(grid, capsules)
        features["collision_free"] = int(ok_coll)
        features["penetrating_samples"] = pen
        features["balanced"] = static_balance(grid, skeleton, capsules,
                                              gravity=scene.gravity)
        # face spot EV straight off this render
        lo = np.minimum(head.p0, head.p1) - head.radius
        hi = np.maximum(head.p0, head.p1) + head.radius
        ev_face = _region_ev(hdr, state.camera, lo, hi, aspect)
        if ev_face is not None:
            features["ev_face"] = ev_face
        ev_bg = _border_ev(hdr)
        if ev_bg is not None:
            features["ev_background"] = ev_bg
    else:
        features["visibility_face"] = 0.0
        features["visibility_body"] = 0.0
        features["thirds_distance"] = 1.0
        features["collision_free"] = 1
        features["balanced"] = 0

    _, ev_global = meter_scene(hdr)
    if ev_global != UNMETERABLE:
        features["ev_global"] = float(ev_global)
    p_valid, v_exp = exposure_validity(hdr, exposure_sol, delta)
    features["p_valid"] = p_valid
    features["v_exp"] = v_exp
    y = luma(hdr)
    l_mid = exposure_sol.l_mid * 2.0 ** (-delta)
    if l_mid > 0:
        features["p_over"] = float((y > l_mid * 8.0).mean())
        features["p_under"] = float((y < l_mid / 8.0).mean())
    features["delta"] = delta
    info = state.staging_info
    features["prompt_bonus"] = prompt_overlap(prompt, [
        info.get("anchor_label", ""), info.get("preset", ""),
        info.get("lighting_preset", ""), info.get("anchor_affordances", "")])
    if key_fill_target:
        features["key_fill_target"] = key_fill_target
    achieved = _achieved_key_fill(graph)
    if achieved is not None:
        features["key_fill_achieved"] = achieved
    return image, features


def _achieved_key_fill(graph: PhotoSceneGraph | None) -> float | None:
    if graph is None:
        return None
    for e in graph.e2e:
        if e.a == "emi:rig:key" and e.b == "emi:rig:fill":
            return e.ratio
    return None


def _region_ev(hdr, camera, aabb_lo, aabb_hi, aspect) -> float | None:
    corners = np.array([[x, y, z] for x in (aabb_lo[0], aabb_hi[0])
                        for y in (aabb_lo[1], aabb_hi[1])
                        for z in (aabb_lo[2], aabb_hi[2])])
    uv, _, front = project(camera, corners, aspect)
    if not front.all():
        return None
    u0, v0 = uv.min(axis=0)
    u1, v1 = uv.max(axis=0)
    if u1 <= 0 or v1 <= 0 or u0 >= 1 or v0 >= 1:
        return None
    _, ev = meter_scene(hdr, mode="spot",
                        region=(max(u0, 0), max(v0, 0), min(u1, 1), min(v1, 1)))
    return None if ev == UNMETERABLE else float(ev)


def _border_ev(hdr) -> float | None:
    h, w = hdr.shape[:2]
    m = max(1, int(0.15 * min(h, w)))
    mask = np.zeros((h, w), dtype=bool)
    mask[:m, :] = mask[-m:, :] = True
    mask[:, :m] = mask[:, -m:] = True
    y = luma(hdr)[mask]
    mean = float(y.mean())
    if mean <= 0:
        return None
    return math.log2(mean * 100.0 / 12.5)
