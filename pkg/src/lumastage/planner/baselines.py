"""Baseline planner configurations, sharing all infrastructure with the full
planner.  Iterative baselines are pure config presets; the two one-shot
baselines (random, template) generate a single plan directly.
"""

from __future__ import annotations

import math

import numpy as np

from .. import rng
from ..exposure import CameraState
from ..geometry import look_at, quat_from_axis_angle, quat_to_matrix
from ..occupancy import build_occupancy
from ..render import RenderSettings
from ..skeleton import HumanState, forward_kinematics, load_pose_presets
from ..staging import StagingFailure, realize_staging
from .lighting import instantiate_preset, load_lighting_presets
from .loop import Budgets, PlannerConfig, PlanResult, run_plan
from .observe import observe
from .proposers import aim_at_thirds
from .state import Frontier, FrontierEntry, PlanState

BASELINE_NAMES = ("random", "template", "image-only", "spatial-graph",
                  "one-pass", "greedy", "full")

NOMINAL_POWERS = {"key": 40.0, "fill": 30.0, "rim": 24.0}   # deliberately flat


def baseline_config(name: str, budgets: Budgets) -> tuple[Budgets, PlannerConfig]:
    if name == "image-only":
        return budgets, PlannerConfig(use_affordances=False, use_photometrics=False)
    if name == "spatial-graph":
        return budgets, PlannerConfig(use_photometrics=False)
    if name == "one-pass":
        return Budgets(1, 1, 1), PlannerConfig()
    if name == "greedy":
        return budgets, PlannerConfig(k_max=1)
    if name == "full":
        return budgets, PlannerConfig()
    raise ValueError(f"{name} is not an iterative baseline")


def _single_entry_result(scene, grid, skeleton, state, settings, prompt) -> PlanResult:
    from ..judges import total_score
    image, features = observe(scene, grid, skeleton, state, settings, prompt)
    entry = FrontierEntry(entry_id="s001", state=state, image_hash=image.content_hash(),
                          features=features, stage="done", lineage="one-shot")
    entry.score = total_score(features)
    frontier = Frontier(k_max=1)
    frontier._arrival[entry.entry_id] = 0
    frontier.entries.append(entry)
    trace = [{"step": 1, "stage": "done", "proposal": {"baseline": True},
              "state_hash": state.state_hash(), "image_hash": entry.image_hash,
              "entry_id": entry.entry_id,
              "frontier": [entry.entry_id], "best": entry.entry_id}]
    return PlanResult(frontier, trace, {entry.image_hash: image})


def random_plan(scene, skeleton, seed: int, settings: RenderSettings,
                prompt: str = "", max_attempts: int = 64) -> PlanResult:
    """Free-space camera, rest-pose subject floating in front of it, preset
    three-point lighting at nominal power."""
    grid = build_occupancy(scene)
    lo, hi = scene.aabb()
    span = np.maximum(hi - lo, 0.5)
    pelvis_h = skeleton.rest_pelvis_height()
    for attempt in range(max_attempts):
        u = [rng.uniform_scalar(seed, 40, attempt, k) for k in range(6)]
        cam_pos = np.array([lo[0] + u[0] * span[0], lo[1] + u[1] * span[1],
                            0.8 + u[2] * 1.2])
        if grid.query_one(cam_pos) or grid.clearance(cam_pos) < 0.2:
            continue
        yaw = u[3] * 2 * math.pi
        view = np.array([math.cos(yaw), math.sin(yaw), 0.0])
        root = cam_pos + view * 2.2
        root[2] = pelvis_h + 0.3 + u[4] * 0.4          # floating, not grounded
        human = HumanState(joint_rotations={},
                           root_rotation=quat_from_axis_angle((0, 0, 1),
                                                              yaw + math.pi),
                           root_translation=root)
        caps = forward_kinematics(skeleton, human)
        from ..balance import collision_free
        ok, _ = collision_free(grid, caps)
        if not ok:
            continue
        head = next(c for c in caps if c.name == "head")
        camera = CameraState(transform=look_at(cam_pos, head.midpoint()),
                             focal_length_mm=50.0, f_number=2.8,
                             focus_distance=float(np.linalg.norm(head.midpoint() - cam_pos)))
        rig = instantiate_preset(load_lighting_presets()["three-point"],
                                 head.midpoint(), cam_pos, powers=NOMINAL_POWERS)
        state = PlanState(human=human, camera=camera, rig=rig, stage="done",
                          staging_info={"preset": "rest", "anchor_label": "free space",
                                        "lighting_preset": "three-point"})
        return _single_entry_result(scene, grid, skeleton, state, settings, prompt)
    raise StagingFailure([f"no valid random placement in {max_attempts} attempts"])


def template_plan(scene, skeleton, seed: int, settings: RenderSettings,
                  prompt: str = "") -> PlanResult:
    """Rule-based lower bound: stand preset at the largest stand zone,
    three-quarter eye-level camera, standard lighting, no iteration."""
    grid = build_occupancy(scene)
    presets = load_pose_presets()
    zones = [o for o in scene.objects if "stand-zone" in o.affordances]
    zones.sort(key=lambda o: -float(np.prod(o.aabb()[1][:2] - o.aabb()[0][:2])))
    anchor = zones[0] if zones else scene.objects[0]
    staged = realize_staging(scene, grid, presets["stand"], anchor, (1.0, 0.0, 0.0),
                             skeleton)
    human = staged.state
    caps = forward_kinematics(skeleton, human)
    face = next(c for c in caps if c.name == "head").midpoint()
    fwd = quat_to_matrix(human.root_rotation) @ np.array([1.0, 0.0, 0.0])
    az = math.radians(30.0)
    rotz = np.array([[math.cos(az), -math.sin(az), 0.0],
                     [math.sin(az), math.cos(az), 0.0], [0.0, 0.0, 1.0]])
    cam_pos = face + (rotz @ fwd) * 2.2
    cam_pos[2] = face[2]
    camera = aim_at_thirds(cam_pos, face, 50.0, (1 / 3, 1 / 3),
                           settings.height / settings.width)
    camera.f_number = 2.8
    rig = instantiate_preset(load_lighting_presets()["three-point"], face, cam_pos,
                             powers=NOMINAL_POWERS)
    state = PlanState(human=human, camera=camera, rig=rig, stage="done",
                      staging_info={"preset": "stand", "anchor_label": anchor.label,
                                    "lighting_preset": "three-point"})
    return _single_entry_result(scene, grid, skeleton, state, settings, prompt)


def run_baseline(name: str, scene, skeleton, prompt: str, judge, seed: int,
                 settings: RenderSettings, budgets: Budgets | None = None) -> PlanResult:
    budgets = budgets or Budgets()
    if name == "random":
        return random_plan(scene, skeleton, seed, settings, prompt)
    if name == "template":
        return template_plan(scene, skeleton, seed, settings, prompt)
    b, config = baseline_config(name, budgets)
    return run_plan(scene, skeleton, prompt, judge, budgets=b, settings=settings,
                    seed=seed, config=config)
