"""Physical realization of staging proposals: place, snap, retry.

Given a pose preset, an anchor object and a facing direction, derive a root
placement, snap the lowest support sample onto the support surface, and
jitter deterministically until the pose is penetration-free and balanced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .balance import CONTACT_EPS, collision_free, static_balance
from .geometry import normalize, quat_from_axis_angle
from .occupancy import OccupancyGrid
from .scene import Scene, SceneObject
from .skeleton import HumanState, PosePreset, Skeleton, forward_kinematics, skeletal_samples

# (dx, dy, yaw_deg) applied after the initial attempt, scaled by the limits below
JITTER_SEQUENCE = (
    (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, -1.0, 0.0),
    (0.0, 0.0, 1.0), (0.0, 0.0, -1.0), (0.7, 0.7, -1.0), (-0.7, 0.7, 1.0),
)
JITTER_TRANSLATION = 0.15
JITTER_YAW_DEG = 20.0


class StagingPreconditionError(ValueError):
    pass


class StagingFailure(Exception):
    def __init__(self, attempts: list):
        self.attempts = attempts
        lines = "; ".join(f"attempt {i}: {why}" for i, why in enumerate(attempts))
        super().__init__(f"staging could not be realized ({lines})")


@dataclass
class StagedPose:
    state: HumanState
    anchor_id: str
    preset: str
    attempts_used: int


def _support_top(scene: Scene, grid: OccupancyGrid, xy: np.ndarray, z_start: float) -> float | None:
    """Highest analytic surface below z_start at the given column, via the
    scene primitives (voxel top faces are half a cell off)."""
    zs = np.arange(z_start, grid.origin[2] - grid.resolution, -grid.resolution * 0.25)
    if len(zs) == 0:
        return None
    pts = np.column_stack([np.full(len(zs), xy[0]), np.full(len(zs), xy[1]), zs])
    inside = scene.contains(pts)
    hits = np.nonzero(inside)[0]
    if len(hits) == 0:
        return None
    lo = zs[hits[0]]
    hi = lo + grid.resolution * 0.25
    for _ in range(24):
        mid = 0.5 * (lo + hi)
        if scene.contains(np.array([[xy[0], xy[1], mid]]))[0]:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def _seat_root_height(skel: Skeleton, pose: HumanState, seat_top: float) -> float:
    """Root z placing the underside of the thigh capsules at the seat top."""
    caps = {c.name: c for c in forward_kinematics(skel, pose)}
    thigh_bottom = min(min(caps[n].p0[2], caps[n].p1[2]) - caps[n].radius
                       for n in ("l_knee", "r_knee"))
    return seat_top - thigh_bottom + CONTACT_EPS * 0.25


def _standing_root_height(skel: Skeleton, pose: HumanState, floor_top: float) -> float:
    caps = forward_kinematics(skel, pose)
    low = min(s for c in caps for s in (min(c.p0[2], c.p1[2]) - c.radius,))
    return floor_top - low + CONTACT_EPS * 0.25


def anchor_adjacent_position(anchor: SceneObject, facing: np.ndarray,
                             standoff: float = 0.25) -> np.ndarray:
    """Free-floor spot next to the anchor, on the side the subject stands."""
    lo, hi = anchor.aabb()
    center = 0.5 * (lo + hi)
    f = normalize(np.array([facing[0], facing[1], 0.0]))
    half = 0.5 * (hi - lo)
    reach = abs(f[0]) * half[0] + abs(f[1]) * half[1]
    return np.array([center[0] - f[0] * (reach + standoff),
                     center[1] - f[1] * (reach + standoff), 0.0])


def realize_staging(scene: Scene, grid: OccupancyGrid, preset: PosePreset,
                    anchor: SceneObject, facing, skel: Skeleton,
                    max_jitters: int = 8) -> StagedPose:
    """Place the preset at the anchor; first placement passing both
    penetration and balance checks wins.  Deterministic."""
    if preset.anchor_requirement and preset.anchor_requirement not in anchor.affordances:
        raise StagingPreconditionError(
            f"anchor {anchor.id!r} lacks affordance {preset.anchor_requirement!r} "
            f"required by preset {preset.name!r}")
    facing = normalize(np.array([facing[0], facing[1], 0.0], dtype=float))
    base_yaw = float(np.arctan2(facing[1], facing[0]))

    lo, hi = anchor.aabb()
    anchor_top = float(hi[2])
    anchor_center = 0.5 * (lo + hi)
    seated = preset.name == "sit"
    if seated:
        # sit slightly back of the seat center, facing outward
        depth = float(np.abs((hi - lo)[:2] @ np.abs(facing[:2])))
        base_xy = anchor_center[:2] - facing[:2] * 0.25 * depth
    elif "stand-zone" in anchor.affordances:
        base_xy = anchor_center[:2]
    else:
        # stand on the floor next to the anchor (lean surfaces, landmarks)
        base_xy = anchor_adjacent_position(anchor, facing)[:2]

    attempts: list[str] = []
    trials = [(0.0, 0.0, 0.0)] + [
        (dx * JITTER_TRANSLATION, dy * JITTER_TRANSLATION, dyaw * JITTER_YAW_DEG)
        for dx, dy, dyaw in JITTER_SEQUENCE[:max_jitters]]
    for dx, dy, dyaw in trials:
        xy = base_xy + np.array([dx, dy])
        yaw = base_yaw + np.radians(dyaw)
        root_q = quat_from_axis_angle((0, 0, 1), yaw)
        pose = HumanState(joint_rotations=dict(preset.joint_rotations),
                          root_rotation=root_q,
                          root_translation=np.array([xy[0], xy[1], 0.0]))
        if seated:
            root_z = _seat_root_height(skel, pose, anchor_top)
        else:
            floor_top = _support_top(scene, grid, xy, z_start=0.6)
            if floor_top is None:
                attempts.append("no support surface under placement")
                continue
            root_z = _standing_root_height(skel, pose, floor_top)
        pose.root_translation[2] = root_z
        caps = forward_kinematics(skel, pose)
        ok_coll, count = collision_free(grid, caps)
        if not ok_coll:
            attempts.append(f"{count} penetrating samples")
            continue
        if not static_balance(grid, skel, caps, gravity=scene.gravity):
            attempts.append("center of mass outside support polygon")
            continue
        return StagedPose(state=pose, anchor_id=anchor.id, preset=preset.name,
                          attempts_used=len(attempts) + 1)
    raise StagingFailure(attempts)


def lowest_sample_height(skel: Skeleton, pose: HumanState) -> float:
    caps = forward_kinematics(skel, pose)
    return float(skeletal_samples(caps)[:, 2].min())


def clear_seat_facing(scene: Scene, grid: OccupancyGrid, anchor: SceneObject,
                      preferred, preset: PosePreset, skel: Skeleton) -> np.ndarray:
    """Facing for a seated pose that realizes cleanly (backrests, armrests).

    Tries eight compass directions ordered by closeness to `preferred`
    (e.g. toward the scene center) against the actual seated kinematics and
    returns the first that passes; falls back to `preferred`.
    """
    preferred = normalize(np.array([preferred[0], preferred[1], 0.0], dtype=float))
    base_angle = np.arctan2(preferred[1], preferred[0])
    for off in sorted(np.radians((0.0, 45.0, -45.0, 90.0, -90.0, 135.0, -135.0, 180.0)),
                      key=abs):
        ang = base_angle + off
        f = np.array([np.cos(ang), np.sin(ang), 0.0])
        try:
            realize_staging(scene, grid, preset, anchor, f, skel)
            return f
        except (StagingFailure, StagingPreconditionError):
            continue
    return preferred
