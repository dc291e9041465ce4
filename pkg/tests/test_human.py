import numpy as np
import pytest
from scipy.spatial import Delaunay

from lumastage.balance import (collision_free, convex_hull_2d, point_in_hull,
                               project_perp_gravity, static_balance,
                               support_contact_points)
from lumastage.geometry import quat_from_axis_angle, rotation_about_z
from lumastage.occupancy import build_occupancy
from lumastage.scene import Scene
from lumastage.skeleton import (HumanState, bone_sample_slices, center_of_mass,
                                forward_kinematics, load_pose_presets,
                                self_collision_free, skeletal_samples)
from lumastage.staging import StagingFailure, StagingPreconditionError, realize_staging

from conftest import make_object


# ---------------------------------------------------------------- FK

def test_rest_pose_matches_offsets(skeleton):
    caps = forward_kinematics(skeleton, HumanState.rest())
    by = {c.name: c for c in caps}
    assert np.allclose(by["spine"].p0, [0, 0, 0])
    assert np.allclose(by["spine"].p1, [0, 0, 0.15])
    assert np.allclose(by["l_knee"].p0, [0, 0.09, -0.06])


def test_fk_translation_equivariance(skeleton):
    rest = forward_kinematics(skeleton, HumanState.rest())
    moved = forward_kinematics(skeleton, HumanState(
        joint_rotations={}, root_translation=(1.0, 0.0, 0.0)))
    for a, b in zip(rest, moved):
        assert np.allclose(b.p0, a.p0 + [1, 0, 0], atol=1e-12)
        assert np.allclose(b.p1, a.p1 + [1, 0, 0], atol=1e-12)


def test_fk_yaw_90_matches_rotation_matrix_oracle(skeleton):
    """Independent oracle: rotate rest endpoints by an explicit Z matrix."""
    rest = forward_kinematics(skeleton, HumanState.rest())
    q = quat_from_axis_angle((0, 0, 1), np.pi / 2)
    posed = forward_kinematics(skeleton, HumanState(joint_rotations={}, root_rotation=q))
    rz = rotation_about_z(np.pi / 2)
    for a, b in zip(rest, posed):
        assert np.allclose(b.p0, rz @ a.p0, atol=1e-9)
        assert np.allclose(b.p1, rz @ a.p1, atol=1e-9)


def test_fk_rigid_equivariance_full(skeleton):
    """Transforming the root equals transforming all output capsules."""
    pose = HumanState(joint_rotations={"l_hip": quat_from_axis_angle((0, 1, 0), -1.0)})
    base = forward_kinematics(skeleton, pose)
    q = quat_from_axis_angle((0, 0, 1), 0.8)
    t = np.array([0.3, -0.2, 0.5])
    moved = forward_kinematics(skeleton, HumanState(
        joint_rotations=dict(pose.joint_rotations), root_rotation=q, root_translation=t))
    r = rotation_about_z(0.8)
    for a, b in zip(base, moved):
        assert np.allclose(b.p0, r @ a.p0 + t, atol=1e-9)
        assert np.allclose(b.p1, r @ a.p1 + t, atol=1e-9)


# ---------------------------------------------------------------- samples

def test_sample_count_and_radius(skeleton):
    caps = forward_kinematics(skeleton, HumanState.rest())
    one = [caps[0]]
    pts = skeletal_samples(one, per_bone=12)
    assert len(pts) == 12
    # all samples within radius (+tiny) of the capsule axis
    from lumastage.geometry import segment_point_distance
    for p in pts:
        assert segment_point_distance(one[0].p0, one[0].p1, p) <= one[0].radius + 1e-9


def test_axis_coverage_gap(skeleton):
    """Axis samples cover each bone with max gap <= length/4."""
    caps = forward_kinematics(skeleton, HumanState.rest())
    pts = skeletal_samples(caps, per_bone=12)
    for sl, cap in zip(bone_sample_slices(len(caps), 12), caps):
        if cap.length() < 1e-9:
            continue
        axis_pts = pts[sl][:6]
        ts = (axis_pts - cap.p0) @ (cap.p1 - cap.p0) / cap.length() ** 2
        ts = np.sort(ts)
        gaps = np.diff(ts) * cap.length()
        assert gaps.max() <= cap.length() / 4 + 1e-9


def test_center_of_mass_symmetry(skeleton):
    caps = forward_kinematics(skeleton, HumanState.rest())
    com = center_of_mass(skeleton, caps)
    assert abs(com[1]) < 1e-9      # sagittal symmetry
    assert abs(com[0]) < 0.05      # nearly centered fore-aft


def test_center_of_mass_single_bone():
    """All mass on one bone puts the CoM at that bone's midpoint."""
    from lumastage.skeleton import Skeleton, Bone
    sk = Skeleton(
        joint_names=["pelvis", "spine"],
        parents={"pelvis": None, "spine": "pelvis"},
        offsets={"pelvis": np.zeros(3), "spine": np.array([0.0, 0.0, 0.5])},
        bones=[Bone("spine", "pelvis", "spine", 0.1, 1.0)])
    caps = forward_kinematics(sk, HumanState.rest())
    assert np.allclose(center_of_mass(sk, caps), [0, 0, 0.25])


def test_center_of_mass_height_vs_volume_integration_oracle(skeleton):
    """Numeric integration over capsule volumes reproduces the midpoint CoM,
    and the rest-pose CoM sits at 55-57% of stature."""
    h = skeleton.rest_pelvis_height()
    caps = forward_kinematics(skeleton, HumanState(joint_rotations={},
                                                   root_translation=(0, 0, h)))
    # oracle: uniform-density Monte Carlo integration inside each capsule
    rng = np.random.default_rng(0)
    total = np.zeros(3)
    for bone, cap in zip(skeleton.bones, caps):
        n = 4000
        length = cap.length()
        axis = (cap.p1 - cap.p0) / max(length, 1e-12)
        # rejection sample in the capsule's bounding cylinder+caps
        ts = rng.uniform(-cap.radius, length + cap.radius, n)
        rad = cap.radius * np.sqrt(rng.uniform(0, 1, n))
        ang = rng.uniform(0, 2 * np.pi, n)
        ref = np.array([1.0, 0, 0]) if abs(axis[0]) < 0.9 else np.array([0, 1.0, 0])
        u = np.cross(axis, ref); u /= np.linalg.norm(u)
        v = np.cross(axis, u)
        pts = cap.p0 + np.outer(ts, axis) + np.outer(rad * np.cos(ang), u) \
            + np.outer(rad * np.sin(ang), v)
        from lumastage.shapes import capsule_contains
        keep = capsule_contains(pts, cap.p0, cap.p1, cap.radius)
        total += bone.mass_fraction * pts[keep].mean(axis=0)
    com = center_of_mass(skeleton, caps)
    assert np.allclose(com, total, atol=0.01)
    top = max(max(c.p0[2], c.p1[2]) + c.radius for c in caps)
    assert 0.55 <= com[2] / top <= 0.57


def test_com_linearity(skeleton):
    caps = forward_kinematics(skeleton, HumanState.rest())
    masses = {b.name: b.mass_fraction for b in skeleton.bones}
    half_a = [c for c in caps if c.name.startswith("l_")]
    half_b = [c for c in caps if not c.name.startswith("l_")]
    ma = sum(masses[c.name] for c in half_a)
    mb = sum(masses[c.name] for c in half_b)
    com_a = sum(masses[c.name] * c.midpoint() for c in half_a) / ma
    com_b = sum(masses[c.name] * c.midpoint() for c in half_b) / mb
    com = center_of_mass(skeleton, caps)
    assert np.allclose(com, (ma * com_a + mb * com_b) / (ma + mb), atol=1e-12)


def test_presets_self_collision_free(skeleton, pose_presets):
    for preset in pose_presets.values():
        st = HumanState(joint_rotations=dict(preset.joint_rotations))
        caps = forward_kinematics(skeleton, st)
        assert self_collision_free(skeleton, caps), preset.name


# ---------------------------------------------------------------- collision

def _standing_state(skeleton, xy=(0.0, 0.0), yaw=0.0):
    return HumanState(joint_rotations={},
                      root_rotation=quat_from_axis_angle((0, 0, 1), yaw),
                      root_translation=(xy[0], xy[1], skeleton.rest_pelvis_height()))


def test_floating_pose_collision_free(skeleton, empty_scene):
    grid = build_occupancy(empty_scene, 0.05)
    caps = forward_kinematics(skeleton, HumanState.rest())
    ok, count = collision_free(grid, caps)
    assert ok and count == 0


def test_arm_through_wall_collides(skeleton, floor_scene):
    wall = make_object("wall", "box", {"x": 0.2, "y": 4.0, "z": 3.0},
                       translation=(0.45, 0, 1.5))
    floor_scene.objects.append(wall)
    grid = build_occupancy(floor_scene, 0.05)
    # raise the right arm straight forward, through the wall slab
    pose = HumanState(joint_rotations={"r_shoulder": quat_from_axis_angle((0, 1, 0), -np.pi / 2)},
                      root_translation=(0, 0, skeleton.rest_pelvis_height()))
    caps = forward_kinematics(skeleton, pose)
    ok, count = collision_free(grid, caps)
    assert not ok and count > 0


def test_standing_contact_not_collision(skeleton, floor_scene):
    grid = build_occupancy(floor_scene, 0.05)
    caps = forward_kinematics(skeleton, _standing_state(skeleton))
    ok, count = collision_free(grid, caps)
    assert ok, f"{count} penetrating samples"


def test_grazing_seat_contact(skeleton, pose_presets, floor_scene):
    seat = make_object("seat", "box", {"x": 0.5, "y": 0.5, "z": 0.45},
                       translation=(0, 0, 0.225), affordances={"seat"})
    floor_scene.objects.append(seat)
    grid = build_occupancy(floor_scene, 0.05)
    sit = pose_presets["sit"]
    # place with thigh underside 1 cm into the contact band above the seat
    st = HumanState(joint_rotations=dict(sit.joint_rotations),
                    root_translation=(0.0, 0.0, 0.45 + 0.125))
    caps = forward_kinematics(skeleton, st)
    ok, count = collision_free(grid, caps)
    assert ok, f"{count} penetrating samples"


# ---------------------------------------------------------------- balance

def _oracle_in_hull(points2, p, margin):
    """Independent hull-containment oracle via scipy Delaunay + edge distance."""
    pts = np.asarray(points2)
    if len(pts) >= 3:
        try:
            tri = Delaunay(pts)
            if tri.find_simplex(p) >= 0:
                return True
        except Exception:
            pass
    best = np.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            a, b = pts[i], pts[j]
            ab = b - a
            t = 0.0 if ab @ ab == 0 else np.clip((p - a) @ ab / (ab @ ab), 0, 1)
            best = min(best, np.linalg.norm(p - (a + t * ab)))
    if len(pts) == 1:
        best = np.linalg.norm(p - pts[0])
    return best <= margin


def test_hull_membership_matches_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        pts = rng.uniform(-1, 1, size=(rng.integers(3, 10), 2))
        hull = convex_hull_2d(pts)
        p = rng.uniform(-1.3, 1.3, size=2)
        assert point_in_hull(p, hull, 0.05) == _oracle_in_hull(pts, p, 0.05)


def test_standing_balance(skeleton, floor_scene):
    grid = build_occupancy(floor_scene, 0.05)
    caps = forward_kinematics(skeleton, _standing_state(skeleton))
    assert static_balance(grid, skeleton, caps) == 1


def test_floating_pose_unbalanced(skeleton, empty_scene):
    grid = build_occupancy(empty_scene, 0.05)
    caps = forward_kinematics(skeleton, HumanState.rest())
    assert static_balance(grid, skeleton, caps) == 0


def test_forward_lean_past_toes_unbalanced(skeleton, floor_scene):
    """Pitch the whole body forward so the CoM projects past the toes."""
    grid = build_occupancy(floor_scene, 0.05)
    q = quat_from_axis_angle((0, 1, 0), np.radians(35.0))
    st = HumanState(joint_rotations={}, root_rotation=q,
                    root_translation=(0, 0, skeleton.rest_pelvis_height()))
    caps = forward_kinematics(skeleton, st)
    # keep ~foot contact: drop the root until the lowest sample touches
    low = skeletal_samples(caps)[:, 2].min()
    st.root_translation[2] -= low
    caps = forward_kinematics(skeleton, st)
    contacts = support_contact_points(grid, caps)
    com2 = project_perp_gravity(center_of_mass(skeleton, caps), (0, 0, -1))[0]
    if len(contacts) > 0:
        pts2 = project_perp_gravity(contacts, (0, 0, -1))
        assert not _oracle_in_hull(pts2, com2, 0.02)
    assert static_balance(grid, skeleton, caps) == 0


def test_balance_gravity_plane_invariance(skeleton, floor_scene):
    """Translating scene + human in the gravity plane leaves S unchanged."""
    grid = build_occupancy(floor_scene, 0.05)
    caps = forward_kinematics(skeleton, _standing_state(skeleton))
    s0 = static_balance(grid, skeleton, caps)
    shift = np.array([0.9, -0.7, 0.0])
    shifted_scene = Scene(objects=[make_object(
        "floor", "box", {"x": 6.0, "y": 6.0, "z": 0.2},
        translation=tuple(np.array([0, 0, -0.1]) + shift), affordances={"stand-zone"})])
    grid2 = build_occupancy(shifted_scene, 0.05)
    caps2 = forward_kinematics(skeleton, _standing_state(skeleton, xy=shift[:2]))
    assert static_balance(grid2, skeleton, caps2) == s0 == 1


# ---------------------------------------------------------------- staging

def _chair_scene():
    floor = make_object("floor", "box", {"x": 6, "y": 6, "z": 0.2},
                        translation=(0, 0, -0.1), affordances={"stand-zone"})
    seat = make_object("chair", "box", {"x": 0.45, "y": 0.45, "z": 0.45},
                       translation=(1.0, 1.0, 0.225), affordances={"seat"})
    return Scene(objects=[floor, seat])


def test_realize_sit_on_chair(skeleton, pose_presets):
    scene = _chair_scene()
    grid = build_occupancy(scene, 0.05)
    staged = realize_staging(scene, grid, pose_presets["sit"],
                             scene.object_by_id("chair"), facing=(1, 0, 0), skel=skeleton)
    caps = forward_kinematics(skeleton, staged.state)
    ok, count = collision_free(grid, caps)
    assert ok, f"{count} penetrations"
    assert static_balance(grid, skeleton, caps) == 1


def test_sit_requires_seat_tag(skeleton, pose_presets):
    scene = _chair_scene()
    grid = build_occupancy(scene, 0.05)
    with pytest.raises(StagingPreconditionError):
        realize_staging(scene, grid, pose_presets["sit"],
                        scene.object_by_id("floor"), facing=(1, 0, 0), skel=skeleton)


def test_stand_in_occupied_closet_fails(skeleton, pose_presets):
    # a stand-zone pad fully inside a solid block: nowhere to stand
    block = make_object("closet", "box", {"x": 1.2, "y": 1.2, "z": 2.4},
                        translation=(0, 0, 1.2))
    pad = make_object("pad", "box", {"x": 1.0, "y": 1.0, "z": 0.05},
                      translation=(0, 0, 0.025), affordances={"stand-zone"})
    scene = Scene(objects=[block, pad])
    grid = build_occupancy(scene, 0.05)
    with pytest.raises(StagingFailure) as exc:
        realize_staging(scene, grid, load_pose_presets()["stand"], pad,
                        facing=(1, 0, 0), skel=skeleton)
    assert exc.value.attempts


def test_realize_stand_deterministic(skeleton, pose_presets, floor_scene):
    grid = build_occupancy(floor_scene, 0.05)
    floor = floor_scene.objects[0]
    a = realize_staging(floor_scene, grid, pose_presets["stand"], floor, (0, 1, 0), skeleton)
    b = realize_staging(floor_scene, grid, pose_presets["stand"], floor, (0, 1, 0), skeleton)
    assert np.array_equal(a.state.root_translation, b.state.root_translation)
    assert np.array_equal(a.state.root_rotation, b.state.root_rotation)


def test_all_presets_realizable_on_fitting_anchor(skeleton, pose_presets):
    scene = _chair_scene()
    rail = make_object("rail", "box", {"x": 0.1, "y": 2.0, "z": 1.05},
                       translation=(-1.5, 0, 0.525), affordances={"lean-surface"})
    scene.objects.append(rail)
    grid = build_occupancy(scene, 0.05)
    anchor_for = {"seat": "chair", "lean-surface": "rail", "stand-zone": "floor", None: "floor"}
    for preset in pose_presets.values():
        anchor = scene.object_by_id(anchor_for[preset.anchor_requirement])
        staged = realize_staging(scene, grid, preset, anchor, facing=(1, 0, 0), skel=skeleton)
        caps = forward_kinematics(skeleton, staged.state)
        ok, count = collision_free(grid, caps)
        assert ok, f"{preset.name}: {count} penetrations"
        assert static_balance(grid, skeleton, caps) == 1, preset.name
