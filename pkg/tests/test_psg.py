import json
import math
from pathlib import Path

import numpy as np
import pytest

from lumastage.exposure import CameraState
from lumastage.geometry import RigidTransform, look_at
from lumastage.occupancy import build_occupancy
from lumastage.psg import (PhotoSceneGraph, build_initial_graph, meter_node,
                           probe_photometrics, query, update_camera_relations)
from lumastage.render import LightRig, RenderSettings, render
from lumastage.scene import Emitter, Scene, load_scene
from lumastage.skeleton import HumanState, forward_kinematics

from conftest import make_object, make_point_light

GOLDEN_DIR = Path(__file__).parent / "golden"


def _loft():
    from importlib import resources
    return load_scene(str(resources.files("lumastage").joinpath("data/scenes/loft.scene.json")))


# ---------------------------------------------------------------- construction

def test_floor_supports_chair():
    floor = make_object("floor", "box", {"x": 4, "y": 4, "z": 0.2}, translation=(0, 0, -0.1))
    chair = make_object("chair", "box", {"x": 0.5, "y": 0.5, "z": 0.45},
                        translation=(1, 1, 0.225), affordances={"seat"})
    g = build_initial_graph(Scene(objects=[floor, chair]))
    sup = [(e.from_id, e.to_id) for e in g.n2n if e.predicate == "supports"]
    assert ("obj:floor", "obj:chair") in sup


def test_empty_scene_with_human_has_three_body_nodes(skeleton):
    caps = forward_kinematics(skeleton, HumanState.rest())
    g = build_initial_graph(Scene(objects=[]), caps)
    assert sorted(n.id for n in g.non_emissive) == ["body:face", "body:full-body", "body:torso"]
    assert g.n2n == []


def test_emissive_node_roles():
    window = Emitter(id="win", kind="env-dominant",
                     transform=RigidTransform.from_euler_deg(90, 0, 0, t=(0, 2, 1.5)),
                     size=1.0, power=100.0)
    key = Emitter(id="key", kind="disk-area",
                  transform=RigidTransform.identity(), size=0.5, power=30.0,
                  controllable=True)
    plain = make_point_light("bulb", (0, 0, 2))
    g = build_initial_graph(Scene(objects=[], emitters=[window, key, plain]))
    roles = {n.id: n.role for n in g.emissive}
    assert roles == {"emi:win": "environmental-dominant", "emi:key": "controllable"}


def test_golden_loft_graph():
    scene = _loft()
    g = build_initial_graph(scene)
    got = g.to_dict()
    golden_path = GOLDEN_DIR / "loft.psg.json"
    want = json.loads(golden_path.read_text())
    assert got == want


# ---------------------------------------------------------------- camera relations

def _two_ball_scene(xa=-0.6, xb=0.6):
    a = make_object("a", "sphere", {"radius": 0.2}, translation=(xa, 0, 1.5))
    b = make_object("b", "sphere", {"radius": 0.2}, translation=(xb, 0, 1.5))
    return Scene(objects=[a, b])


def test_left_of_right_of():
    scene = _two_ball_scene()
    cam = CameraState(transform=look_at((0, -4, 1.5), (0, 0, 1.5)), focal_length_mm=35.0,
                      f_number=8.0, focus_distance=4.0)
    g = build_initial_graph(scene, camera=cam)
    rels = {(e.from_id, e.to_id, e.predicate) for e in g.n2n if e.frame == "camera"}
    assert ("obj:a", "obj:b", "left-of") in rels
    assert ("obj:b", "obj:a", "right-of") in rels


def test_camera_flip_swaps_left_right():
    scene = _two_ball_scene()
    cam_front = CameraState(transform=look_at((0, -4, 1.5), (0, 0, 1.5)),
                            focal_length_mm=35.0, f_number=8.0, focus_distance=4.0)
    cam_back = CameraState(transform=look_at((0, 4, 1.5), (0, 0, 1.5)),
                           focal_length_mm=35.0, f_number=8.0, focus_distance=4.0)
    g = build_initial_graph(scene, camera=cam_front)
    front = {(e.from_id, e.to_id, e.predicate) for e in g.n2n if e.frame == "camera"}
    update_camera_relations(g, cam_back)
    back = {(e.from_id, e.to_id, e.predicate) for e in g.n2n if e.frame == "camera"}
    assert ("obj:a", "obj:b", "left-of") in front
    assert ("obj:a", "obj:b", "right-of") in back


def test_relations_match_projection_oracle():
    rng = np.random.default_rng(12)
    cam = CameraState(transform=look_at((0, -5, 1.5), (0, 0, 1.2)), focal_length_mm=35.0,
                      f_number=8.0, focus_distance=5.0)
    # oracle projection: row-vector math written out independently
    rot = cam.transform.rotation
    eye = cam.transform.translation
    for _ in range(20):
        pa = rng.uniform([-1.5, -1.5, 0.3], [1.5, 1.5, 2.5])
        pb = rng.uniform([-1.5, -1.5, 0.3], [1.5, 1.5, 2.5])
        a = make_object("a", "sphere", {"radius": 0.1}, translation=tuple(pa))
        b = make_object("b", "sphere", {"radius": 0.1}, translation=tuple(pb))
        g = build_initial_graph(Scene(objects=[a, b]), camera=cam)
        rels = {(e.from_id, e.to_id, e.predicate) for e in g.n2n if e.frame == "camera"}

        def u_of(p):
            local = rot.T @ (p - eye)
            return 0.5 + (35.0 * local[0] / -local[2]) / 36.0

        ua, ub = u_of(pa), u_of(pb)
        if ua < ub - 0.02:
            assert ("obj:a", "obj:b", "left-of") in rels
        elif ub < ua - 0.02:
            assert ("obj:a", "obj:b", "right-of") in rels


# ---------------------------------------------------------------- metering

def _facing_quad(oid, x, albedo):
    # quad in the XZ plane (normal +Y) facing a camera that looks along +Y
    return make_object(oid, "plane-quad", {"width": 0.8, "height": 0.8, "thickness": 0.02},
                       translation=(x, 2.0, 1.5), rotation_deg=(90, 0, 0), albedo=albedo)


def _meter_fixture(albedo_a=0.5, albedo_b=1.0, ambient=0.25):
    scene = Scene(objects=[_facing_quad("qa", -0.8, (albedo_a,) * 3),
                           _facing_quad("qb", 0.8, (albedo_b,) * 3)],
                  ambient_env=(ambient,) * 3)
    cam = CameraState(transform=look_at((0, -2, 1.5), (0, 2, 1.5)), focal_length_mm=35.0,
                      f_number=8.0, focus_distance=4.0)
    hdr = render(scene, None, None, cam, RenderSettings(width=96, height=96,
                                                        samples_per_pixel=8, seed=5))
    return scene, cam, hdr


def test_meter_node_uniform_eighth():
    scene, cam, hdr = _meter_fixture(albedo_a=0.5, ambient=0.25)   # 0.5*0.25 = 0.125
    g = build_initial_graph(scene)
    ev = meter_node(g, "obj:qa", hdr, cam)
    assert ev == pytest.approx(0.0, abs=0.05)


def test_meter_node_one_stop_apart():
    scene, cam, hdr = _meter_fixture(albedo_a=0.4, albedo_b=0.8, ambient=0.3)
    g = build_initial_graph(scene)
    ev_a = meter_node(g, "obj:qa", hdr, cam)
    ev_b = meter_node(g, "obj:qb", hdr, cam)
    assert ev_b - ev_a == pytest.approx(1.0, abs=0.05)


def test_meter_occluded_node_unmetered():
    hidden = make_object("hidden", "box", {"x": 0.3, "y": 0.3, "z": 0.3},
                         translation=(0, 2.0, 1.5))
    shell = make_object("shell", "box", {"x": 1.0, "y": 1.0, "z": 1.0},
                        translation=(0, 2.0, 1.5))
    scene = Scene(objects=[hidden, shell], ambient_env=(0.1, 0.1, 0.1))
    cam = CameraState(transform=look_at((0, -2, 1.5), (0, 2, 1.5)), focal_length_mm=50.0,
                      f_number=8.0, focus_distance=4.0)
    hdr = render(scene, None, None, cam, RenderSettings(width=48, height=48,
                                                        samples_per_pixel=4, seed=5))
    g = build_initial_graph(scene)
    # the probe fallback point above the node is inside the shell: unmeterable
    ev = meter_node(g, "obj:hidden", hdr, cam, scene=scene)
    assert ev is None
    assert g.node("obj:hidden").metered_ev100 is None


# ---------------------------------------------------------------- probing

def _probe_scene(lights, ambient=0.02):
    floor = make_object("floor", "box", {"x": 8, "y": 8, "z": 0.2},
                        translation=(0, 0, -0.1), albedo=(0.7, 0.7, 0.7))
    return Scene(objects=[floor], emitters=lights, ambient_env=(ambient,) * 3)


def _ctrl_point(eid, pos, power):
    e = make_point_light(eid, pos, power=power, controllable=True)
    return e


def test_probe_equal_lights_symmetric():
    anchor = np.array([0.0, 0.0, 1.2])
    rig = LightRig(emitters=[_ctrl_point("a", (1.2, 0.9, 1.8), 40.0),
                             _ctrl_point("b", (1.2, -0.9, 1.8), 40.0)])
    scene = _probe_scene([])
    g = build_initial_graph(scene)
    g.emissive.extend([_emissive("a"), _emissive("b")])
    probe_photometrics(g, scene, rig, anchor)
    r = {(e.a, e.b): e.ratio for e in g.e2e}
    assert r[("emi:a", "emi:b")] == pytest.approx(1.0, rel=0.03)


def _emissive(eid):
    from lumastage.psg import EmissiveNode
    return EmissiveNode(f"emi:{eid}", eid, "controllable")


def test_probe_distance_normalization():
    """Equal powers at 1 m and 2 m: deltas 4:1, distance factor 1:4, r = 1."""
    anchor = np.array([0.0, 0.0, 1.0])
    rig = LightRig(emitters=[_ctrl_point("near", (1.0, 0.0, 1.0), 50.0),
                             _ctrl_point("far", (2.0, 0.0, 1.0), 50.0)])
    scene = _probe_scene([], ambient=0.05)
    g = build_initial_graph(scene)
    g.emissive.extend([_emissive("near"), _emissive("far")])
    probe_photometrics(g, scene, rig, anchor)
    r = {(e.a, e.b): e for e in g.e2e}
    edge = r[("emi:near", "emi:far")]
    assert edge.delta_m_a / edge.delta_m_b == pytest.approx(4.0, rel=0.05)
    assert edge.ratio == pytest.approx(1.0, rel=0.05)


def test_probe_power_ratio():
    # mirrored placements keep the probe's metered hemisphere symmetric
    anchor = np.array([0.0, 0.0, 1.2])
    rig = LightRig(emitters=[_ctrl_point("big", (1.0, 0.8, 1.9), 80.0),
                             _ctrl_point("small", (1.0, -0.8, 1.9), 20.0)])
    scene = _probe_scene([])
    g = build_initial_graph(scene)
    g.emissive.extend([_emissive("big"), _emissive("small")])
    probe_photometrics(g, scene, rig, anchor)
    r = {(e.a, e.b): e.ratio for e in g.e2e}
    assert r[("emi:big", "emi:small")] == pytest.approx(4.0, rel=0.03)


def test_probe_chain_and_reciprocity():
    anchor = np.array([0.0, 0.0, 1.2])
    rig = LightRig(emitters=[_ctrl_point("a", (1.5, 0.0, 2.0), 60.0),
                             _ctrl_point("b", (-0.8, 1.1, 1.6), 30.0),
                             _ctrl_point("c", (0.3, -1.4, 2.2), 90.0)])
    scene = _probe_scene([])
    g = build_initial_graph(scene)
    g.emissive.extend([_emissive(x) for x in "abc"])
    probe_photometrics(g, scene, rig, anchor)
    r = {(e.a, e.b): e.ratio for e in g.e2e}
    ab, bc, ac = r[("emi:a", "emi:b")], r[("emi:b", "emi:c")], r[("emi:a", "emi:c")]
    assert ab * bc == pytest.approx(ac, rel=0.05)
    for (a, b), v in r.items():
        assert v * r[(b, a)] == pytest.approx(1.0, abs=1e-6)
    g.validate()


def test_probe_r_to_ambient_and_delta_ev():
    anchor = np.array([0.0, 0.0, 1.2])
    amb_light = make_point_light("house", (0, 0, 2.6), power=15.0)
    rig = LightRig(emitters=[_ctrl_point("key", (1.2, -0.8, 1.9), 45.0)])
    scene = _probe_scene([amb_light], ambient=0.01)
    caps = None
    g = build_initial_graph(scene)
    g.emissive.extend([_emissive("key")])
    g.non_emissive.append(_anchor_node(anchor))
    probe_photometrics(g, scene, rig, anchor, anchor_node_id="body:face")
    key = g.emissive_node("emi:key")
    assert key.r_to_ambient is not None and key.r_to_ambient > 0
    lifts = {(e.emitter_node, e.target_node): e.delta_ev for e in g.e2n}
    assert ("emi:key", "body:face") in lifts
    raw = g.probe_raw
    expected_lift = math.log2(raw["per_emitter"]["emi:key"]["m_with_ambient"] / raw["m_amb"])
    assert lifts[("emi:key", "body:face")] == pytest.approx(expected_lift, abs=1e-9)


def _anchor_node(pos):
    from lumastage.psg import NonEmissiveNode
    return NonEmissiveNode(id="body:face", kind="body-part", label="face",
                           affordances=frozenset(), centroid=np.asarray(pos, dtype=float),
                           aabb_lo=np.asarray(pos) - 0.1, aabb_hi=np.asarray(pos) + 0.1,
                           salience=1.0, source_id="face")


def test_probe_nondestructive_flags():
    amb_light = make_point_light("house", (0, 0, 2.6), power=15.0)
    key = _ctrl_point("key", (1.2, -0.8, 1.9), 45.0)
    key.enabled = False          # disabled keys stay disabled after probing
    rig = LightRig(emitters=[key])
    scene = _probe_scene([amb_light])
    flags_before = [(e.id, e.enabled) for e in scene.emitters + rig.emitters]
    g = build_initial_graph(scene)
    g.emissive.extend([_emissive("key")])
    probe_photometrics(g, scene, rig, (0, 0, 1.2))
    assert [(e.id, e.enabled) for e in scene.emitters + rig.emitters] == flags_before


def test_zero_ambient_infinity_sentinel():
    rig = LightRig(emitters=[_ctrl_point("key", (1.0, 0.0, 1.5), 40.0)])
    scene = _probe_scene([], ambient=0.0)
    g = build_initial_graph(scene)
    g.emissive.extend([_emissive("key")])
    probe_photometrics(g, scene, rig, (0, 0, 1.2))
    assert math.isinf(g.emissive_node("emi:key").r_to_ambient)
    # serialization carries the sentinel
    again = PhotoSceneGraph.from_dict(json.loads(g.to_json()))
    assert math.isinf(again.emissive_node("emi:key").r_to_ambient)


# ---------------------------------------------------------------- query / serialization

def test_query_seat_on_loft():
    g = build_initial_graph(_loft())
    seats = query(g, affordance="seat")
    assert [n.id for n in seats] == ["obj:chair"]


def test_query_unknown_tag_empty():
    g = build_initial_graph(_loft())
    assert query(g, affordance="landmark") != []
    assert query(g, affordance="seat", ) != []
    from lumastage.psg import query as q
    assert q(g, affordance="backdrop") != []
    assert q(g, predicate="no-such-predicate") == []


def test_composite_query_matches_linear_scan():
    g = build_initial_graph(_loft())
    seats = {n.id for n in query(g, affordance="seat")}
    near_pairs = {(e.from_id, e.to_id) for e in query(g, predicate="near")}
    window_near = {a for (a, b) in near_pairs if b == "obj:side_table"}
    composite = seats & window_near
    # oracle: brute-force scan over raw lists
    brute = set()
    for n in g.non_emissive:
        if "seat" not in n.affordances:
            continue
        for e in g.n2n:
            if e.predicate == "near" and e.from_id == n.id and e.to_id == "obj:side_table":
                brute.add(n.id)
    assert composite == brute


def test_serialization_roundtrip_and_revision():
    g = build_initial_graph(_loft())
    rev0 = g.revision
    cam = CameraState(transform=look_at((0, -3, 1.6), (0.5, 1.5, 1.2)),
                      focal_length_mm=50.0, f_number=8.0, focus_distance=4.0)
    update_camera_relations(g, cam)
    assert g.revision > rev0
    again = PhotoSceneGraph.from_dict(json.loads(g.to_json()))
    assert again.to_dict() == g.to_dict()
