import json

import numpy as np
import pytest

from lumastage.color import kelvin_to_tint, luma
from lumastage.scene import (SceneValidationError, load_scene, save_scene,
                             scene_from_dict, serialize_scene)

from conftest import make_object, make_point_light
from lumastage.scene import Scene


MINIMAL = {
    "schema": "lumastage-scene/1",
    "objects": [
        {"id": "floor", "label": "floor", "shape": "plane-quad",
         "transform": {"translation": [0, 0, 0], "rotation_deg": [0, 0, 0]},
         "dimensions": {"width": 4.0, "height": 4.0, "thickness": 0.1},
         "albedo": [0.6, 0.6, 0.6], "affordances": ["stand-zone"]}
    ],
    "emitters": [
        {"id": "bulb", "kind": "point",
         "transform": {"translation": [0, 0, 2], "rotation_deg": [0, 0, 0]},
         "size": 0.0, "power": 40.0, "color_temp": 3500.0,
         "controllable": False, "enabled": True}
    ],
    "occluders": [],
    "ambient_env": [0.02, 0.02, 0.02],
    "gravity": [0, 0, -1],
    "voxel_resolution": 0.05,
}


def test_minimal_scene_roundtrip(tmp_path):
    p = tmp_path / "minimal.scene.json"
    p.write_text(json.dumps(MINIMAL))
    scene = load_scene(p)
    assert len(scene.objects) == 1
    assert len(scene.emitters) == 1
    assert scene.objects[0].id == "floor"


def test_albedo_out_of_range_names_object():
    bad = json.loads(json.dumps(MINIMAL))
    bad["objects"][0]["albedo"] = [1.2, 0.5, 0.5]
    with pytest.raises(SceneValidationError) as exc:
        scene_from_dict(bad)
    assert "floor" in str(exc.value)


def test_duplicate_id_rejected():
    bad = json.loads(json.dumps(MINIMAL))
    bad["emitters"].append(dict(bad["emitters"][0]))
    with pytest.raises(SceneValidationError) as exc:
        scene_from_dict(bad)
    assert "bulb" in str(exc.value)


def test_env_dominant_must_not_be_controllable():
    bad = json.loads(json.dumps(MINIMAL))
    bad["emitters"][0].update(kind="env-dominant", size=1.0, controllable=True)
    with pytest.raises(SceneValidationError):
        scene_from_dict(bad)


def test_serialize_load_lossless(tmp_path):
    scene = Scene(
        objects=[make_object("box1", "box", {"x": 1, "y": 2, "z": 0.5},
                             translation=(0.5, -1, 0.25), rotation_deg=(0, 0, 30),
                             affordances={"seat"}),
                 make_object("ball", "sphere", {"radius": 0.3}, translation=(2, 2, 0.3))],
        emitters=[make_point_light("key", (0, 0, 2.0), controllable=True)],
        ambient_env=(0.01, 0.02, 0.03))
    p = tmp_path / "s.scene.json"
    save_scene(scene, p)
    again = load_scene(p)
    # byte-identical re-serialization
    assert serialize_scene(again) == p.read_text()
    assert [o.id for o in again.objects] == ["box1", "ball"]
    assert np.allclose(again.objects[0].transform.rotation, scene.objects[0].transform.rotation)
    assert again.objects[0].affordances == frozenset({"seat"})


def test_golden_scene_reserialization_byte_identical():
    from importlib import resources
    ref = resources.files("lumastage").joinpath("data/scenes/loft.scene.json")
    text = ref.read_text(encoding="utf-8")
    scene = scene_from_dict(json.loads(text))
    assert serialize_scene(scene) == text


def test_box_contains_and_aabb():
    box = make_object("b", "box", {"x": 1, "y": 1, "z": 1})
    assert box.contains(np.array([[0, 0, 0], [0.49, 0.49, 0.49], [0.51, 0, 0]])).tolist() \
        == [True, True, False]
    lo, hi = box.aabb()
    assert np.allclose(lo, [-0.5] * 3) and np.allclose(hi, [0.5] * 3)


def test_rotated_box_contains():
    box = make_object("b", "box", {"x": 2, "y": 0.2, "z": 0.2}, rotation_deg=(0, 0, 90))
    # after 90 deg yaw the long axis lies along Y
    assert box.contains(np.array([[0, 0.9, 0]]))[0]
    assert not box.contains(np.array([[0.9, 0, 0]]))[0]


def test_cylinder_and_sphere_contains():
    cyl = make_object("c", "cylinder", {"radius": 0.5, "height": 2.0})
    assert cyl.contains(np.array([[0.4, 0, 0.9], [0.4, 0, 1.1], [0.6, 0, 0]])).tolist() \
        == [True, False, False]
    ball = make_object("s", "sphere", {"radius": 1.0}, translation=(1, 1, 1))
    assert ball.contains(np.array([[1, 1, 1.99], [1, 1, 2.01]])).tolist() == [True, False]


def test_ray_intersect_box_front_face():
    box = make_object("b", "box", {"x": 1, "y": 1, "z": 1})
    o = np.array([[-5.0, 0, 0]])
    d = np.array([[1.0, 0, 0]])
    t, n = box.intersect(o, d)
    assert t[0] == pytest.approx(4.5, abs=1e-9)
    assert np.allclose(n[0], [-1, 0, 0])


def test_surface_samples_on_surface():
    ball = make_object("s", "sphere", {"radius": 0.7}, translation=(1, 0, 0))
    pts = ball.sample_surface(64, np.random.default_rng(1).random((64, 3)))
    r = np.linalg.norm(pts - np.array([1, 0, 0]), axis=1)
    assert np.allclose(r, 0.7, atol=1e-9)


def test_kelvin_tint_luma_normalized():
    for k in (1500, 3200, 5600, 6500, 12000):
        tint = kelvin_to_tint(k)
        assert luma(tint) == pytest.approx(1.0, abs=1e-9)
    warm = kelvin_to_tint(2500)
    cool = kelvin_to_tint(9000)
    assert warm[0] / warm[2] > 1.5          # warm is red-heavy
    assert cool[2] / cool[0] > 1.0          # cool is blue-heavy
