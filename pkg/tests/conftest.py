from __future__ import annotations

import numpy as np
import pytest

from lumastage.geometry import RigidTransform
from lumastage.scene import Emitter, Scene, SceneObject
from lumastage.skeleton import load_pose_presets, load_skeleton


def make_object(oid, shape, dims, translation=(0, 0, 0), rotation_deg=(0, 0, 0),
                albedo=(0.5, 0.5, 0.5), affordances=(), label=None):
    return SceneObject(
        id=oid, label=label or oid, shape=shape,
        transform=RigidTransform.from_euler_deg(*rotation_deg, t=translation),
        dimensions=dims, albedo=np.array(albedo), affordances=frozenset(affordances))


def make_point_light(eid, position, power=50.0, controllable=False, **kw):
    return Emitter(id=eid, kind="point",
                   transform=RigidTransform.from_euler_deg(0, 0, 0, t=position),
                   power=power, controllable=controllable, **kw)


@pytest.fixture(scope="session")
def skeleton():
    return load_skeleton()


@pytest.fixture(scope="session")
def pose_presets():
    return load_pose_presets()


@pytest.fixture
def floor_scene():
    """A 6x6 m floor slab with its top face at z = 0."""
    floor = make_object("floor", "box", {"x": 6.0, "y": 6.0, "z": 0.2},
                        translation=(0, 0, -0.1), affordances={"stand-zone"})
    return Scene(objects=[floor], ambient_env=(0.05, 0.05, 0.05))


@pytest.fixture
def empty_scene():
    return Scene(objects=[], ambient_env=(0.0, 0.0, 0.0))
