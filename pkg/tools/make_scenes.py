#!/usr/bin/env python3
"""Regenerate the packaged golden scenes (canonical serialization)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from lumastage.geometry import RigidTransform
from lumastage.scene import Emitter, Scene, SceneObject, save_scene

OUT = Path(__file__).resolve().parent.parent / "src" / "lumastage" / "data" / "scenes"


def T(x=0.0, y=0.0, z=0.0, rx=0.0, ry=0.0, rz=0.0):
    return RigidTransform.from_euler_deg(rx, ry, rz, t=(x, y, z))


def obj(oid, shape, dims, transform, albedo, label=None, affordances=()):
    return SceneObject(id=oid, label=label or oid.replace("_", " "), shape=shape,
                       transform=transform, dimensions=dims,
                       albedo=np.array(albedo), affordances=frozenset(affordances))


def loft():
    objects = [
        obj("floor", "box", {"x": 6.0, "y": 6.0, "z": 0.2}, T(z=-0.1),
            (0.45, 0.38, 0.32), affordances=("stand-zone",)),
        obj("rug", "box", {"x": 2.2, "y": 1.8, "z": 0.02}, T(x=-0.4, y=0.2, z=0.01),
            (0.5, 0.2, 0.18), affordances=("stand-zone",)),
        obj("back_wall", "box", {"x": 6.0, "y": 0.2, "z": 3.0}, T(y=3.0, z=1.5),
            (0.75, 0.73, 0.7), affordances=("backdrop",)),
        obj("side_wall", "box", {"x": 0.2, "y": 6.0, "z": 3.0}, T(x=-3.0, z=1.5),
            (0.7, 0.68, 0.66), affordances=("backdrop",)),
        obj("chair", "box", {"x": 0.48, "y": 0.48, "z": 0.44}, T(x=1.1, y=1.9, z=0.22),
            (0.32, 0.2, 0.16), label="red chair", affordances=("seat",)),
        obj("chair_back", "box", {"x": 0.48, "y": 0.1, "z": 0.55},
            T(x=1.1, y=2.14, z=0.72), (0.32, 0.2, 0.16), label="chair back"),
        obj("side_table", "box", {"x": 0.5, "y": 0.5, "z": 1.0}, T(x=1.95, y=1.85, z=0.5),
            (0.55, 0.42, 0.3), label="side table",
            affordances=("table-surface", "lean-surface")),
        obj("bookshelf", "box", {"x": 1.2, "y": 0.35, "z": 2.1}, T(x=-1.9, y=2.7, z=1.05),
            (0.4, 0.3, 0.22), affordances=("landmark", "backdrop")),
    ]
    emitters = [
        Emitter(id="window", kind="env-dominant", transform=T(x=1.4, y=2.88, z=1.7, rx=90.0),
                size=1.6, power=420.0, color_temp=6200.0),
        Emitter(id="ceiling_lamp", kind="point", transform=T(x=-0.5, y=0.5, z=2.7),
                power=25.0, color_temp=3000.0),
    ]
    return Scene(objects=objects, emitters=emitters,
                 ambient_env=(0.018, 0.018, 0.02), voxel_resolution=0.05)


def studio():
    objects = [
        obj("floor", "box", {"x": 7.0, "y": 7.0, "z": 0.2}, T(z=-0.1),
            (0.18, 0.18, 0.18), affordances=("stand-zone",)),
        obj("backdrop", "box", {"x": 4.5, "y": 0.15, "z": 3.0}, T(y=2.4, z=1.5),
            (0.42, 0.42, 0.45), affordances=("backdrop",)),
        obj("stool", "cylinder", {"radius": 0.22, "height": 0.5}, T(x=0.3, y=0.9, z=0.25),
            (0.25, 0.22, 0.2), affordances=("seat",)),
        obj("posing_table", "box", {"x": 0.6, "y": 0.4, "z": 1.02},
            T(x=-1.2, y=1.0, z=0.51), (0.3, 0.28, 0.26),
            affordances=("table-surface", "lean-surface")),
        obj("prop_column", "cylinder", {"radius": 0.18, "height": 1.9},
            T(x=1.8, y=1.6, z=0.95), (0.6, 0.58, 0.55), affordances=("landmark",)),
    ]
    emitters = [
        Emitter(id="work_light", kind="point", transform=T(x=-2.4, y=-1.8, z=2.5),
                power=18.0, color_temp=4000.0),
    ]
    return Scene(objects=objects, emitters=emitters,
                 ambient_env=(0.01, 0.01, 0.011), voxel_resolution=0.05)


def cafe():
    objects = [
        obj("floor", "box", {"x": 6.0, "y": 5.0, "z": 0.2}, T(z=-0.1),
            (0.4, 0.33, 0.26), affordances=("stand-zone",)),
        obj("street_wall", "box", {"x": 6.0, "y": 0.2, "z": 3.0}, T(y=2.5, z=1.5),
            (0.62, 0.58, 0.52), affordances=("backdrop",)),
        obj("bar_wall", "box", {"x": 0.2, "y": 5.0, "z": 3.0}, T(x=3.0, z=1.5),
            (0.5, 0.42, 0.35), affordances=("backdrop",)),
        obj("bench", "box", {"x": 1.4, "y": 0.45, "z": 0.46}, T(x=-0.6, y=1.9, z=0.23),
            (0.36, 0.26, 0.18), affordances=("seat",)),
        obj("cafe_table", "cylinder", {"radius": 0.4, "height": 0.06},
            T(x=-0.6, y=1.0, z=1.01), (0.5, 0.44, 0.38),
            affordances=("table-surface", "lean-surface")),
        obj("table_column", "cylinder", {"radius": 0.07, "height": 0.98},
            T(x=-0.6, y=1.0, z=0.49), (0.3, 0.28, 0.26), label="table column"),
        obj("espresso_bar", "box", {"x": 0.6, "y": 2.6, "z": 1.1}, T(x=2.5, y=0.4, z=0.55),
            (0.34, 0.27, 0.22), affordances=("landmark",)),
    ]
    emitters = [
        Emitter(id="front_window", kind="env-dominant", transform=T(x=-0.8, y=2.38, z=1.6, rx=90.0),
                size=1.9, power=520.0, color_temp=6500.0),
        Emitter(id="pendant", kind="point", transform=T(x=-0.6, y=1.0, z=2.3),
                power=22.0, color_temp=2800.0),
    ]
    return Scene(objects=objects, emitters=emitters,
                 ambient_env=(0.02, 0.02, 0.022), voxel_resolution=0.05)


def gallery():
    objects = [
        obj("floor", "box", {"x": 7.0, "y": 6.0, "z": 0.2}, T(z=-0.1),
            (0.62, 0.6, 0.58), affordances=("stand-zone",)),
        obj("north_wall", "box", {"x": 7.0, "y": 0.2, "z": 3.2}, T(y=3.0, z=1.6),
            (0.78, 0.77, 0.75), affordances=("backdrop",)),
        obj("pedestal", "box", {"x": 0.5, "y": 0.5, "z": 1.1}, T(x=1.3, y=1.8, z=0.55),
            (0.72, 0.7, 0.68), affordances=("landmark", "lean-surface")),
        obj("sculpture", "sphere", {"radius": 0.28}, T(x=1.3, y=1.8, z=1.43),
            (0.85, 0.82, 0.35), affordances=("landmark",)),
        obj("viewing_bench", "box", {"x": 1.5, "y": 0.5, "z": 0.45},
            T(x=-1.4, y=0.4, z=0.225), (0.3, 0.3, 0.32), affordances=("seat",)),
    ]
    emitters = [
        Emitter(id="track_spot_a", kind="spot", transform=T(x=1.3, y=0.6, z=2.9, rx=-35.0),
                power=60.0, color_temp=4800.0, spot_angle_deg=35.0),
        Emitter(id="track_spot_b", kind="spot", transform=T(x=-1.2, y=1.2, z=2.9, rx=-25.0),
                power=40.0, color_temp=4800.0, spot_angle_deg=40.0),
    ]
    return Scene(objects=objects, emitters=emitters,
                 ambient_env=(0.035, 0.035, 0.037), voxel_resolution=0.05)


def terrace():
    objects = [
        obj("deck", "box", {"x": 6.0, "y": 5.0, "z": 0.2}, T(z=-0.1),
            (0.5, 0.42, 0.34), affordances=("stand-zone",)),
        obj("railing", "box", {"x": 0.12, "y": 4.6, "z": 1.05}, T(x=2.9, z=0.525),
            (0.35, 0.33, 0.3), affordances=("lean-surface",)),
        obj("planter", "box", {"x": 0.6, "y": 0.6, "z": 0.65}, T(x=-2.4, y=1.9, z=0.325),
            (0.3, 0.34, 0.24), affordances=("landmark",)),
        obj("bench", "box", {"x": 0.5, "y": 1.5, "z": 0.44}, T(x=-2.45, y=-0.4, z=0.22),
            (0.46, 0.4, 0.32), affordances=("seat",)),
        obj("parapet", "box", {"x": 6.0, "y": 0.15, "z": 0.9}, T(y=-2.45, z=0.45),
            (0.55, 0.52, 0.5), affordances=("backdrop",)),
    ]
    emitters = [
        Emitter(id="sun_patch", kind="env-dominant", transform=T(x=4.4, y=-1.6, z=3.4, rx=48.0, rz=65.0),
                size=2.2, power=2600.0, color_temp=5200.0),
        Emitter(id="string_light", kind="point", transform=T(x=0.4, y=1.6, z=2.4),
                power=10.0, color_temp=2400.0),
    ]
    return Scene(objects=objects, emitters=emitters,
                 ambient_env=(0.06, 0.065, 0.075), voxel_resolution=0.05)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, build in [("loft", loft), ("studio", studio), ("cafe", cafe),
                        ("gallery", gallery), ("terrace", terrace)]:
        scene = build()
        scene.validate()
        save_scene(scene, OUT / f"{name}.scene.json")
        print(f"wrote {name}: {len(scene.objects)} objects, {len(scene.emitters)} emitters")


if __name__ == "__main__":
    main()
