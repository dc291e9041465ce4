"""Lighting preset table and camera-relative rig instantiation.

Preset device azimuths are measured from the subject-to-camera axis as seen
from above (positive = counter-clockwise), elevations from the horizontal,
distances from the face anchor.  Key power is calibrated so the probed
key-to-ambient ratio hits the preset target; fill power follows from the
key-to-fill target via emitter linearity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..geometry import look_at, spherical_offset
from ..psg import ambient_emitter_ids
from ..render import LightRig, probe_measure
from ..scene import Emitter, OccluderPanel, Scene

LIGHTING_SCHEMA = "lumastage-lighting/1"
CALIBRATION_POWER_W = 30.0
POWER_MIN_W = 0.5
POWER_MAX_W = 2500.0
DARK_SCENE_KEY_W = 60.0        # fallback when there is no ambient to ratio against
PRESET_ORDER = ("rembrandt", "loop", "butterfly", "split", "three-point", "broad",
                "short", "rim-only", "ambient-plus-negative-fill")


@dataclass
class PresetDevice:
    role: str
    kind: str
    azimuth_deg: float
    elevation_deg: float
    distance_m: float
    relative_power: float
    size_m: float
    kelvin: float


@dataclass
class LightingPreset:
    name: str
    devices: list
    key_to_ambient: float | None
    key_to_fill: float | None

    def validate(self):
        keys = [d for d in self.devices if d.role == "key"]
        if self.name != "ambient-plus-negative-fill" and len(keys) != 1:
            raise ValueError(f"preset {self.name} must have exactly one key device")


def load_lighting_presets(data: dict | None = None) -> dict:
    if data is None:
        ref = resources.files("lumastage").joinpath("data/lighting/presets.json")
        data = json.loads(ref.read_text(encoding="utf-8"))
    if data.get("schema") != LIGHTING_SCHEMA:
        raise ValueError(f"unsupported lighting schema {data.get('schema')!r}")
    out = {}
    for rec in data["presets"]:
        preset = LightingPreset(
            name=rec["name"],
            key_to_ambient=rec.get("key_to_ambient"),
            key_to_fill=rec.get("key_to_fill"),
            devices=[PresetDevice(**d) for d in rec["devices"]])
        preset.validate()
        out[preset.name] = preset
    return out


def device_position(face: np.ndarray, camera_pos: np.ndarray, dev: PresetDevice) -> np.ndarray:
    axis = camera_pos - face
    axis[2] = 0.0
    if np.linalg.norm(axis) < 1e-9:
        axis = np.array([1.0, 0.0, 0.0])
    off = spherical_offset(math.radians(dev.azimuth_deg), math.radians(dev.elevation_deg),
                           dev.distance_m, axis)
    return face + off


def instantiate_preset(preset: LightingPreset, face: np.ndarray,
                       camera_pos: np.ndarray, powers: dict | None = None) -> LightRig:
    """Camera-relative rig for the preset; device ids are rig:<role>."""
    emitters, panels = [], []
    for dev in preset.devices:
        pos = device_position(face, camera_pos, dev)
        xform = look_at(pos, face)
        if dev.kind == "panel":
            panels.append(OccluderPanel(id=f"rig:{dev.role}", transform=xform,
                                        width=dev.size_m, height=dev.size_m))
            continue
        power = (powers or {}).get(dev.role, CALIBRATION_POWER_W * dev.relative_power)
        emitters.append(Emitter(id=f"rig:{dev.role}", kind=dev.kind, transform=xform,
                                size=dev.size_m, power=power, color_temp=dev.kelvin,
                                controllable=True, enabled=True,
                                spot_angle_deg=25.0))
    rig = LightRig(emitters=emitters, panels=panels)
    rig.validate()
    return rig


def calibrate_rig(preset: LightingPreset, scene: Scene, face: np.ndarray,
                  camera_pos: np.ndarray) -> tuple[LightRig, dict]:
    """Set device powers from probe measurements (closed form by linearity)."""
    rig = instantiate_preset(preset, face, camera_pos)
    if not rig.emitters:
        return rig, {"calibrated": False, "reason": "no emitters in preset"}
    toward_camera = np.asarray(camera_pos, dtype=float) - face
    norm = np.linalg.norm(toward_camera)
    toward_camera = toward_camera / norm if norm > 1e-9 else np.array([1.0, 0.0, 0.0])
    # probe slightly toward the camera so the probe ball clears the head
    probe_pos = face + toward_camera * 0.25
    amb_ids = ambient_emitter_ids(scene)
    m_amb = probe_measure(scene, rig, probe_pos, frozenset(amb_ids),
                          view_dir=toward_camera)
    report = {"calibrated": True, "m_amb": m_amb, "powers": {}}
    deltas = {}
    for em in rig.emitters:
        m_with = probe_measure(scene, rig, probe_pos, frozenset(amb_ids | {em.id}),
                               view_dir=toward_camera)
        deltas[em.id] = max(0.0, m_with - m_amb)
    key = rig.device_by_id("rig:key") if any(e.id == "rig:key" for e in rig.emitters) else None
    if key is not None and deltas.get("rig:key", 0.0) > 0:
        if m_amb > 0 and preset.key_to_ambient:
            needed = preset.key_to_ambient * m_amb
            key.power = float(np.clip(key.power * needed / deltas["rig:key"],
                                      POWER_MIN_W, POWER_MAX_W))
        else:
            key.power = DARK_SCENE_KEY_W
        scale_key = key.power / CALIBRATION_POWER_W
        for em in rig.emitters:
            if em.id == "rig:key":
                continue
            dev = next(d for d in preset.devices if f"rig:{d.role}" == em.id)
            if dev.role == "fill" and preset.key_to_fill and deltas.get(em.id, 0.0) > 0:
                # probed ratio at current powers, then closed-form rescale
                d_key = float(np.linalg.norm(
                    rig.device_by_id("rig:key").position() - probe_pos))
                d_fill = float(np.linalg.norm(em.position() - probe_pos))
                r_now = (deltas["rig:key"] * scale_key / deltas[em.id]) \
                    * (d_key / d_fill) ** 2
                em.power = float(np.clip(em.power * r_now / preset.key_to_fill,
                                         POWER_MIN_W, POWER_MAX_W))
            else:
                em.power = float(np.clip(key.power * dev.relative_power,
                                         POWER_MIN_W, POWER_MAX_W))
    report["powers"] = {e.id: e.power for e in rig.emitters}
    return rig, report


def adjust_device(rig: LightRig, code: str, magnitude: str) -> LightRig:
    """Apply one lighting hint to the rig in place; returns the rig."""
    small = magnitude == "small"
    factor = math.sqrt(2.0) if small else 2.0

    def dev(did):
        try:
            return rig.device_by_id(did)
        except KeyError:
            return None

    key = dev("rig:key")
    fill = dev("rig:fill")
    if code == "key-brighter" and key:
        key.power = min(key.power * factor, POWER_MAX_W)
    elif code == "key-dimmer" and key:
        key.power = max(key.power / factor, POWER_MIN_W)
    elif code == "key-larger" and key:
        key.size *= 1.5
    elif code == "key-smaller" and key:
        key.size /= 1.5
    elif code == "fill-up" and fill:
        fill.power = min(fill.power * factor, POWER_MAX_W)
    elif code == "fill-down" and fill:
        fill.power = max(fill.power / factor, POWER_MIN_W)
    return rig


def add_negative_fill(rig: LightRig, face: np.ndarray, camera_pos: np.ndarray) -> LightRig:
    if any(p.id == "rig:negative-fill" for p in rig.panels):
        return rig
    dev = PresetDevice(role="negative-fill", kind="panel", azimuth_deg=-80.0,
                       elevation_deg=0.0, distance_m=0.9, relative_power=0.0,
                       size_m=1.2, kelvin=5500.0)
    pos = device_position(face, camera_pos, dev)
    rig.panels.append(OccluderPanel(id="rig:negative-fill", transform=look_at(pos, face),
                                    width=dev.size_m, height=dev.size_m))
    return rig
