"""Direct-lighting Monte Carlo renderer with a thin-lens camera.

Lambertian surfaces only; radiance is linear in emitters (no global
illumination), which keeps photometric probing exactly additive.  Occluder
panels block shadow rays but are invisible to camera rays.  Emitter
radiometry, with P the `power` field in watts:

  point        intensity I = P / 4pi, irradiance I cos(t) / d^2
  spot         I = P / (2pi (1 - cos(half-angle))) inside the cone, else 0
  directional  P is irradiance (W/m^2) on a facing plane; beam along local -Z
  rect/disk    emitter radiance L_e = P / (pi A), two-sided; area-sampled
  env-dominant rect-area semantics (a window pane)

Area emitters are camera-visible (they render at L_e); emitter surfaces do
not themselves occlude shadow rays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng, shapes
from .color import kelvin_to_tint, luma
from .exposure import CameraState
from .scene import Emitter, OccluderPanel, Scene, SceneObject

SHADOW_EPS = 1e-4
PROBE_RADIUS = 0.1
PROBE_ALBEDO = 0.18

_STREAM_PIXEL_JITTER = 1
_STREAM_LENS = 2
_STREAM_LIGHT = 3
_STREAM_SURFACE = 4


@dataclass
class RenderSettings:
    width: int = 128
    height: int = 128
    samples_per_pixel: int = 16
    seed: int = 0
    max_shadow_rays_per_light: int = 4

    def scaled(self, **kw) -> "RenderSettings":
        d = self.__dict__ | kw
        return RenderSettings(**d)


@dataclass
class LightRig:
    emitters: list = field(default_factory=list)
    panels: list = field(default_factory=list)

    def validate(self):
        ids = [e.id for e in self.emitters] + [p.id for p in self.panels]
        if len(ids) != len(set(ids)):
            raise ValueError("rig device ids must be unique")
        for e in self.emitters:
            if not e.controllable:
                raise ValueError(f"rig emitter {e.id!r} must be controllable")

    def enabled_emitters(self) -> list:
        return [e for e in self.emitters if e.enabled]

    def device_by_id(self, did: str):
        for e in self.emitters:
            if e.id == did:
                return e
        for p in self.panels:
            if p.id == did:
                return p
        raise KeyError(did)

    def to_dict(self) -> dict:
        from .scene import scene_to_dict, Scene as _S
        shell = scene_to_dict(_S(emitters=self.emitters, occluders=self.panels))
        return {"emitters": shell["emitters"], "occluders": shell["occluders"]}

    @classmethod
    def from_dict(cls, d: dict) -> "LightRig":
        from .scene import scene_from_dict, SCENE_SCHEMA
        shell = scene_from_dict({"schema": SCENE_SCHEMA,
                                 "emitters": d.get("emitters", []),
                                 "occluders": d.get("occluders", [])})
        return cls(emitters=shell.emitters, panels=shell.occluders)


@dataclass
class _Prim:
    kind: str                    # "object" | "capsule" | "emitter" | "probe"
    ref: object
    albedo: np.ndarray | None
    emission: np.ndarray | None = None

    def intersect(self, o, d):
        if self.kind == "object":
            return self.ref.intersect(o, d)
        if self.kind == "capsule":
            c = self.ref
            return shapes.capsule_intersect(o, d, c.p0, c.p1, c.radius)
        if self.kind == "probe":
            pos, r = self.ref
            t, n = shapes.sphere_intersect(o - pos, d, r)
            return t, n
        e: Emitter = self.ref
        inv = e.transform.inverse()
        ol, dl = inv.apply(o), inv.apply_vector(d)
        if e.kind == "disk-area":
            t, n = shapes.quad_intersect(ol, dl, e.size * 0.5, e.size * 0.5)
            p = ol + np.where(np.isfinite(t), t, 0.0)[:, None] * dl
            keep = p[:, 0] ** 2 + p[:, 1] ** 2 <= (e.size * 0.5) ** 2
            t = np.where(keep, t, np.inf)
        else:
            t, n = shapes.quad_intersect(ol, dl, e.size * 0.5, e.size * 0.5)
        return t, e.transform.apply_vector(n)


def _emitter_tint(e: Emitter) -> np.ndarray:
    return kelvin_to_tint(e.color_temp)


def _emitter_radiance(e: Emitter) -> np.ndarray:
    area = e.size * e.size if e.kind != "disk-area" else np.pi * (e.size * 0.5) ** 2
    return _emitter_tint(e) * (e.power / (np.pi * max(area, 1e-9)))


def scene_prims(scene: Scene, capsules=None, human_albedo=None,
                emitters: list | None = None, probe=None) -> list:
    prims = [_Prim("object", o, o.albedo) for o in scene.objects]
    if capsules:
        alb = np.asarray(human_albedo if human_albedo is not None else [0.7, 0.6, 0.5])
        prims += [_Prim("capsule", c, alb) for c in capsules]
    for e in emitters or []:
        if e.is_area:
            prims.append(_Prim("emitter", e, None, emission=_emitter_radiance(e)))
    if probe is not None:
        prims.append(_Prim("probe", probe, np.full(3, PROBE_ALBEDO)))
    return prims


def _intersect_scene(prims, o, d):
    n_rays = len(o)
    best_t = np.full(n_rays, np.inf)
    best_n = np.zeros((n_rays, 3))
    best_id = np.full(n_rays, -1, dtype=np.int32)
    for i, prim in enumerate(prims):
        t, nrm = prim.intersect(o, d)
        closer = t < best_t
        if closer.any():
            best_t = np.where(closer, t, best_t)
            best_n[closer] = nrm[closer]
            best_id = np.where(closer, i, best_id)
    return best_t, best_n, best_id


def _occluded(prims, o, d, tmax):
    """Boolean per ray: any blocking hit strictly before tmax."""
    blocked = np.zeros(len(o), dtype=bool)
    for prim in prims:
        if prim.emission is not None:
            continue
        live = ~blocked
        if not live.any():
            break
        t, _ = prim.intersect(o[live], d[live])
        hit = t < tmax[live] - SHADOW_EPS
        idx = np.nonzero(live)[0][hit]
        blocked[idx] = True
    return blocked


def _light_samples(e: Emitter, n: int, seed: int, lane: np.ndarray):
    """Sample points on an area emitter (world frame), else its position."""
    if not e.is_area:
        return e.position()[None, :].repeat(n, axis=0)
    u1 = rng.uniforms(seed, _STREAM_LIGHT, lane, np.full(len(lane), rng.string_key(e.id) & 0xFFFF, dtype=np.uint64))
    u2 = rng.uniforms(seed, _STREAM_LIGHT + 7, lane, np.full(len(lane), rng.string_key(e.id) & 0xFFFF, dtype=np.uint64))
    if e.kind == "disk-area":
        r = e.size * 0.5 * np.sqrt(u1)
        th = 2 * np.pi * u2
        local = np.stack([r * np.cos(th), r * np.sin(th), np.zeros(len(u1))], axis=-1)
    else:
        local = np.stack([(u1 - 0.5) * e.size, (u2 - 0.5) * e.size, np.zeros(len(u1))], axis=-1)
    return e.transform.apply(local)


def _shade(prims, occl_prims, emitters, x, n, albedo, ambient, seed, lane,
           n_shadow: int):
    """Outgoing Lambertian radiance at hit points x with normals n."""
    radiance = albedo * ambient[None, :]
    offset = x + n * SHADOW_EPS * 10
    for e in emitters:
        tint = _emitter_tint(e)
        if e.kind == "directional":
            beam = e.transform.apply_vector(np.array([0.0, 0.0, -1.0]))
            wi = -beam / np.linalg.norm(beam)
            cos_s = np.maximum(n @ wi, 0.0)
            live = cos_s > 0
            vis = np.zeros(len(x))
            if live.any():
                far = np.full(live.sum(), 1e8)
                blocked = _occluded(occl_prims, offset[live],
                                    np.broadcast_to(wi, (live.sum(), 3)), far)
                vis[live] = ~blocked
            e_irr = e.power * cos_s * vis
            radiance = radiance + (albedo / np.pi) * (e_irr[:, None] * tint[None, :])
            continue
        nsamp = n_shadow if e.is_area else 1
        contrib = np.zeros(len(x))
        for k in range(nsamp):
            pts = _light_samples(e, len(x), seed, lane * np.uint64(nsamp) + np.uint64(k))
            wi = pts - x
            d2 = np.einsum("ij,ij->i", wi, wi)
            dist = np.sqrt(d2)
            wi_hat = wi / np.maximum(dist[:, None], 1e-12)
            cos_s = np.maximum(np.einsum("ij,ij->i", n, wi_hat), 0.0)
            live = cos_s > 0
            if e.kind == "spot":
                beam = e.transform.apply_vector(np.array([0.0, 0.0, -1.0]))
                cos_cone = np.cos(np.radians(e.spot_angle_deg))
                inside = (-wi_hat) @ beam >= cos_cone
                live &= inside
            if not live.any():
                continue
            vis = np.zeros(len(x))
            blocked = _occluded(occl_prims, offset[live], wi_hat[live], dist[live])
            vis[live] = ~blocked
            if e.kind == "point":
                inten = e.power / (4 * np.pi)
                contrib += inten * cos_s * vis / np.maximum(d2, 1e-12) / nsamp
            elif e.kind == "spot":
                half = np.radians(e.spot_angle_deg)
                inten = e.power / (2 * np.pi * (1 - np.cos(half)))
                contrib += inten * cos_s * vis / np.maximum(d2, 1e-12) / nsamp
            else:
                if e.kind == "disk-area":
                    area = np.pi * (e.size * 0.5) ** 2
                else:
                    area = e.size * e.size
                zl = e.transform.apply_vector(np.array([0.0, 0.0, 1.0]))
                cos_l = np.abs(wi_hat @ zl)
                l_e = e.power / (np.pi * area)
                contrib += l_e * cos_s * cos_l * vis * area / np.maximum(d2, 1e-12) / nsamp
        radiance = radiance + (albedo / np.pi) * (contrib[:, None] * tint[None, :])
    return radiance


def _camera_rays(camera: CameraState, settings: RenderSettings, lane: np.ndarray,
                 px: np.ndarray, py: np.ndarray):
    seed = settings.seed
    w, h = settings.width, settings.height
    ju = rng.uniforms(seed, _STREAM_PIXEL_JITTER, lane, np.zeros_like(lane))
    jv = rng.uniforms(seed, _STREAM_PIXEL_JITTER, lane, np.ones_like(lane))
    u = (px + ju) / w
    v = (py + jv) / h
    f = camera.focal_length_mm
    sw = camera.sensor_width_mm
    sh = sw * h / w
    dx = (u - camera.principal_point[0]) * sw / f
    dy = (camera.principal_point[1] - v) * sh / f
    d_cam = np.stack([dx, dy, -np.ones_like(dx)], axis=-1)
    aperture = f / camera.f_number * 0.5 / 1000.0
    if aperture > 1e-6:
        lu = rng.uniforms(seed, _STREAM_LENS, lane, np.zeros_like(lane))
        lv = rng.uniforms(seed, _STREAM_LENS, lane, np.ones_like(lane))
        r = aperture * np.sqrt(lu)
        th = 2 * np.pi * lv
        lens = np.stack([r * np.cos(th), r * np.sin(th), np.zeros_like(r)], axis=-1)
        focus_pt = d_cam * camera.focus_distance
        d_cam = focus_pt - lens
        o_cam = lens
    else:
        o_cam = np.zeros_like(d_cam)
    d = d_cam @ camera.transform.rotation.T
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    o = o_cam @ camera.transform.rotation.T + camera.transform.translation
    return o, d


def render(scene: Scene, capsules, rig: LightRig | None, camera: CameraState,
           settings: RenderSettings, human_albedo=None,
           ambient_override=None, emitter_filter=None) -> np.ndarray:
    """Linear HDR radiance map (H, W, 3), bit-identical for a given seed."""
    rig = rig or LightRig()
    ambient = np.asarray(scene.ambient_env if ambient_override is None
                         else ambient_override, dtype=float)
    emitters = [e for e in scene.emitters if e.enabled] + rig.enabled_emitters()
    if emitter_filter is not None:
        emitters = [e for e in emitters if emitter_filter(e)]
    prims = scene_prims(scene, capsules, human_albedo, emitters)
    occl = prims + [_Prim("object",
                          _panel_as_object(p), np.zeros(3)) for p in
                    list(scene.occluders) + list(rig.panels)]
    w, h, spp = settings.width, settings.height, settings.samples_per_pixel
    acc = np.zeros((h * w, 3))
    px_grid, py_grid = np.meshgrid(np.arange(w), np.arange(h))
    px_flat = px_grid.ravel().astype(np.float64)
    py_flat = py_grid.ravel().astype(np.float64)
    pixel_index = (py_grid.ravel() * w + px_grid.ravel()).astype(np.uint64)
    for s in range(spp):
        lane = pixel_index * np.uint64(spp) + np.uint64(s)
        o, d = _camera_rays(camera, settings, lane, px_flat, py_flat)
        t, n, pid = _intersect_scene(prims, o, d)
        hit = np.isfinite(t)
        sample_rad = np.broadcast_to(ambient, (h * w, 3)).copy()
        if hit.any():
            x = o[hit] + t[hit, None] * d[hit]
            nh = n[hit]
            # flip normals toward the camera ray
            flip = np.einsum("ij,ij->i", nh, d[hit]) > 0
            nh[flip] = -nh[flip]
            ids = pid[hit]
            alb = np.zeros((hit.sum(), 3))
            emis = np.full((hit.sum(), 3), np.nan)
            for i, prim in enumerate(prims):
                m = ids == i
                if not m.any():
                    continue
                if prim.emission is not None:
                    emis[m] = prim.emission
                else:
                    alb[m] = prim.albedo
            shaded = _shade(prims, occl, emitters, x, nh, alb, ambient,
                            settings.seed, lane[hit], settings.max_shadow_rays_per_light)
            is_emit = ~np.isnan(emis[:, 0])
            shaded[is_emit] = emis[is_emit]
            sample_rad[hit] = shaded
        acc += sample_rad
    return (acc / spp).reshape(h, w, 3).astype(np.float64)


def _panel_as_object(panel: OccluderPanel) -> SceneObject:
    return SceneObject(id=f"__panel_{panel.id}", label="panel", shape="plane-quad",
                       transform=panel.transform,
                       dimensions={"width": panel.width, "height": panel.height},
                       albedo=np.zeros(3))


def render_decomposed(scene: Scene, capsules, rig: LightRig | None,
                      camera: CameraState, settings: RenderSettings,
                      human_albedo=None):
    """(environment-only, controllables-only) HDR pair; full ~ env + ctrl."""
    rig = rig or LightRig()
    env = render(scene, capsules, LightRig(emitters=[], panels=rig.panels),
                 camera, settings, human_albedo,
                 emitter_filter=lambda e: not e.controllable)
    ctrl = render(scene, capsules, rig, camera, settings, human_albedo,
                  ambient_override=np.zeros(3),
                  emitter_filter=lambda e: e.controllable)
    return env, ctrl


# ---------------------------------------------------------------- probing

class ProbeError(Exception):
    pass


def probe_measure(scene: Scene, rig: LightRig | None, position,
                  enabled_ids: set | frozenset = frozenset(),
                  include_ambient: bool = True, n_samples: int = 64,
                  view_dir=(1.0, 0.0, 0.0)) -> float:
    """Mean luminance of an 18%-gray probe sphere at `position`.

    Only emitters whose id is in `enabled_ids` contribute (plus the constant
    ambient term unless disabled).  The probe's visible hemisphere faces
    `view_dir`; the human is absent during probing.
    """
    rig = rig or LightRig()
    pos = np.asarray(position, dtype=float)
    if scene.objects and bool(scene.contains(pos[None, :])[0]):
        raise ProbeError(f"probe position {pos.tolist()} is inside scene geometry")
    all_emitters = {e.id: e for e in list(scene.emitters) + list(rig.emitters)}
    active = [all_emitters[i] for i in sorted(enabled_ids) if i in all_emitters]
    occl = scene_prims(scene, None, None, []) + \
        [_Prim("object", _panel_as_object(p), np.zeros(3))
         for p in list(scene.occluders) + list(rig.panels)]
    vd = np.asarray(view_dir, dtype=float)
    vd = vd / np.linalg.norm(vd)
    dirs = shapes.fibonacci_sphere(n_samples * 2)
    dirs = dirs[dirs @ vd > 0][:n_samples]
    if len(dirs) == 0:
        dirs = vd[None, :]
    x = pos[None, :] + PROBE_RADIUS * dirs
    n = dirs
    alb = np.full((len(x), 3), PROBE_ALBEDO)
    ambient = scene.ambient_env if include_ambient else np.zeros(3)
    lane = np.arange(len(x), dtype=np.uint64)
    rad = _shade([], occl, active, x, n, alb, np.asarray(ambient, dtype=float),
                 seed=0, lane=lane, n_shadow=8)
    return float(luma(rad).mean())


# ---------------------------------------------------------------- visibility

def visibility_fraction(scene: Scene, camera: CameraState, sample_points: np.ndarray,
                        exclude_prims=None, capsules=None, n_expected: int = 64,
                        aspect_hw: float = 1.0) -> float:
    """Fraction of node samples inside the frustum and unoccluded."""
    from .exposure import project
    pts = np.atleast_2d(sample_points)
    uv, depth, in_front = project(camera, pts, aspect_hw)
    in_frame = in_front & np.all((uv >= 0.0) & (uv <= 1.0), axis=-1)
    if not in_frame.any():
        return 0.0
    cam_pos = camera.position()
    prims = scene_prims(scene, capsules, None, [])
    if exclude_prims:
        prims = [p for p in prims if _prim_key(p) not in exclude_prims]
    vis = np.zeros(len(pts), dtype=bool)
    idx = np.nonzero(in_frame)[0]
    o = np.broadcast_to(cam_pos, (len(idx), 3)).astype(float)
    wi = pts[idx] - cam_pos
    dist = np.linalg.norm(wi, axis=-1)
    d = wi / np.maximum(dist[:, None], 1e-12)
    blocked = _occluded(prims, o, d, dist - 5e-3)
    vis[idx] = ~blocked
    return float(vis.mean())


def _prim_key(prim: _Prim) -> str:
    if prim.kind == "object":
        return prim.ref.id
    if prim.kind == "capsule":
        return f"capsule:{prim.ref.name}"
    return prim.kind


def object_surface_samples(obj: SceneObject, n: int = 64) -> np.ndarray:
    lane = np.arange(n, dtype=np.uint64)
    key = rng.string_key(obj.id)
    u = np.stack([rng.uniforms(key, _STREAM_SURFACE, lane, np.full(n, k, dtype=np.uint64))
                  for k in range(3)], axis=-1)
    # stratify the first coordinate for stable area coverage
    u[:, 0] = (np.arange(n) + u[:, 0]) / n
    return obj.sample_surface(n, u)
