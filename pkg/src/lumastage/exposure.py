"""Thin-lens camera state, metering, exposure arithmetic and tone response.

Exposure model (ISO fixed at 100):
  EV100 = log2(N_f^2 / tau)
  metering: EV100 = log2(L_meter * 100 / K_METER), K_METER = 12.5
  pre-response signal: x(u) = kappa * 2^(-(EV100 - delta)) * L(u)
with exposure compensation `delta` in stops, positive brightening (delta+1
doubles x).  kappa = 0.18 * 100 / K_METER = 1.44 anchors the metered
luminance to mid-gray.  The saturating response phi maps 0.18 to 0.18
exactly and tends to 1; display transfer is sRGB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .color import luma, srgb_encode
from .geometry import RigidTransform

K_METER = 12.5
KAPPA = 0.18 * 100.0 / K_METER            # 1.44
MID_GRAY = 0.18
PHI_C = math.log(1.0 / (1.0 - MID_GRAY)) / MID_GRAY
SHUTTER_MIN = 1.0 / 8000.0
SHUTTER_MAX = 30.0
FOCAL_LENGTHS_MM = (24.0, 35.0, 50.0, 85.0, 135.0)
SENSOR_WIDTH_MM = 36.0
LATITUDE_STOPS = 3.0                      # reliable +/- exposure latitude
UNMETERABLE = float("-inf")


@dataclass
class CameraState:
    transform: RigidTransform = field(default_factory=RigidTransform.identity)
    focal_length_mm: float = 50.0
    f_number: float = 4.0
    exposure_comp: float = 0.0
    focus_distance: float = 2.0
    principal_point: tuple = (0.5, 0.5)
    sensor_width_mm: float = SENSOR_WIDTH_MM

    def validate(self):
        if self.focal_length_mm not in FOCAL_LENGTHS_MM:
            raise ValueError(f"focal length {self.focal_length_mm} not in {FOCAL_LENGTHS_MM}")
        if not (1.4 <= self.f_number <= 16.0):
            raise ValueError(f"f-number {self.f_number} outside [1.4, 16]")
        if not (-3.0 <= self.exposure_comp <= 3.0):
            raise ValueError(f"exposure compensation {self.exposure_comp} outside [-3, 3]")
        if not self.focus_distance > self.focal_length_mm / 1000.0:
            raise ValueError("focus distance must exceed focal length")

    def position(self) -> np.ndarray:
        return self.transform.translation.copy()

    def view_axis(self) -> np.ndarray:
        return self.transform.apply_vector(np.array([0.0, 0.0, -1.0]))

    def to_dict(self) -> dict:
        rx, ry, rz = self.transform.to_euler_deg()
        return {"translation": [float(v) for v in self.transform.translation],
                "rotation_deg": [rx, ry, rz],
                "focal_length_mm": self.focal_length_mm,
                "f_number": self.f_number,
                "exposure_comp": self.exposure_comp,
                "focus_distance": self.focus_distance,
                "principal_point": list(self.principal_point)}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraState":
        rot = d.get("rotation_deg", [0.0, 0.0, 0.0])
        return cls(transform=RigidTransform.from_euler_deg(
                       rot[0], rot[1], rot[2], d.get("translation", [0, 0, 0])),
                   focal_length_mm=float(d.get("focal_length_mm", 50.0)),
                   f_number=float(d.get("f_number", 4.0)),
                   exposure_comp=float(d.get("exposure_comp", 0.0)),
                   focus_distance=float(d.get("focus_distance", 2.0)),
                   principal_point=tuple(d.get("principal_point", (0.5, 0.5))))


@dataclass
class ExposureSolution:
    ev100: float
    shutter_s: float
    l_mid: float
    kappa: float = KAPPA
    clamped: bool = False
    meterable: bool = True

    def to_dict(self) -> dict:
        return {"ev100": self.ev100, "shutter_s": self.shutter_s, "l_mid": self.l_mid,
                "kappa": self.kappa, "clamped": self.clamped, "meterable": self.meterable}


def ev100(n_f: float, tau: float) -> float:
    if not (n_f > 0 and tau > 0):
        raise ValueError("f-number and shutter time must be positive")
    return math.log2(n_f * n_f / tau)


def meter_scene(hdr: np.ndarray, mode: str = "center-weighted",
                region: tuple | None = None, weights: np.ndarray | None = None):
    """(L_meter, EV100) from a linear radiance map.

    `region` for spot mode is (u0, v0, u1, v1) in normalized image coords.
    A custom weight map overrides the built-in center weighting.
    """
    hdr = np.asarray(hdr, dtype=float)
    if hdr.size == 0:
        raise ValueError("cannot meter an empty image")
    y = luma(hdr) if hdr.ndim == 3 else hdr
    h, w = y.shape
    if mode == "spot":
        if region is None:
            raise ValueError("spot metering requires a region")
        u0, v0, u1, v1 = region
        j0, j1 = sorted((int(u0 * w), int(math.ceil(u1 * w))))
        i0, i1 = sorted((int(v0 * h), int(math.ceil(v1 * h))))
        patch = y[max(i0, 0):max(i1, i0 + 1), max(j0, 0):max(j1, j0 + 1)]
        if patch.size == 0:
            patch = y
        l_meter = float(patch.mean())
    elif weights is not None:
        l_meter = float((y * weights).sum() / weights.sum())
    else:
        jj, ii = np.meshgrid((np.arange(w) + 0.5) / w, (np.arange(h) + 0.5) / h)
        wgt = np.exp(-(((jj - 0.5) ** 2 + (ii - 0.5) ** 2) / (2 * 0.25 ** 2)))
        l_meter = float((y * wgt).sum() / wgt.sum())
    if l_meter <= 0.0:
        return 0.0, UNMETERABLE
    return l_meter, math.log2(l_meter * 100.0 / K_METER)


def solve_aperture_priority(ev: float, n_f: float) -> ExposureSolution:
    """Shutter time from the metered EV at the chosen aperture."""
    if not math.isfinite(ev):
        return ExposureSolution(ev100=UNMETERABLE, shutter_s=SHUTTER_MAX, l_mid=0.0,
                                clamped=True, meterable=False)
    tau = n_f * n_f / (2.0 ** ev)
    clamped = not (SHUTTER_MIN <= tau <= SHUTTER_MAX)
    tau = min(max(tau, SHUTTER_MIN), SHUTTER_MAX)
    return ExposureSolution(ev100=ev100(n_f, tau), shutter_s=tau,
                            l_mid=(2.0 ** ev) * K_METER / 100.0, clamped=clamped)


def meter_and_solve(hdr: np.ndarray, n_f: float, mode: str = "center-weighted",
                    region: tuple | None = None) -> ExposureSolution:
    l_meter, ev = meter_scene(hdr, mode=mode, region=region)
    sol = solve_aperture_priority(ev, n_f)
    sol.l_mid = l_meter
    return sol


def saturating_response(x: np.ndarray) -> np.ndarray:
    """Monotone shoulder, exact at mid-gray: phi(0.18) = 0.18, phi(inf) = 1."""
    return 1.0 - np.exp(-PHI_C * np.asarray(x, dtype=float))


def pre_response_signal(hdr: np.ndarray, exposure: ExposureSolution,
                        delta: float = 0.0) -> np.ndarray:
    if not exposure.meterable:
        return np.zeros_like(np.asarray(hdr, dtype=float))
    # unclamped metering makes kappa * 2^-EV100 == MID_GRAY / l_mid, so the
    # metered luminance lands on mid-gray at delta = 0; a clamped shutter
    # shifts the whole image instead of silently re-anchoring
    gain = exposure.kappa * 2.0 ** (-(exposure.ev100 - delta))
    return gain * np.asarray(hdr, dtype=float)


def apply_shutter(hdr: np.ndarray, exposure: ExposureSolution,
                  delta: float = 0.0) -> np.ndarray:
    """LDR sRGB image in [0,1] from linear radiance under the planned exposure."""
    x = pre_response_signal(hdr, exposure, delta)
    return np.clip(srgb_encode(saturating_response(x)), 0.0, 1.0)


def exposure_validity(hdr: np.ndarray, exposure: ExposureSolution,
                      delta: float = 0.0, latitude: float = LATITUDE_STOPS):
    """(valid-pixel fraction, smoothed logit) of scene-to-mid-gray ratios."""
    hdr = np.asarray(hdr, dtype=float)
    if hdr.size == 0:
        raise ValueError("cannot score an empty image")
    y = luma(hdr) if hdr.ndim == 3 else hdr
    l_mid = exposure.l_mid * 2.0 ** (-delta)
    if l_mid <= 0:
        p_valid = 0.0
    else:
        rho = y / l_mid
        lo, hi = 2.0 ** (-latitude), 2.0 ** latitude
        p_valid = float(((rho >= lo) & (rho <= hi)).mean())
    return p_valid, smoothed_logit(p_valid)


def smoothed_logit(p: float, eps: float = 1e-6) -> float:
    # difference of logs keeps V(p) + V(1-p) == 0 bit-exactly
    return math.log(p + eps) - math.log(1.0 - p + eps)


# ---------------------------------------------------------------- projection

def project(camera: CameraState, points: np.ndarray, aspect_hw: float = 1.0):
    """Normalized image coords (u right, v down), depth along the view axis.

    Returns (uv (N,2), depth (N,), in_front (N,)).  aspect_hw = height/width
    of the target image; the sensor is 36 mm wide with square pixels.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    inv = camera.transform.inverse()
    pc = inv.apply(pts)
    z = pc[:, 2]
    in_front = z < -1e-9
    depth = -z
    f = camera.focal_length_mm
    sw = camera.sensor_width_mm
    sh = sw * aspect_hw
    with np.errstate(divide="ignore", invalid="ignore"):
        u = camera.principal_point[0] + (f * pc[:, 0] / depth) / sw
        v = camera.principal_point[1] - (f * pc[:, 1] / depth) / sh
    return np.stack([u, v], axis=-1), depth, in_front


def back_project(camera: CameraState, uv, aspect_hw: float = 1.0):
    """Ray (origin, unit direction) through the normalized image point."""
    u, v = float(uv[0]), float(uv[1])
    f = camera.focal_length_mm
    sw = camera.sensor_width_mm
    sh = sw * aspect_hw
    d_cam = np.array([(u - camera.principal_point[0]) * sw / f,
                      (camera.principal_point[1] - v) * sh / f,
                      -1.0])
    d = camera.transform.apply_vector(d_cam)
    return camera.position(), d / np.linalg.norm(d)


def thirds_points() -> np.ndarray:
    return np.array([[1 / 3, 1 / 3], [2 / 3, 1 / 3], [1 / 3, 2 / 3], [2 / 3, 2 / 3]])


def thirds_distance(uv) -> float:
    uv = np.asarray(uv, dtype=float)
    return float(np.min(np.linalg.norm(thirds_points() - uv, axis=1)))
