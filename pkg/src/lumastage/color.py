"""Color utilities: Rec.709 luma, sRGB transfer, blackbody tint table.

Emitter color temperature maps to a linear-RGB tint through a table built
at import time (1500..12000 K in 100 K steps, linearly interpolated between
entries).  Tints are normalized to luma 1 so emitter `power` alone carries
the radiometric scale.
"""

from __future__ import annotations

import numpy as np

LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

KELVIN_MIN = 1500.0
KELVIN_MAX = 12000.0
_KELVIN_STEP = 100.0


def luma(rgb: np.ndarray) -> np.ndarray:
    """Rec.709 luma of linear RGB; works on (..., 3) arrays."""
    return np.asarray(rgb, dtype=float) @ LUMA_WEIGHTS


def srgb_encode(x: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    lo = 12.92 * x
    hi = 1.055 * np.power(x, 1.0 / 2.4, where=x > 0, out=np.zeros_like(x)) - 0.055
    return np.where(x <= 0.0031308, lo, hi)


def srgb_decode(y: np.ndarray) -> np.ndarray:
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    lo = y / 12.92
    hi = np.power((y + 0.055) / 1.055, 2.4)
    return np.where(y <= 0.04045, lo, hi)


def _blackbody_rgb(kelvin: float) -> np.ndarray:
    """Smooth RGB approximation of a blackbody at the given temperature.

    Piecewise power-law fit of the Planckian locus mapped into linear RGB;
    accurate enough for tinting portrait lights, not for colorimetry.
    """
    t = kelvin / 100.0
    if t <= 66.0:
        r = 255.0
        g = 99.4708025861 * np.log(t) - 161.1195681661 if t > 0 else 0.0
        b = 0.0 if t <= 19.0 else 138.5177312231 * np.log(t - 10.0) - 305.0447927307
    else:
        r = 329.698727446 * (t - 60.0) ** -0.1332047592
        g = 288.1221695283 * (t - 60.0) ** -0.0755148492
        b = 255.0
    srgb = np.clip(np.array([r, g, b]) / 255.0, 0.0, 1.0)
    return srgb_decode(srgb)


_TABLE_KELVINS = np.arange(KELVIN_MIN, KELVIN_MAX + _KELVIN_STEP, _KELVIN_STEP)
_TABLE_RGB = np.stack([_blackbody_rgb(k) for k in _TABLE_KELVINS])


def kelvin_to_tint(kelvin: float) -> np.ndarray:
    """Linear-RGB tint at the given color temperature, normalized to luma 1."""
    k = float(np.clip(kelvin, KELVIN_MIN, KELVIN_MAX))
    idx = (k - KELVIN_MIN) / _KELVIN_STEP
    lo = int(np.floor(idx))
    hi = min(lo + 1, len(_TABLE_KELVINS) - 1)
    frac = idx - lo
    rgb = (1.0 - frac) * _TABLE_RGB[lo] + frac * _TABLE_RGB[hi]
    return rgb / luma(rgb)
