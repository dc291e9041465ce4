"""Viewfinder image container and file formats (PFM, PNG, JSON sidecar).

PFM files are little-endian, rows written top-to-bottom (negative scale
marker per the de-facto convention encodes little-endian; we document the
row order in the sidecar).  LDR output is 8-bit sRGB PNG.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .exposure import CameraState, ExposureSolution


@dataclass
class ViewfinderImage:
    width: int
    height: int
    hdr: np.ndarray                  # (H, W, 3) linear radiance
    ldr: np.ndarray                  # (H, W, 3) display sRGB in [0, 1]
    camera: CameraState | None = None
    exposure: ExposureSolution | None = None
    seed: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hdr = np.asarray(self.hdr, dtype=np.float32)
        self.ldr = np.asarray(self.ldr, dtype=np.float32)
        if np.any(self.hdr < 0):
            raise ValueError("hdr radiance must be nonnegative")
        if np.any(self.ldr < 0) or np.any(self.ldr > 1):
            raise ValueError("ldr values must lie in [0, 1]")

    def ldr_bytes(self) -> bytes:
        arr = (np.clip(self.ldr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
        img = Image.fromarray(arr, mode="RGB")
        from io import BytesIO
        buf = BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()

    def content_hash(self) -> str:
        return hashlib.sha256(self.ldr_bytes()).hexdigest()

    def meta_dict(self) -> dict:
        meta = {"width": self.width, "height": self.height, "seed": self.seed,
                "pfm_row_order": "top-to-bottom"}
        if self.camera is not None:
            meta["camera"] = self.camera.to_dict()
        if self.exposure is not None:
            meta["exposure"] = self.exposure.to_dict()
        if self.extras:
            meta["extras"] = self.extras
        return meta


def write_pfm(path, data: np.ndarray) -> None:
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        header = b"Pf"
        out = data
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"PF"
        out = data
    else:
        raise ValueError(f"PFM expects HxW or HxWx3, got {data.shape}")
    h, w = out.shape[:2]
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(f"{w} {h}\n".encode())
        fh.write(b"-1.0\n")            # negative: little-endian
        fh.write(out.astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        channels = 3 if header == b"PF" else 1
        w, h = map(int, fh.readline().split())
        scale = float(fh.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(), dtype=dtype)
    if channels == 3:
        return data.reshape(h, w, 3).astype(np.float32)
    return data.reshape(h, w).astype(np.float32)


def write_png(path, ldr: np.ndarray) -> None:
    arr = (np.clip(np.asarray(ldr, dtype=float), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def save_viewfinder(image: ViewfinderImage, directory, stem: str) -> dict:
    """Write <stem>.png, <stem>.pfm and <stem>.meta.json; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    png = directory / f"{stem}.png"
    pfm = directory / f"{stem}.pfm"
    meta = directory / f"{stem}.meta.json"
    png.write_bytes(image.ldr_bytes())
    write_pfm(pfm, image.hdr)
    meta.write_text(json.dumps(image.meta_dict(), indent=2) + "\n", encoding="utf-8")
    return {"png": str(png), "pfm": str(pfm), "meta": str(meta)}
