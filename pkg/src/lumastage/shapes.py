"""Vectorized geometry kernels for the primitive shapes.

All intersect/contains kernels operate in the shape's local frame; callers
transform rays/points first.  Ray kernels return hit distance t (+inf on
miss) and the local-frame surface normal.  `eps` guards against
self-intersection of secondary rays.
"""

from __future__ import annotations

import numpy as np

RAY_EPS = 1e-6
_INF = np.inf


def _miss(n: int):
    return np.full(n, _INF), np.zeros((n, 3))


# ---------------------------------------------------------------- box

def box_contains(points: np.ndarray, half: np.ndarray) -> np.ndarray:
    return np.all(np.abs(points) <= half, axis=-1)


def box_intersect(o: np.ndarray, d: np.ndarray, half: np.ndarray):
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (-half - o) * inv
        t2 = (half - o) * inv
    tlo = np.minimum(t1, t2)
    thi = np.maximum(t1, t2)
    tmin = np.max(tlo, axis=-1)
    tmax = np.min(thi, axis=-1)
    hit = (tmax >= np.maximum(tmin, RAY_EPS)) & np.isfinite(tmax)
    t = np.where(tmin > RAY_EPS, tmin, tmax)
    t = np.where(hit, t, _INF)
    # normal: axis where the entry slab was attained
    axis = np.argmax(tlo, axis=-1)
    normal = np.zeros_like(o)
    rows = np.arange(len(o))
    p = o + np.where(np.isfinite(t), t, 0.0)[:, None] * d
    normal[rows, axis] = np.sign(p[rows, axis])
    bad = normal[rows, axis] == 0
    normal[rows[bad], axis[bad]] = 1.0
    return t, normal


def box_sample_surface(half: np.ndarray, n: int, u: np.ndarray) -> np.ndarray:
    """n surface points; u is (n, 3) uniforms (face pick + 2D position)."""
    hx, hy, hz = half
    areas = np.array([hy * hz, hy * hz, hx * hz, hx * hz, hx * hy, hx * hy])
    cdf = np.cumsum(areas / areas.sum())
    face = np.searchsorted(cdf, u[:, 0], side="right").clip(0, 5)
    a = u[:, 1] * 2.0 - 1.0
    b = u[:, 2] * 2.0 - 1.0
    pts = np.empty((n, 3))
    for f in range(6):
        m = face == f
        if not m.any():
            continue
        ax = f // 2
        sign = 1.0 if f % 2 == 0 else -1.0
        others = [i for i in range(3) if i != ax]
        pts[m, ax] = sign * half[ax]
        pts[m, others[0]] = a[m] * half[others[0]]
        pts[m, others[1]] = b[m] * half[others[1]]
    return pts


# ---------------------------------------------------------------- sphere

def sphere_contains(points: np.ndarray, radius: float) -> np.ndarray:
    return np.einsum("...i,...i->...", points, points) <= radius * radius


def sphere_intersect(o: np.ndarray, d: np.ndarray, radius: float):
    a = np.einsum("ij,ij->i", d, d)
    b = 2.0 * np.einsum("ij,ij->i", o, d)
    c = np.einsum("ij,ij->i", o, o) - radius * radius
    disc = b * b - 4 * a * c
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t0 = (-b - sq) / (2 * a)
    t1 = (-b + sq) / (2 * a)
    t = np.where(t0 > RAY_EPS, t0, t1)
    t = np.where(ok & (t > RAY_EPS), t, _INF)
    p = o + np.where(np.isfinite(t), t, 0.0)[:, None] * d
    with np.errstate(invalid="ignore"):
        normal = p / np.maximum(np.linalg.norm(p, axis=-1, keepdims=True), 1e-12)
    return t, normal


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, nearly uniform unit-sphere directions."""
    i = np.arange(n) + 0.5
    phi = np.arccos(1 - 2 * i / n)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    theta = golden * i
    return np.stack([np.sin(phi) * np.cos(theta),
                     np.sin(phi) * np.sin(theta),
                     np.cos(phi)], axis=-1)


# ---------------------------------------------------------------- cylinder (axis Z, centered)

def cylinder_contains(points: np.ndarray, radius: float, half_h: float) -> np.ndarray:
    r2 = points[..., 0] ** 2 + points[..., 1] ** 2
    return (r2 <= radius * radius) & (np.abs(points[..., 2]) <= half_h)


def cylinder_intersect(o: np.ndarray, d: np.ndarray, radius: float, half_h: float):
    n = len(o)
    best_t = np.full(n, _INF)
    best_n = np.zeros((n, 3))
    a = d[:, 0] ** 2 + d[:, 1] ** 2
    b = 2 * (o[:, 0] * d[:, 0] + o[:, 1] * d[:, 1])
    c = o[:, 0] ** 2 + o[:, 1] ** 2 - radius * radius
    disc = b * b - 4 * a * c
    ok = (disc >= 0) & (a > 1e-14)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        for sgn in (-1.0, 1.0):
            t = (-b + sgn * sq) / (2 * a)
            z = o[:, 2] + t * d[:, 2]
            hit = ok & (t > RAY_EPS) & (np.abs(z) <= half_h) & (t < best_t)
            best_t = np.where(hit, t, best_t)
            p = o + t[:, None] * d
            nm = np.stack([p[:, 0], p[:, 1], np.zeros(n)], axis=-1)
            nm /= np.maximum(np.linalg.norm(nm, axis=-1, keepdims=True), 1e-12)
            best_n = np.where(hit[:, None], nm, best_n)
        for zc, nz in ((half_h, 1.0), (-half_h, -1.0)):
            t = (zc - o[:, 2]) / d[:, 2]
            p = o + t[:, None] * d
            inside = p[:, 0] ** 2 + p[:, 1] ** 2 <= radius * radius
            hit = np.isfinite(t) & (t > RAY_EPS) & inside & (t < best_t)
            best_t = np.where(hit, t, best_t)
            best_n = np.where(hit[:, None], np.array([0.0, 0.0, nz]), best_n)
    return best_t, best_n


def cylinder_sample_surface(radius: float, half_h: float, n: int, u: np.ndarray) -> np.ndarray:
    side_area = 2 * np.pi * radius * 2 * half_h
    cap_area = np.pi * radius * radius
    total = side_area + 2 * cap_area
    pts = np.empty((n, 3))
    pick = u[:, 0] * total
    theta = u[:, 1] * 2 * np.pi
    on_side = pick < side_area
    pts[on_side] = np.stack([radius * np.cos(theta[on_side]),
                             radius * np.sin(theta[on_side]),
                             (u[on_side, 2] * 2 - 1) * half_h], axis=-1)
    caps = ~on_side
    r = radius * np.sqrt(u[caps, 2])
    top = pick[caps] < side_area + cap_area
    pts[caps] = np.stack([r * np.cos(theta[caps]),
                          r * np.sin(theta[caps]),
                          np.where(top, half_h, -half_h)], axis=-1)
    return pts


# ---------------------------------------------------------------- quad (rect in local XY, normal Z)

def quad_contains(points: np.ndarray, half_w: float, half_h: float, half_t: float) -> np.ndarray:
    return ((np.abs(points[..., 0]) <= half_w)
            & (np.abs(points[..., 1]) <= half_h)
            & (np.abs(points[..., 2]) <= half_t))


def quad_intersect(o: np.ndarray, d: np.ndarray, half_w: float, half_h: float):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -o[:, 2] / d[:, 2]
    p = o + t[:, None] * d
    hit = (np.isfinite(t) & (t > RAY_EPS)
           & (np.abs(p[:, 0]) <= half_w) & (np.abs(p[:, 1]) <= half_h))
    t = np.where(hit, t, _INF)
    nz = np.where(o[:, 2] >= 0, 1.0, -1.0)
    normal = np.zeros_like(o)
    normal[:, 2] = nz
    return t, normal


def quad_sample_surface(half_w: float, half_h: float, n: int, u: np.ndarray) -> np.ndarray:
    return np.stack([(u[:, 0] * 2 - 1) * half_w,
                     (u[:, 1] * 2 - 1) * half_h,
                     np.zeros(n)], axis=-1)


# ---------------------------------------------------------------- capsule (world-frame endpoints)

def capsule_contains(points: np.ndarray, p0: np.ndarray, p1: np.ndarray, radius: float) -> np.ndarray:
    axis = p1 - p0
    denom = float(axis @ axis)
    rel = points - p0
    if denom < 1e-12:
        return np.einsum("...i,...i->...", rel, rel) <= radius * radius
    t = np.clip(rel @ axis / denom, 0.0, 1.0)
    closest = p0 + t[..., None] * axis
    diff = points - closest
    return np.einsum("...i,...i->...", diff, diff) <= radius * radius


def capsule_intersect(o: np.ndarray, d: np.ndarray, p0: np.ndarray, p1: np.ndarray, radius: float):
    n = len(o)
    axis = p1 - p0
    nn = float(axis @ axis)
    if nn < 1e-12:
        return sphere_intersect(o - p0, d, radius)
    best_t = np.full(n, _INF)
    # infinite-cylinder part clipped to the segment
    m = o - p0
    dn = (d @ axis) / nn
    mn = (m @ axis) / nn
    dd = d - dn[:, None] * axis
    md = m - mn[:, None] * axis
    a = np.einsum("ij,ij->i", dd, dd)
    b = 2 * np.einsum("ij,ij->i", md, dd)
    c = np.einsum("ij,ij->i", md, md) - radius * radius
    disc = b * b - 4 * a * c
    ok = (disc >= 0) & (a > 1e-14)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (-b - sq) / (2 * a)
        t2 = (-b + sq) / (2 * a)
    t = np.where(t > RAY_EPS, t, t2)
    s = mn + t * dn
    hit = ok & (t > RAY_EPS) & (s >= 0.0) & (s <= 1.0)
    best_t = np.where(hit, t, best_t)
    # end caps
    for cap in (p0, p1):
        tc, _ = sphere_intersect(o - cap, d, radius)
        best_t = np.minimum(best_t, tc)
    p = o + np.where(np.isfinite(best_t), best_t, 0.0)[:, None] * d
    s = np.clip(((p - p0) @ axis) / nn, 0.0, 1.0)
    closest = p0 + s[:, None] * axis
    normal = p - closest
    normal /= np.maximum(np.linalg.norm(normal, axis=-1, keepdims=True), 1e-12)
    return best_t, normal


def capsule_sample_surface(p0: np.ndarray, p1: np.ndarray, radius: float, n: int) -> np.ndarray:
    """Deterministic near-uniform samples on a capsule via a fibonacci sphere
    split at the equator and stretched along the axis."""
    dirs = fibonacci_sphere(n)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    if length < 1e-12:
        return p0 + radius * dirs
    az = axis / length
    # build a frame around the axis
    ref = np.array([1.0, 0.0, 0.0]) if abs(az[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(az, ref)
    u /= np.linalg.norm(u)
    v = np.cross(az, u)
    local = dirs @ np.stack([u, v, az])
    along = local @ az
    base = np.where(along[:, None] >= 0, p1, p0)
    return base + radius * local
