"""Pose actionability predicates: penetration counting and static balance.

Contact handling: skeletal samples that sit just above an upward-facing
occupied surface are support contacts.  Penetrating samples shallower than
the contact threshold above such a surface are excluded from the
penetration count, otherwise every honest foot contact would read as a
collision.
"""

from __future__ import annotations

import numpy as np

from .geometry import vec3
from .occupancy import OccupancyGrid
from .skeleton import Skeleton, bone_sample_slices, center_of_mass, skeletal_samples

CONTACT_EPS = 0.02       # meters; support-contact threshold
HULL_MARGIN = 0.02       # meters; support-polygon inflation


def _contact_masks(grid: OccupancyGrid, samples: np.ndarray, eps_c: float):
    """(occupied, contact) masks per sample.

    contact: free space just above and occupied space just below within
    eps_c plus one voxel (the voxel surface can sit up to half a cell away
    from the analytic surface).
    """
    res = grid.resolution
    reach = eps_c + res
    occupied = grid.query(samples).astype(bool)
    up = samples + np.array([0.0, 0.0, reach])
    free_above = ~grid.query(up).astype(bool)
    below_any = np.zeros(len(samples), dtype=bool)
    for frac in (0.25, 0.6, 1.0):
        probe = samples - np.array([0.0, 0.0, reach * frac])
        below_any |= grid.query(probe).astype(bool)
    contact = free_above & below_any
    return occupied, contact


def collision_free(grid: OccupancyGrid, capsules, eps_c: float = CONTACT_EPS,
                   per_bone: int = 12):
    """(penetration-free?, penetrating-sample count), contacts excluded."""
    samples = skeletal_samples(capsules, per_bone)
    if len(samples) == 0:
        return True, 0
    occupied, contact = _contact_masks(grid, samples, eps_c)
    penetrating = occupied & ~contact
    count = int(penetrating.sum())
    return count == 0, count


def support_contact_points(grid: OccupancyGrid, capsules, eps_c: float = CONTACT_EPS,
                           per_bone: int = 12) -> np.ndarray:
    """World-frame support contacts grouped over load-bearing bones."""
    samples = skeletal_samples(capsules, per_bone)
    if len(samples) == 0:
        return np.zeros((0, 3))
    _, contact = _contact_masks(grid, samples, eps_c)
    slices = bone_sample_slices(len(capsules), per_bone)
    pts = [samples[sl][contact[sl]] for sl in slices if contact[sl].any()]
    return np.concatenate(pts) if pts else np.zeros((0, 3))


def _gravity_basis(gravity: np.ndarray):
    g = vec3(gravity)
    g = g / np.linalg.norm(g)
    ref = np.array([1.0, 0.0, 0.0]) if abs(g[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(g, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(g, e1)
    return e1, e2


def project_perp_gravity(points: np.ndarray, gravity) -> np.ndarray:
    e1, e2 = _gravity_basis(gravity)
    pts = np.atleast_2d(points)
    return np.stack([pts @ e1, pts @ e2], axis=-1)


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, CCW, no repeated last point."""
    pts = np.unique(np.round(np.atleast_2d(points), 12), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross2(out[-1] - out[-2], p - out[-2]) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def point_to_segment_2d(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def point_in_hull(p: np.ndarray, hull: np.ndarray, margin: float = 0.0) -> bool:
    """Point within the hull inflated by `margin` (Euclidean)."""
    if len(hull) == 0:
        return False
    if len(hull) == 1:
        return float(np.linalg.norm(p - hull[0])) <= margin
    if len(hull) == 2:
        return point_to_segment_2d(p, hull[0], hull[1]) <= margin
    inside = True
    for i in range(len(hull)):
        a, b = hull[i], hull[(i + 1) % len(hull)]
        if _cross2(b - a, p - a) < 0:
            inside = False
            break
    if inside:
        return True
    d = min(point_to_segment_2d(p, hull[i], hull[(i + 1) % len(hull)])
            for i in range(len(hull)))
    return d <= margin


def static_balance(grid: OccupancyGrid, skel: Skeleton, capsules,
                   gravity=(0.0, 0.0, -1.0), eps_c: float = CONTACT_EPS,
                   margin: float = HULL_MARGIN) -> int:
    """1 if the center of mass projects inside the inflated support polygon.

    Requires at least three non-collinear contacts, or two contacts spanning
    at least shoulder width with the CoM near the segment between them.
    """
    contacts = support_contact_points(grid, capsules, eps_c)
    if len(contacts) == 0:
        return 0
    com2 = project_perp_gravity(center_of_mass(skel, capsules), gravity)[0]
    pts2 = project_perp_gravity(contacts, gravity)
    hull = convex_hull_2d(pts2)
    if polygon_area(hull) > 1e-8:
        return int(point_in_hull(com2, hull, margin))
    # degenerate support: collinear or fewer points
    if len(pts2) < 2:
        return 0
    span = 0.0
    pair = (pts2[0], pts2[0])
    for i in range(len(pts2)):
        for j in range(i + 1, len(pts2)):
            d = float(np.linalg.norm(pts2[i] - pts2[j]))
            if d > span:
                span, pair = d, (pts2[i], pts2[j])
    if span < skel.shoulder_width():
        return 0
    return int(point_to_segment_2d(com2, pair[0], pair[1]) <= margin)
