"""Voxel occupancy over the scene and distance-to-occupied queries.

The grid is precomputed once per scene (cell centers tested against exact
primitive containment) and then treated as immutable, so pose metrics can
hammer it from multiple workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

CELL_CAP = int(2e8)


class ResourceError(Exception):
    """Raised when a requested grid would exceed the configured cell cap."""


@dataclass
class OccupancyGrid:
    origin: np.ndarray            # world position of the (0,0,0) cell's min corner
    resolution: float
    dims: tuple
    cells: np.ndarray             # bool array indexed [ix, iy, iz]
    _edt: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        self.cells = np.asarray(self.cells, dtype=bool)

    @property
    def occupied_count(self) -> int:
        return int(self.cells.sum())

    def cell_index(self, points: np.ndarray) -> np.ndarray:
        return np.floor((np.atleast_2d(points) - self.origin) / self.resolution).astype(np.int64)

    def cell_center(self, idx: np.ndarray) -> np.ndarray:
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    def query(self, points: np.ndarray) -> np.ndarray:
        """Occupancy (0/1) per point; points outside the grid report 0."""
        pts = np.atleast_2d(points)
        idx = self.cell_index(pts)
        dims = np.asarray(self.dims)
        valid = np.all((idx >= 0) & (idx < dims), axis=-1)
        out = np.zeros(len(pts), dtype=np.uint8)
        if valid.any():
            iv = idx[valid]
            out[valid] = self.cells[iv[:, 0], iv[:, 1], iv[:, 2]]
        return out

    def query_one(self, point) -> int:
        return int(self.query(np.asarray(point, dtype=float))[0])

    def _distance_field(self) -> np.ndarray:
        # center-to-center EDT in meters; lazily built on first clearance query
        if self._edt is None:
            if self.cells.any():
                self._edt = ndimage.distance_transform_edt(
                    ~self.cells, sampling=self.resolution).astype(np.float32)
            else:
                self._edt = np.full(self.dims, np.inf, dtype=np.float32)
        return self._edt

    def clearance(self, point) -> float:
        """Distance from the point to the nearest occupied cell's surface.

        Exact with respect to the voxelization: equals the minimum over
        occupied cells of the point-to-cube distance (0 inside a cube).
        """
        p = np.asarray(point, dtype=float).reshape(3)
        if not self.cells.any():
            return float("inf")
        if self.query_one(p):
            return 0.0
        res = self.resolution
        dims = np.asarray(self.dims)
        idx = np.clip(self.cell_index(p)[0], 0, dims - 1)
        edt = self._distance_field()
        # upper bound: center-to-center distance plus the offsets of the
        # query point and cube surface from their cell centers
        bound = float(edt[idx[0], idx[1], idx[2]])
        bound += float(np.linalg.norm(p - self.cell_center(idx))) + np.sqrt(3.0) * res
        lo = np.maximum(self.cell_index(p - bound)[0], 0)
        hi = np.minimum(self.cell_index(p + bound)[0] + 1, dims)
        sub = self.cells[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]
        occ = np.argwhere(sub) + lo
        if len(occ) == 0:
            return bound
        centers = self.cell_center(occ)
        d = np.maximum(np.abs(p - centers) - 0.5 * res, 0.0)
        return float(np.sqrt((d * d).sum(axis=-1)).min())


def build_occupancy(scene, resolution: float | None = None) -> OccupancyGrid:
    """Voxelize the scene: a cell is occupied iff its center is inside an object.

    The grid covers the union AABB of all objects padded by one cell.
    """
    if resolution is None:
        resolution = scene.voxel_resolution
    if not resolution > 0:
        raise ValueError(f"resolution must be > 0, got {resolution}")
    if not scene.objects:
        return OccupancyGrid(origin=np.zeros(3), resolution=resolution, dims=(1, 1, 1),
                             cells=np.zeros((1, 1, 1), dtype=bool))
    lo, hi = scene.aabb()
    origin = lo - resolution
    span = (hi + resolution) - origin
    dims = tuple(int(np.ceil(s / resolution - 1e-9)) for s in span)
    n_cells = int(np.prod([max(d, 1) for d in dims]))
    if n_cells > CELL_CAP:
        raise ResourceError(
            f"grid of {dims} = {n_cells} cells exceeds cap {CELL_CAP}; "
            f"coarsen resolution (requested {resolution} m)")
    dims = tuple(max(d, 1) for d in dims)
    cells = np.zeros(dims, dtype=bool)
    # rasterize object by object over its own AABB slab to bound work
    for obj in scene.objects:
        olo, ohi = obj.aabb()
        ilo = np.clip(np.floor((olo - origin) / resolution).astype(int) - 1, 0, np.array(dims) - 1)
        ihi = np.clip(np.ceil((ohi - origin) / resolution).astype(int) + 1, 1, dims)
        axes = [np.arange(ilo[k], ihi[k]) for k in range(3)]
        if any(len(a) == 0 for a in axes):
            continue
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        idx = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=-1)
        centers = origin + (idx + 0.5) * resolution
        inside = obj.contains(centers)
        if inside.any():
            ii = idx[inside]
            cells[ii[:, 0], ii[:, 1], ii[:, 2]] = True
    return OccupancyGrid(origin=origin, resolution=resolution, dims=dims, cells=cells)


def query_occupancy(grid: OccupancyGrid, point) -> int:
    return grid.query_one(point)


def signed_clearance(grid: OccupancyGrid, point) -> float:
    return grid.clearance(point)
