"""Synthetic point-cloud segmentation: car-sized clusters and person peaks.

Car-sized clustering is single-linkage grouping run twice, at 0.5 m and at
1.0 m spacing; only groups that come out identical at both thresholds (no
merge between them) are considered stable.  Stable groups must have at
least seven points, at least one point over 1.0 m high, and a maximum
horizontal extent under 15 m.

Person detection sums a radially swept difference-of-curvature kernel over
a 25 cm grid.  The kernel has a negative mean, so a uniform field or a
long wall scores negative while an isolated person-sized blob of returns
produces a sharp positive peak; strict 8-neighborhood non-max suppression
plus an amplitude threshold picks the peaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SIGMA = 0.45          # kernel width (m)
CELL_SIZE = 0.25      # grid cell size (m)
GROUND_CLEARANCE = 0.3
MIN_CAR_POINTS = 7
MAX_CAR_EXTENT = 15.0
MIN_TALL_HEIGHT = 1.0
LINKAGE_TIGHT = 0.5
LINKAGE_LOOSE = 1.0


def person_kernel(r):
    """Radial filter response at distance r from the kernel center.

    Positive at the center, dipping negative before decaying to zero; its
    integral over the plane is negative by construction so extended
    structures score below zero.
    """
    r = np.asarray(r, dtype=float)
    s2 = SIGMA * SIGMA
    gauss = np.exp(-r * r / (2.0 * s2))
    main = (1.0 - r * r / (2.0 * s2)) * gauss / (math.pi * s2)
    extra = 0.15 * (1.0 - r ** 4 / (2.0 * s2 * s2)) * gauss / (math.pi * s2)
    return main + extra


KERNEL_PEAK = float(person_kernel(0.0))  # ~1.807
DEFAULT_PEAK_THRESHOLD = 0.5 * KERNEL_PEAK


@dataclass
class PointCloud2D:
    """Leveled lidar returns: east, north, height columns."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        self.points = pts

    @property
    def above_ground(self) -> np.ndarray:
        return self.points[:, 2] >= GROUND_CLEARANCE

    @classmethod
    def load(cls, path) -> "PointCloud2D":
        """Read `east north height` rows; '#' starts a comment."""
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                vals = line.split()
                if len(vals) != 3:
                    raise ValueError(f"expected 3 columns, got {line!r}")
                rows.append([float(v) for v in vals])
        return cls(np.array(rows).reshape(-1, 3))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# east north height\n")
            for p in self.points:
                fh.write(f"{p[0]:.6g} {p[1]:.6g} {p[2]:.6g}\n")


@dataclass
class Cluster:
    centroid: np.ndarray
    extent: float
    size_class: str            # "car-sized" | "person-sized"
    point_count: int


@dataclass
class LoGGrid:
    origin: np.ndarray         # world position of cell (0, 0) center
    responses: np.ndarray      # [nx, ny] filter sums
    cell_size: float = CELL_SIZE

    def cell_center(self, ix: int, iy: int) -> np.ndarray:
        return self.origin + self.cell_size * np.array([ix, iy])


def _single_linkage(xy: np.ndarray, threshold: float) -> list[np.ndarray]:
    """Connected components of the <=threshold spacing graph (index lists)."""
    n = xy.shape[0]
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    t2 = threshold * threshold
    for i in range(n):
        d2 = np.sum((xy[i + 1:] - xy[i]) ** 2, axis=1)
        for k in np.nonzero(d2 <= t2)[0]:
            ra, rb = find(i), find(i + 1 + int(k))
            if ra != rb:
                parent[ra] = rb
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def _extent(xy: np.ndarray) -> float:
    if xy.shape[0] == 1:
        return 0.0
    d = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((d ** 2).sum(axis=2).max()))


def cluster_cars(cloud: PointCloud2D) -> list[Cluster]:
    """Stable car-sized clusters from an above-ground point cloud."""
    mask = cloud.above_ground
    pts = cloud.points[mask]
    if pts.shape[0] == 0:
        return []
    xy = pts[:, :2]
    tight = _single_linkage(xy, LINKAGE_TIGHT)
    loose = _single_linkage(xy, LINKAGE_LOOSE)
    loose_sets = [frozenset(g.tolist()) for g in loose]
    clusters = []
    for g in tight:
        members = frozenset(g.tolist())
        # Stability: the tight group must be exactly one loose group too,
        # i.e. nothing merged in between the two thresholds.
        if members not in loose_sets:
            continue
        if g.size < MIN_CAR_POINTS:
            continue
        if not np.any(pts[g, 2] > MIN_TALL_HEIGHT):
            continue
        ext = _extent(xy[g])
        if ext >= MAX_CAR_EXTENT:
            continue
        clusters.append(Cluster(xy[g].mean(axis=0), ext, "car-sized",
                                int(g.size)))
    clusters.sort(key=lambda c: (c.centroid[0], c.centroid[1]))
    return clusters


def log_response(cloud: PointCloud2D, pad: float = 3.0 * SIGMA) -> LoGGrid:
    """Kernel response summed over all returns, on a 25 cm grid covering
    the padded bounding box of the cloud."""
    xy = cloud.points[:, :2]
    if xy.shape[0] == 0:
        return LoGGrid(np.zeros(2), np.zeros((1, 1)))
    lo = xy.min(axis=0) - pad
    hi = xy.max(axis=0) + pad
    nx = int(math.ceil((hi[0] - lo[0]) / CELL_SIZE)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / CELL_SIZE)) + 1
    # Snap the origin to the global grid so integer-cell translations of
    # the input shift responses exactly.
    origin = np.floor(lo / CELL_SIZE) * CELL_SIZE
    cx = origin[0] + CELL_SIZE * np.arange(nx)
    cy = origin[1] + CELL_SIZE * np.arange(ny)
    dx = cx[:, None] - xy[None, :, 0]
    dy = cy[:, None] - xy[None, :, 1]
    resp = np.zeros((nx, ny))
    for j in range(ny):
        r = np.sqrt(dx ** 2 + (dy[j][None, :]) ** 2)
        resp[:, j] = person_kernel(r).sum(axis=1)
    return LoGGrid(origin, resp)


def extract_person_peaks(grid: LoGGrid,
                         threshold: float = DEFAULT_PEAK_THRESHOLD
                         ) -> list[Cluster]:
    """Strict local maxima above threshold become person-sized clusters."""
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    resp = grid.responses
    nx, ny = resp.shape
    padded = np.full((nx + 2, ny + 2), -np.inf)
    padded[1:-1, 1:-1] = resp
    is_peak = resp > threshold
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_peak &= resp > padded[1 + di:nx + 1 + di, 1 + dj:ny + 1 + dj]
    peaks = []
    for ix, iy in zip(*np.nonzero(is_peak)):
        peaks.append(Cluster(grid.cell_center(int(ix), int(iy)), CELL_SIZE,
                             "person-sized", 1))
    peaks.sort(key=lambda c: (c.centroid[0], c.centroid[1]))
    return peaks


def detect_people(cloud: PointCloud2D,
                  threshold: float = DEFAULT_PEAK_THRESHOLD) -> list[Cluster]:
    """Convenience wrapper: grid response then peak extraction."""
    return extract_person_peaks(log_response(cloud), threshold)
