"""Point cloud containers, neighborhood helpers, and the ASCII cloud format.

Clouds live in the sensor frame: the sensor sits at the origin and looks
at the object, which is what the normal-orientation convention relies on.
All containers are treated as immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidParameterError


@dataclass(frozen=True)
class PointCloud:
    """Points in meters with optional unit normals and segment labels."""

    points: np.ndarray                    # (n, 3) float64
    normals: np.ndarray | None = None     # (n, 3) float64, unit length
    segment_ids: np.ndarray | None = None  # (n,) int64

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidParameterError(f"points must be (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidParameterError("points contain non-finite coordinates")
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.ascontiguousarray(self.normals, dtype=np.float64)
            if nrm.shape != pts.shape:
                raise InvalidParameterError("normals shape must match points")
            lengths = np.linalg.norm(nrm, axis=1)
            if not np.all(np.abs(lengths - 1.0) <= 1e-6):
                raise InvalidParameterError("normals must have unit length (1e-6)")
            object.__setattr__(self, "normals", nrm)
        if self.segment_ids is not None:
            ids = np.ascontiguousarray(self.segment_ids, dtype=np.int64)
            if ids.shape != (pts.shape[0],):
                raise InvalidParameterError("segment_ids shape must be (n,)")
            object.__setattr__(self, "segment_ids", ids)

    def __len__(self):
        return self.points.shape[0]

    def with_normals(self, normals) -> "PointCloud":
        return PointCloud(self.points, normals, self.segment_ids)

    def with_segment_ids(self, segment_ids) -> "PointCloud":
        return PointCloud(self.points, self.normals, segment_ids)


@dataclass(frozen=True)
class Segment:
    """A subset of a cloud's points, with an optionally cached descriptor."""

    id: int
    point_indices: np.ndarray
    descriptor: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        idx = np.ascontiguousarray(self.point_indices, dtype=np.int64)
        if idx.size == 0:
            raise InvalidParameterError(f"segment {self.id} is empty")
        object.__setattr__(self, "point_indices", np.sort(idx))

    def __len__(self):
        return self.point_indices.size


@dataclass(frozen=True)
class SegmentedObject:
    """A cloud split into segments plus the segment adjacency graph."""

    cloud: PointCloud
    segments: tuple[Segment, ...]
    adjacency: frozenset[tuple[int, int]]  # (min_id, max_id) pairs
    category_label: str | None = None
    object_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        ids = {s.id for s in self.segments}
        if len(ids) != len(self.segments):
            raise InvalidParameterError("duplicate segment ids")
        all_idx = np.concatenate([s.point_indices for s in self.segments]) \
            if self.segments else np.empty(0, dtype=np.int64)
        if np.unique(all_idx).size != all_idx.size:
            raise InvalidParameterError("segment point sets overlap")
        edges = set()
        for a, b in self.adjacency:
            if a == b:
                raise InvalidParameterError(f"self-loop on segment {a}")
            if a not in ids or b not in ids:
                raise InvalidParameterError(f"adjacency references unknown segment ({a}, {b})")
            edges.add((min(a, b), max(a, b)))
        object.__setattr__(self, "adjacency", frozenset(edges))

    @property
    def segment_ids(self):
        return [s.id for s in self.segments]

    def segment_by_id(self, sid: int) -> Segment:
        for s in self.segments:
            if s.id == sid:
                return s
        raise KeyError(sid)


def median_spacing(points) -> float:
    """Median nearest-neighbor distance, the cloud's natural length scale."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[0] < 2:
        raise InvalidParameterError("need at least 2 points for a spacing estimate")
    tree = cKDTree(pts)
    dist, _ = tree.query(pts, k=2)
    return float(np.median(dist[:, 1]))


def boundary_adjacency(points, labels, dist_thresh: float) -> frozenset[tuple[int, int]]:
    """Edges between labels that share a point pair closer than dist_thresh."""
    pts = np.asarray(points, dtype=np.float64)
    lab = np.asarray(labels, dtype=np.int64)
    tree = cKDTree(pts)
    pairs = tree.query_pairs(dist_thresh, output_type="ndarray")
    edges = set()
    for i, j in pairs:
        a, b = int(lab[i]), int(lab[j])
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return frozenset(edges)


def from_labels(cloud: PointCloud, category_label: str | None = None,
                object_id: str | None = None,
                dist_thresh: float | None = None) -> SegmentedObject:
    """Assemble a SegmentedObject from a cloud's per-point segment labels.

    Adjacency is derived geometrically: two segments are neighbors when
    they have a point pair within ``dist_thresh`` (default 2.5x the median
    point spacing).
    """
    if cloud.segment_ids is None:
        raise InvalidParameterError("cloud has no segment labels")
    if dist_thresh is None:
        dist_thresh = 2.5 * median_spacing(cloud.points)
    segs = []
    for sid in np.unique(cloud.segment_ids):
        idx = np.flatnonzero(cloud.segment_ids == sid)
        segs.append(Segment(int(sid), idx))
    adjacency = boundary_adjacency(cloud.points, cloud.segment_ids, dist_thresh)
    return SegmentedObject(cloud, tuple(segs), adjacency,
                           category_label=category_label, object_id=object_id)


def write_cloud(path, cloud: PointCloud, category_label: str | None = None):
    """Write the ASCII cloud format: ``x y z [segment_id] [category_label]``."""
    lines = ["# x y z" + (" segment_id" if cloud.segment_ids is not None else "")
             + (" category_label" if category_label is not None else "")]
    for i in range(len(cloud)):
        x, y, z = cloud.points[i]
        parts = [repr(float(x)), repr(float(y)), repr(float(z))]
        if cloud.segment_ids is not None:
            parts.append(str(int(cloud.segment_ids[i])))
        if category_label is not None:
            parts.append(category_label)
        lines.append(" ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_cloud(path) -> tuple[PointCloud, str | None]:
    """Read the ASCII cloud format; tolerates missing optional columns.

    Returns (cloud, category_label); the label is taken from the first
    data line that carries one.
    """
    points, ids, label = [], [], None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 3:
                raise InvalidParameterError(f"bad cloud line in {path!s}: {line!r}")
            points.append((float(parts[0]), float(parts[1]), float(parts[2])))
            if len(parts) >= 4:
                ids.append(int(parts[3]))
            if len(parts) >= 5 and label is None:
                label = parts[4]
    pts = np.array(points, dtype=np.float64).reshape(-1, 3)
    seg = np.array(ids, dtype=np.int64) if len(ids) == len(points) and ids else None
    return PointCloud(pts, segment_ids=seg), label
