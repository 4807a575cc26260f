"""Curvature-gated region growing over smooth point neighborhoods.

Single-pass stand-in for a full two-step over-segmentation pipeline:
regions grow from low-curvature seeds through neighbor pairs whose
normals agree within an angle threshold; high-curvature points (creases)
may join a region but never propagate it, which keeps flat faces apart
while letting smoothly curved surfaces (spheres, cylinder walls) grow
into a single segment. Undersized fragments are merged into the neighbor
they touch most.
"""

from collections import deque

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidParameterError
from .cloud import PointCloud, Segment, SegmentedObject, median_spacing


def _neighbor_lists(points, dist_thresh):
    tree = cKDTree(points)
    pairs = tree.query_pairs(dist_thresh, output_type="ndarray")
    neigh = [[] for _ in range(points.shape[0])]
    for i, j in pairs:
        neigh[i].append(j)
        neigh[j].append(i)
    return [np.array(sorted(lst), dtype=np.int64) for lst in neigh], pairs


def _curvatures(normals, neighbors):
    """Mean angle (radians) between a point's normal and its neighbors'."""
    curv = np.zeros(len(neighbors))
    for i, nb in enumerate(neighbors):
        if nb.size == 0:
            continue
        dots = np.clip(normals[nb] @ normals[i], -1.0, 1.0)
        curv[i] = float(np.mean(np.arccos(dots)))
    return curv


def region_grow_segment(cloud: PointCloud, angle_thresh: float = 15.0,
                        dist_thresh: float | None = None,
                        min_segment_points: int | None = None) -> SegmentedObject:
    """Segment a cloud with normals into smooth connected regions.

    Args:
        cloud: input cloud; must carry normals.
        angle_thresh: max normal angle (degrees) between neighbor points
            of one region; also the curvature gate for seed propagation.
        dist_thresh: neighbor radius in meters (default 2.5x median spacing).
        min_segment_points: regions smaller than this are merged into the
            adjacent region with the most shared boundary pairs (default
            max(20, 3% of the cloud)).

    Returns:
        SegmentedObject with consecutive segment ids (ordered by each
        segment's smallest point index) and symmetric, self-loop-free
        adjacency between segments sharing a boundary pair.
    """
    if cloud.normals is None:
        raise InvalidParameterError("region growing requires normals")
    pts = cloud.points
    n = pts.shape[0]
    if dist_thresh is None:
        dist_thresh = 2.5 * median_spacing(pts)
    if min_segment_points is None:
        min_segment_points = max(20, int(np.ceil(0.03 * n)))
    angle_rad = np.deg2rad(angle_thresh)

    neighbors, pairs = _neighbor_lists(pts, dist_thresh)
    normals = cloud.normals
    curv = _curvatures(normals, neighbors)

    labels = np.full(n, -1, dtype=np.int64)
    order = np.argsort(curv, kind="stable")
    next_label = 0
    for seed in order:
        if labels[seed] >= 0:
            continue
        labels[seed] = next_label
        queue = deque([seed])
        while queue:
            p = queue.popleft()
            for q in neighbors[p]:
                if labels[q] >= 0:
                    continue
                dot = float(np.clip(normals[p] @ normals[q], -1.0, 1.0))
                if np.arccos(dot) <= angle_rad:
                    labels[q] = next_label
                    if curv[q] <= angle_rad:
                        queue.append(q)
        next_label += 1

    labels = _merge_small(labels, pairs, min_segment_points)

    # relabel by smallest member index so ids are stable
    first_idx = {}
    for i, lab in enumerate(labels):
        first_idx.setdefault(int(lab), i)
    remap = {lab: rank for rank, (lab, _) in
             enumerate(sorted(first_idx.items(), key=lambda kv: kv[1]))}
    labels = np.array([remap[int(x)] for x in labels], dtype=np.int64)

    segments = tuple(Segment(sid, np.flatnonzero(labels == sid))
                     for sid in range(labels.max() + 1))
    edges = set()
    for i, j in pairs:
        a, b = int(labels[i]), int(labels[j])
        if a != b:
            edges.add((min(a, b), max(a, b)))
    labeled = PointCloud(pts, cloud.normals, labels)
    return SegmentedObject(labeled, segments, frozenset(edges))


def _merge_small(labels, pairs, min_points):
    """Fold undersized regions into their most-contacted neighbor."""
    labels = labels.copy()
    while True:
        sizes = {}
        for lab in labels:
            sizes[int(lab)] = sizes.get(int(lab), 0) + 1
        contact = {}
        for i, j in pairs:
            a, b = int(labels[i]), int(labels[j])
            if a != b:
                key = (min(a, b), max(a, b))
                contact[key] = contact.get(key, 0) + 1
        small = sorted(lab for lab, sz in sizes.items() if sz < min_points)
        merged = False
        for lab in sorted(small, key=lambda l: (sizes[l], l)):
            best, best_contact = None, 0
            for (a, b), cnt in sorted(contact.items()):
                if a == lab and cnt > best_contact:
                    best, best_contact = b, cnt
                elif b == lab and cnt > best_contact:
                    best, best_contact = a, cnt
            if best is not None:
                labels[labels == lab] = best
                merged = True
                break
        if not merged:
            return labels
