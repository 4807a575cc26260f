"""Simplified 33-bin FPFH segment descriptors.

Pair angle features are accumulated with uniform weighting over
segment-internal radius neighbors (no SPFH distance re-weighting), then
smoothed and L1-normalized, so every descriptor is a probability
distribution suitable for Jensen-Shannon comparisons.
"""

import numpy as np
from scipy.spatial import cKDTree

from .._kernels import pair_feature_histogram
from ..errors import InsufficientDataError, InvalidParameterError
from .cloud import PointCloud, Segment, median_spacing

FPFH_BINS = 11
FPFH_DIM = 3 * FPFH_BINS
_SMOOTHING = 1e-6


def default_fpfh_radius(points) -> float:
    """4x the median nearest-neighbor spacing of the cloud."""
    return 4.0 * median_spacing(points)


def fpfh_points(points, normals, radius: float) -> np.ndarray:
    """FPFH descriptor of a bare point set (used for merged constellations)."""
    if radius <= 0:
        raise InvalidParameterError("radius must be positive")
    pts = np.ascontiguousarray(points, dtype=np.float64)
    nrm = np.ascontiguousarray(normals, dtype=np.float64)
    tree = cKDTree(pts)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if pairs.shape[0] == 0:
        raise InsufficientDataError("no neighbor pairs within radius; points isolated")
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    hist = pair_feature_histogram(pts, nrm, pairs, FPFH_BINS)
    hist = hist + _SMOOTHING
    return hist / hist.sum()


def fpfh(segment: Segment, cloud: PointCloud, radius: float | None = None) -> np.ndarray:
    """33-bin descriptor of one segment (needs cloud normals)."""
    if cloud.normals is None:
        raise InvalidParameterError("fpfh requires normals")
    if radius is None:
        radius = default_fpfh_radius(cloud.points)
    idx = segment.point_indices
    return fpfh_points(cloud.points[idx], cloud.normals[idx], radius)
