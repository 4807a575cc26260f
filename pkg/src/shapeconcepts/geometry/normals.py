"""k-NN covariance normal estimation for 2.5D clouds."""

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InsufficientDataError, InvalidParameterError
from .cloud import PointCloud


def estimate_normals(cloud: PointCloud, k: int = 16) -> PointCloud:
    """Per-point unit normals from the smallest covariance eigenvector.

    The neighborhood is the point plus its k-1 nearest neighbors. Signs
    are oriented toward the sensor origin, matching single-viewpoint
    capture. Degenerate neighborhoods (collinear or coincident points)
    fall back to whatever unit eigenvector the decomposition yields;
    the result never contains NaN.
    """
    if k < 3:
        raise InvalidParameterError("k must be >= 3")
    pts = cloud.points
    n = pts.shape[0]
    if n < k:
        raise InsufficientDataError(f"need at least k={k} points, got {n}")

    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k)
    neigh = pts[idx]                                  # (n, k, 3)
    centered = neigh - neigh.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    _, vecs = np.linalg.eigh(cov)
    normals = vecs[:, :, 0]                           # smallest eigenvalue direction

    flip = (normals * pts).sum(axis=1) > 0.0          # point toward the origin
    normals[flip] *= -1.0
    return cloud.with_normals(normals)
