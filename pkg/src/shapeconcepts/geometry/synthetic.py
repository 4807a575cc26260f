"""Synthetic 2.5D scans with ground-truth segments.

Primitive surfaces (box faces, sphere, cylinder wall/caps) are sampled
uniformly by area, back-face culled against the viewpoint, jittered with
isotropic Gaussian noise, and expressed in the sensor frame (sensor at
the origin). Each visible surface becomes one ground-truth segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError
from .cloud import PointCloud, SegmentedObject, from_labels

_KINDS = ("box", "sphere", "cylinder", "composite")


@dataclass(frozen=True)
class ShapeSpec:
    """A primitive or composite shape.

    dimensions: box (sx, sy, sz) edge lengths; sphere (r,); cylinder
    (r, h) with the axis along z. Composites hold parts plus per-part
    center offsets and ignore their own dimensions.
    """

    kind: str
    dimensions: tuple[float, ...] = ()
    parts: tuple["ShapeSpec", ...] = ()
    offsets: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown shape kind {self.kind!r}")
        if self.kind == "composite":
            if not self.parts or len(self.parts) != len(self.offsets):
                raise InvalidParameterError("composite needs parts with matching offsets")
        else:
            want = {"box": 3, "sphere": 1, "cylinder": 2}[self.kind]
            if len(self.dimensions) != want:
                raise InvalidParameterError(
                    f"{self.kind} takes {want} dimension(s), got {len(self.dimensions)}")
            if any(d <= 0 for d in self.dimensions):
                raise InvalidParameterError(f"non-positive dimension in {self.dimensions}")


def box(sx, sy, sz) -> ShapeSpec:
    return ShapeSpec("box", (float(sx), float(sy), float(sz)))


def sphere(radius) -> ShapeSpec:
    return ShapeSpec("sphere", (float(radius),))


def cylinder(radius, height) -> ShapeSpec:
    return ShapeSpec("cylinder", (float(radius), float(height)))


def composite(parts, offsets) -> ShapeSpec:
    return ShapeSpec("composite", (), tuple(parts),
                     tuple((float(x), float(y), float(z)) for x, y, z in offsets))


def _box_surfaces(dims, offset):
    sx, sy, sz = dims
    surfaces = []
    for axis in range(3):
        for sign in (1.0, -1.0):
            normal = np.zeros(3)
            normal[axis] = sign
            other = [a for a in range(3) if a != axis]
            extents = (dims[other[0]], dims[other[1]])
            area = extents[0] * extents[1]

            def sample(rng, n, axis=axis, sign=sign, other=other, extents=extents):
                pts = np.zeros((n, 3))
                pts[:, axis] = sign * dims[axis] / 2.0
                pts[:, other[0]] = rng.uniform(-extents[0] / 2.0, extents[0] / 2.0, n)
                pts[:, other[1]] = rng.uniform(-extents[1] / 2.0, extents[1] / 2.0, n)
                nrm = np.zeros((n, 3))
                nrm[:, axis] = sign
                return pts + offset, nrm

            surfaces.append((area, sample))
    return surfaces


def _sphere_surfaces(dims, offset):
    r = dims[0]

    def sample(rng, n):
        vec = rng.normal(size=(n, 3))
        norms = np.linalg.norm(vec, axis=1)
        norms[norms < 1e-12] = 1.0
        nrm = vec / norms[:, None]
        return nrm * r + offset, nrm

    return [(4.0 * np.pi * r * r, sample)]


def _cylinder_surfaces(dims, offset):
    r, h = dims

    def sample_wall(rng, n):
        ang = rng.uniform(0.0, 2.0 * np.pi, n)
        z = rng.uniform(-h / 2.0, h / 2.0, n)
        nrm = np.stack([np.cos(ang), np.sin(ang), np.zeros(n)], axis=1)
        pts = np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)
        return pts + offset, nrm

    surfaces = [(2.0 * np.pi * r * h, sample_wall)]
    for sign in (1.0, -1.0):
        def sample_cap(rng, n, sign=sign):
            ang = rng.uniform(0.0, 2.0 * np.pi, n)
            rad = r * np.sqrt(rng.uniform(0.0, 1.0, n))
            pts = np.stack([rad * np.cos(ang), rad * np.sin(ang),
                            np.full(n, sign * h / 2.0)], axis=1)
            nrm = np.zeros((n, 3))
            nrm[:, 2] = sign
            return pts + offset, nrm

        surfaces.append((np.pi * r * r, sample_cap))
    return surfaces


def _surfaces(spec: ShapeSpec, offset=np.zeros(3)):
    if spec.kind == "box":
        return _box_surfaces(spec.dimensions, offset)
    if spec.kind == "sphere":
        return _sphere_surfaces(spec.dimensions, offset)
    if spec.kind == "cylinder":
        return _cylinder_surfaces(spec.dimensions, offset)
    out = []
    for part, off in zip(spec.parts, spec.offsets):
        out.extend(_surfaces(part, offset + np.asarray(off, dtype=np.float64)))
    return out


def _inside(spec: ShapeSpec, offset, pts, tol=1e-9):
    """Strictly-inside test used to cull hidden samples of composites."""
    local = pts - offset
    if spec.kind == "box":
        half = np.asarray(spec.dimensions) / 2.0
        return np.all(np.abs(local) < half - tol, axis=1)
    if spec.kind == "sphere":
        return np.linalg.norm(local, axis=1) < spec.dimensions[0] - tol
    if spec.kind == "cylinder":
        r, h = spec.dimensions
        radial = np.linalg.norm(local[:, :2], axis=1)
        return (radial < r - tol) & (np.abs(local[:, 2]) < h / 2.0 - tol)
    inside = np.zeros(pts.shape[0], dtype=bool)
    for part, off in zip(spec.parts, spec.offsets):
        inside |= _inside(part, offset + np.asarray(off, dtype=np.float64), pts, tol)
    return inside


def generate_synthetic_scan(shape: ShapeSpec, viewpoint, noise_sigma: float,
                            seed: int, n_points: int = 1800,
                            category_label: str | None = None,
                            object_id: str | None = None) -> SegmentedObject:
    """Render one 2.5D scan of ``shape`` seen from ``viewpoint``.

    Args:
        shape: the shape to scan (object frame, centered at the origin).
        viewpoint: sensor position in the object frame; the returned cloud
            is translated so the sensor sits at the origin.
        noise_sigma: isotropic Gaussian jitter scale in meters (>= 0).
        seed: RNG seed; identical arguments give bit-identical scans.
        n_points: approximate number of surviving points.

    Returns:
        SegmentedObject with per-surface ground-truth segment ids and
        geometrically derived segment adjacency.
    """
    if noise_sigma < 0:
        raise InvalidParameterError("noise_sigma must be >= 0")
    viewpoint = np.asarray(viewpoint, dtype=np.float64).reshape(3)
    rng = np.random.default_rng(seed)

    surfaces = _surfaces(shape)
    total_area = sum(a for a, _ in surfaces)
    density = 2.0 * n_points / total_area  # roughly half of a closed surface is visible

    composite_parts = []
    if shape.kind == "composite":
        composite_parts = [(part, np.asarray(off, dtype=np.float64))
                           for part, off in zip(shape.parts, shape.offsets)]
        part_of_surface = []
        for k, (part, off) in enumerate(composite_parts):
            part_of_surface.extend([k] * len(_surfaces(part, off)))
    else:
        part_of_surface = [0] * len(surfaces)

    kept_pts, kept_ids = [], []
    next_id = 0
    for sidx, (area, sample) in enumerate(surfaces):
        count = max(1, int(round(area * density)))
        pts, nrm = sample(rng, count)
        visible = ((viewpoint[None, :] - pts) * nrm).sum(axis=1) > 1e-12
        pts = pts[visible]
        if composite_parts:
            hidden = np.zeros(pts.shape[0], dtype=bool)
            for k, (part, off) in enumerate(composite_parts):
                if k != part_of_surface[sidx]:
                    hidden |= _inside(part, off, pts)
            pts = pts[~hidden]
        if pts.shape[0] == 0:
            continue
        kept_pts.append(pts)
        kept_ids.append(np.full(pts.shape[0], next_id, dtype=np.int64))
        next_id += 1

    if not kept_pts:
        raise InvalidParameterError("no surface visible from the given viewpoint")
    pts = np.concatenate(kept_pts)
    ids = np.concatenate(kept_ids)
    pts = pts - viewpoint  # sensor frame
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, pts.shape)
    cloud = PointCloud(pts, segment_ids=ids)
    return from_labels(cloud, category_label=category_label, object_id=object_id)


def teddy_like(rng=None) -> ShapeSpec:
    """A cluster of overlapping spheres (body, head, two ears)."""
    return composite(
        (sphere(0.10), sphere(0.062), sphere(0.03), sphere(0.03)),
        ((0.0, 0.0, 0.0), (0.0, 0.0, 0.135), (0.0, -0.05, 0.185), (0.0, 0.05, 0.185)),
    )


def can_on_plane() -> ShapeSpec:
    """A cylinder standing on a thin supporting plane."""
    return composite(
        (cylinder(0.06, 0.2), box(0.3, 0.3, 0.004)),
        ((0.0, 0.0, 0.0), (0.0, 0.0, -0.102)),
    )


def sample_viewpoint(rng) -> np.ndarray:
    """A generic corner viewpoint: all components positive, off-axis."""
    azimuth = rng.uniform(np.deg2rad(20.0), np.deg2rad(70.0))
    elevation = rng.uniform(np.deg2rad(25.0), np.deg2rad(55.0))
    dist = rng.uniform(1.0, 1.4)
    return dist * np.array([np.cos(elevation) * np.cos(azimuth),
                            np.cos(elevation) * np.sin(azimuth),
                            np.sin(elevation)])


def sample_shape(category: str, rng) -> ShapeSpec:
    """Draw a randomized shape for one of the built-in categories."""
    if category == "box":
        return box(rng.uniform(0.15, 0.35), rng.uniform(0.15, 0.35),
                   rng.uniform(0.15, 0.35))
    if category == "can":
        return cylinder(rng.uniform(0.045, 0.09), rng.uniform(0.14, 0.30))
    if category == "sphere":
        return sphere(rng.uniform(0.06, 0.13))
    if category == "teddy":
        return teddy_like(rng)
    raise InvalidParameterError(f"unknown category {category!r}")


def make_dataset(categories, per_category: int, noise_sigma: float, seed: int,
                 n_points: int = 1800) -> list[SegmentedObject]:
    """Generate a labeled synthetic dataset, deterministic per seed."""
    objects = []
    for cat_idx, category in enumerate(categories):
        for i in range(per_category):
            rng = np.random.default_rng([seed, cat_idx, i])
            shape = sample_shape(category, rng)
            viewpoint = sample_viewpoint(rng)
            scan_seed = int(rng.integers(0, 2**31 - 1))
            objects.append(generate_synthetic_scan(
                shape, viewpoint, noise_sigma, scan_seed, n_points=n_points,
                category_label=category, object_id=f"{category}_{i:03d}"))
    return objects
