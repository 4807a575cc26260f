"""Point-cloud generation, abstraction, and description."""

from .cloud import (PointCloud, Segment, SegmentedObject, boundary_adjacency,
                    from_labels, median_spacing, read_cloud, write_cloud)
from .descriptors import FPFH_BINS, FPFH_DIM, default_fpfh_radius, fpfh, fpfh_points
from .graph import ObjectGraph, build_object_graph
from .normals import estimate_normals
from .segmentation import region_grow_segment
from .synthetic import (ShapeSpec, box, can_on_plane, composite, cylinder,
                        generate_synthetic_scan, make_dataset, sample_shape,
                        sample_viewpoint, sphere, teddy_like)

__all__ = [
    "PointCloud", "Segment", "SegmentedObject", "ObjectGraph", "ShapeSpec",
    "boundary_adjacency", "box", "build_object_graph", "can_on_plane",
    "composite", "cylinder", "default_fpfh_radius", "estimate_normals",
    "fpfh", "fpfh_points", "from_labels", "generate_synthetic_scan",
    "make_dataset", "median_spacing", "read_cloud", "region_grow_segment",
    "sample_shape", "sample_viewpoint", "sphere", "teddy_like", "write_cloud",
    "FPFH_BINS", "FPFH_DIM",
]
