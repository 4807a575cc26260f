"""Object graphs: segments annotated with descriptors and visual words."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dictionary import Dictionary
from ..errors import ModelStateError
from .cloud import SegmentedObject
from .descriptors import default_fpfh_radius, fpfh, fpfh_points


@dataclass
class ObjectGraph:
    """A segmented object with per-segment words at every dictionary level.

    Vertices are segment ids; ``words[sid]`` holds the visual word chosen
    at each dictionary level, ``descriptors[sid]`` the segment's FPFH.
    Merged-constellation descriptors are computed on demand and cached so
    the motif decomposition of the same object stays cheap across levels.
    """

    obj: SegmentedObject
    descriptors: dict[int, np.ndarray]
    words: dict[int, tuple[int, ...]]
    fpfh_radius: float
    _merged: dict[frozenset, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def segment_ids(self) -> list[int]:
        return [s.id for s in self.obj.segments]

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self.obj.adjacency

    @property
    def n_levels(self) -> int:
        return len(next(iter(self.words.values()))) if self.words else 0

    @property
    def object_id(self):
        return self.obj.object_id

    @property
    def category_label(self):
        return self.obj.category_label

    def merged_descriptor(self, segment_ids: frozenset) -> np.ndarray:
        """Descriptor of the merged point cloud of a segment constellation."""
        key = frozenset(int(s) for s in segment_ids)
        if key not in self._merged:
            if len(key) == 1:
                self._merged[key] = self.descriptors[next(iter(key))]
            else:
                idx = np.concatenate([self.obj.segment_by_id(sid).point_indices
                                      for sid in sorted(key)])
                idx = np.sort(idx)
                self._merged[key] = fpfh_points(self.obj.cloud.points[idx],
                                                self.obj.cloud.normals[idx],
                                                self.fpfh_radius)
        return self._merged[key]


def build_object_graph(obj: SegmentedObject, dictionary: Dictionary,
                       fpfh_radius: float | None = None) -> ObjectGraph:
    """Attach descriptors and per-level visual words to an object's segments."""
    if dictionary is None or not dictionary.is_trained:
        raise ModelStateError("dictionary is not trained")
    if obj.cloud.normals is None:
        raise ModelStateError("object cloud has no normals; estimate them first")
    if fpfh_radius is None:
        fpfh_radius = default_fpfh_radius(obj.cloud.points)
    descriptors, words = {}, {}
    for seg in obj.segments:
        d = seg.descriptor if seg.descriptor is not None else fpfh(seg, obj.cloud, fpfh_radius)
        descriptors[seg.id] = d
        words[seg.id] = dictionary.assign(d)
    return ObjectGraph(obj, descriptors, words, fpfh_radius)
