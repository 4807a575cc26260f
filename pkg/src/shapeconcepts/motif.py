"""Shape motif hierarchies and stimuli generation.

An object graph is decomposed level by level: level 1 holds one instance
per segment, and each next level holds the unions of adjacent instances
that grow the constellation by exactly one segment, i.e. all connected
segment constellations of that size. Per dictionary level, the unique
word multisets of observed constellations form the vertices of a motif
hierarchy; descriptors of the observed constellations are stored on their
vertex as prototypes. A frozen hierarchy ensemble turns any object into a
stimuli vector: each matched vertex responds with a Gaussian kernel over
the Jensen-Shannon divergence between its prototypes and the incoming
constellation descriptor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import jsd_matrix
from .dictionary import Dictionary
from .errors import (InsufficientDataError, InvalidParameterError,
                     ModelStateError)
from .geometry.graph import ObjectGraph

DEFAULT_BANDWIDTH = 0.025
MAX_INSTANCES_PER_LEVEL = 512


@dataclass(frozen=True)
class InstanceMotif:
    """One observed segment constellation of an object."""

    segment_ids: frozenset
    level: int
    words: tuple[int, ...]       # sorted word multiset at the hierarchy's level
    descriptor: np.ndarray


@dataclass
class Decomposition:
    """Per-level instances and their adjacency (index pairs per level)."""

    levels: list[list[InstanceMotif]]
    adjacency: list[set[tuple[int, int]]]


@dataclass
class MotifVertex:
    id: int
    level: int
    words: tuple[int, ...]
    prototypes: list = field(default_factory=list)


@dataclass
class MotifHierarchy:
    """All motif vertices observed at one dictionary level."""

    dictionary_level: int
    vertices: list[MotifVertex] = field(default_factory=list)
    by_key: dict = field(default_factory=dict)       # (level, words) -> vertex id
    edges: dict = field(default_factory=dict)        # level -> {(min_id, max_id)}

    def find(self, level: int, words: tuple[int, ...]) -> MotifVertex | None:
        vid = self.by_key.get((level, words))
        return self.vertices[vid] if vid is not None else None

    def find_or_create(self, level: int, words: tuple[int, ...]) -> MotifVertex:
        vertex = self.find(level, words)
        if vertex is None:
            vertex = MotifVertex(len(self.vertices), level, words)
            self.vertices.append(vertex)
            self.by_key[(level, words)] = vertex.id
        return vertex

    def add_edge(self, level: int, a: int, b: int):
        if a != b:
            self.edges.setdefault(level, set()).add((min(a, b), max(a, b)))

    @property
    def n_levels(self) -> int:
        return max((v.level for v in self.vertices), default=0)


@dataclass
class Ensemble:
    """One motif hierarchy per dictionary level, frozen after training."""

    hierarchies: list[MotifHierarchy]
    frozen: bool = False

    @property
    def dimension(self) -> int:
        return sum(len(h.vertices) for h in self.hierarchies)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(h.vertices) for h in self.hierarchies)


@dataclass(frozen=True)
class StimuliVector:
    """Concatenated per-hierarchy activation responses of one object."""

    object_id: str | None
    blocks: tuple
    category_label: str | None = None

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate(self.blocks) if self.blocks else np.empty(0)

    def __len__(self):
        return int(sum(b.size for b in self.blocks))


def decompose(graph: ObjectGraph, dictionary_level: int) -> Decomposition:
    """Enumerate the object's connected segment constellations per level."""
    sids = sorted(graph.segment_ids)
    if not sids:
        raise InsufficientDataError("object has no segments")
    n_levels = graph.n_levels
    if not 1 <= dictionary_level <= n_levels:
        raise InvalidParameterError(
            f"object words cover levels [1, {n_levels}], requested {dictionary_level}")

    def words_of(id_set):
        return tuple(sorted(graph.words[s][dictionary_level - 1] for s in id_set))

    level1 = [InstanceMotif(frozenset([s]), 1, words_of([s]), graph.descriptors[s])
              for s in sids]
    pos = {s: k for k, s in enumerate(sids)}
    adj1 = {(min(pos[a], pos[b]), max(pos[a], pos[b])) for a, b in graph.edges}
    levels, adjacency = [level1], [adj1]

    while True:
        current = levels[-1]
        pairs = adjacency[-1]
        if not pairs or len(next(iter(current)).segment_ids) == len(sids):
            break
        target = len(levels) + 1
        seen = {}
        for a, b in sorted(pairs):
            union = current[a].segment_ids | current[b].segment_ids
            if len(union) == target and union not in seen:
                seen[union] = InstanceMotif(union, target, words_of(union),
                                            graph.merged_descriptor(union))
        if not seen:
            break
        instances = sorted(seen.values(), key=lambda m: tuple(sorted(m.segment_ids)))
        instances = instances[:MAX_INSTANCES_PER_LEVEL]
        adj = set()
        for i in range(len(instances)):
            for j in range(i + 1, len(instances)):
                if instances[i].segment_ids & instances[j].segment_ids:
                    adj.add((i, j))
        levels.append(instances)
        adjacency.append(adj)
    return Decomposition(levels, adjacency)


def train_ensemble(graphs, dictionary: Dictionary) -> Ensemble:
    """Encode training objects into one motif hierarchy per dictionary level.

    Label-agnostic: every observed constellation either matches an
    existing vertex (same level and word multiset) and contributes a new
    prototype, or creates a new vertex. Instance adjacency is recorded as
    hierarchy edges.
    """
    graphs = list(graphs)
    if not graphs:
        raise InsufficientDataError("empty training set")
    hierarchies = []
    for f in range(1, dictionary.depth + 1):
        hierarchy = MotifHierarchy(dictionary_level=f)
        for graph in graphs:
            decomp = decompose(graph, f)
            for level_idx, instances in enumerate(decomp.levels):
                level = level_idx + 1
                vids = []
                for inst in instances:
                    vertex = hierarchy.find_or_create(level, inst.words)
                    vertex.prototypes.append(inst.descriptor)
                    vids.append(vertex.id)
                for a, b in decomp.adjacency[level_idx]:
                    hierarchy.add_edge(level, vids[a], vids[b])
        hierarchies.append(hierarchy)
    return Ensemble(hierarchies, frozen=True)


def stimulus(vertex: MotifVertex, descriptor, activated: bool,
             bandwidth: float = DEFAULT_BANDWIDTH) -> float:
    """Gaussian-kernel response of a motif vertex to one constellation.

    Activated vertices respond with the mean of exp(-JSD(t, q)^2 / (2 s^2))
    over stored prototypes t; inactive vertices respond 0.
    """
    if bandwidth <= 0:
        raise InvalidParameterError("bandwidth must be positive")
    if not activated:
        return 0.0
    if not vertex.prototypes:
        raise ModelStateError(f"vertex {vertex.id} activated but has no prototypes")
    q = np.asarray(descriptor, dtype=np.float64)
    divs = jsd_matrix(q[None, :], np.vstack(vertex.prototypes))[0]
    return float(np.mean(np.exp(-(divs * divs) / (2.0 * bandwidth * bandwidth))))


def stimuli_vector(graph: ObjectGraph, ensemble: Ensemble,
                   bandwidth: float = DEFAULT_BANDWIDTH) -> StimuliVector:
    """Project an object through a frozen ensemble.

    Per hierarchy, each vertex matched by one or more of the object's
    constellations (same level and word multiset) takes its strongest
    stimulus; unmatched vertices stay 0. Blocks follow vertex creation
    order and are concatenated hierarchy by hierarchy.
    """
    if not ensemble.frozen:
        raise ModelStateError("ensemble must be frozen before stimuli generation")
    blocks = []
    for hierarchy in ensemble.hierarchies:
        block = np.zeros(len(hierarchy.vertices))
        decomp = decompose(graph, hierarchy.dictionary_level)
        for level_idx, instances in enumerate(decomp.levels):
            for inst in instances:
                vertex = hierarchy.find(level_idx + 1, inst.words)
                if vertex is not None:
                    value = stimulus(vertex, inst.descriptor, True, bandwidth)
                    if value > block[vertex.id]:
                        block[vertex.id] = value
        blocks.append(block)
    return StimuliVector(graph.object_id, tuple(blocks), graph.category_label)
