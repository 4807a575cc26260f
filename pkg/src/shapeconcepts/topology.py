"""Topological space construction and H0 persistence filtration.

Stimuli vectors become vertices of a complete Jensen-Shannon graph whose
minimum spanning tree is the topological space. Edges are re-weighted by
inverted mean-geodesic heat (computed on the unit-weight tree), so outer,
homogeneous regions sit closer together than the heterogeneous interior.
A radius sweep over the resulting edge distances then merges components;
every merge ("annexation") kills the smaller component's class, which
yields the H0 barcode, the annexation-time-annotated tree, and the
annexation activity curve whose global maximum marks the concept cut.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import jsd, jsd_matrix
from .errors import (InsufficientDataError, InvalidParameterError,
                     ModelStateError)
from .motif import StimuliVector

__all__ = ["jsd", "normalize_rows", "TopoSpace", "build_space",
           "geodesic_heats", "Filtration", "FiltrationEvent", "filtrate",
           "annexation_curve", "peak_annexation_time"]


def normalize_rows(X) -> np.ndarray:
    """L1-normalize rows; all-zero rows become the uniform distribution."""
    X = np.asarray(X, dtype=np.float64)
    if np.any(X < 0):
        raise InvalidParameterError("distributions must be non-negative")
    sums = X.sum(axis=1, keepdims=True)
    out = np.where(sums > 0, X / np.where(sums > 0, sums, 1.0), 1.0 / X.shape[1])
    return out


@dataclass(frozen=True)
class TopoSpace:
    """Spanning tree over stimuli vectors.

    ``edges`` hold the tree as (u, v) vertex-index pairs with their
    original JSD weights; after ``geodesic_heats`` the inverted-heat
    ``edge_distances`` in [0, 1] are filled in alongside per-vertex
    ``raw_heats`` (mean geodesic distance, self included).
    """

    stimuli: tuple
    edges: tuple                      # ((u, v), ...) with u < v
    jsd_weights: tuple
    raw_heats: tuple | None = None
    edge_distances: tuple | None = None

    @property
    def n_vertices(self) -> int:
        return len(self.stimuli)

    @property
    def labels(self) -> tuple:
        return tuple(s.category_label for s in self.stimuli)

    def matrix(self) -> np.ndarray:
        return np.vstack([s.vector for s in self.stimuli])


def _as_stimuli(stimuli):
    out = []
    for k, s in enumerate(stimuli):
        if isinstance(s, StimuliVector):
            out.append(s)
        else:
            out.append(StimuliVector(str(k), (np.asarray(s, dtype=np.float64),)))
    return tuple(out)


def build_space(stimuli) -> TopoSpace:
    """Minimum spanning tree of the complete pairwise-JSD graph.

    Vectors are L1-normalized first (zero vectors become uniform). Edge
    ties break lexicographically on (min id, max id), so the tree is
    deterministic.
    """
    stimuli = _as_stimuli(stimuli)
    n = len(stimuli)
    if n < 2:
        raise InsufficientDataError("need at least 2 stimuli vectors")
    X = normalize_rows(np.vstack([s.vector for s in stimuli]))
    dist = jsd_matrix(X)

    order = sorted(((dist[i, j], i, j) for i in range(n) for j in range(i + 1, n)))
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edges, weights = [], []
    for w, i, j in order:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            edges.append((i, j))
            weights.append(float(w))
            if len(edges) == n - 1:
                break
    return TopoSpace(stimuli, tuple(edges), tuple(weights))


def _tree_adjacency(n, edges):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return adj


def geodesic_heats(space: TopoSpace) -> TopoSpace:
    """Re-weight tree edges by inverted mean-geodesic vertex heat.

    Every tree edge counts 1; the raw heat of a vertex is its mean
    geodesic distance to all vertices (self distance 0 included). Vertex
    heats are min-max scaled to [0, 1] and inverted, and each edge takes
    the mean inverted heat of its endpoints as its distance.
    """
    n = space.n_vertices
    adj = _tree_adjacency(n, space.edges)
    raw = np.zeros(n)
    for src in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        dist[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        if np.any(dist < 0):
            raise InvalidParameterError("space is disconnected")
        raw[src] = dist.sum() / n

    span = raw.max() - raw.min()
    scaled = (raw - raw.min()) / span if span > 0 else np.zeros(n)
    inverted = 1.0 - scaled
    distances = tuple(float((inverted[u] + inverted[v]) / 2.0)
                      for u, v in space.edges)
    return replace(space, raw_heats=tuple(float(h) for h in raw),
                   edge_distances=distances)


@dataclass(frozen=True)
class FiltrationEvent:
    """One annexation: the surviving class absorbs the dying class."""

    step: int
    surviving: int        # founding vertex of the surviving class
    dying: int            # founding vertex of the class that dies here
    edge: tuple


@dataclass(frozen=True)
class Filtration:
    """Completed H0 radius sweep over a heat-weighted spanning tree."""

    space: TopoSpace
    radii: tuple                  # ascending filtration radii
    times: tuple                  # normalized time per radius step
    events: tuple                 # FiltrationEvent, in processing order
    deaths: dict                  # founding vertex -> normalized death (inf survives)
    edges: tuple                  # ((u, v, normalized annexation time), ...)
    annexation_counts: tuple      # events per step
    normalization: tuple          # (first radius, last radius)

    @property
    def n_vertices(self) -> int:
        return self.space.n_vertices


def filtration_radii(min_positive: float | None, max_distance: float,
                     max_steps: int) -> tuple:
    """Radius grid: multiples of the min positive distance, capped in count."""
    if min_positive is None:
        return (0.0,)
    n_steps = max(1, math.ceil(max_distance / min_positive - 1e-12))
    if n_steps > max_steps:
        n_steps = max_steps
        step = max_distance / n_steps
    else:
        step = min_positive
    radii = [step * (k + 1) for k in range(n_steps)]
    radii[-1] = max(radii[-1], max_distance)
    return tuple(radii)


def filtrate(space: TopoSpace, max_steps: int = 1000) -> Filtration:
    """Sweep the edge distances and record component merges.

    The first radius is the minimum positive edge distance, which is also
    the step size; the grid is scaled up uniformly if it would exceed
    ``max_steps``. Within a step, edges enter sorted by (distance, u, v).
    When two components meet, the larger one survives (ties: the one
    holding the smaller vertex id) and the other class dies at that step's
    normalized time. If every distance is zero, everything merges in a
    single step at time 0.
    """
    if space.edge_distances is None:
        raise InvalidParameterError("space has no edge distances; run geodesic_heats")
    if max_steps < 2:
        raise InvalidParameterError("max_steps must be >= 2")
    n = space.n_vertices
    dists = np.asarray(space.edge_distances)
    positive = dists[dists > 0]
    radii = filtration_radii(float(positive.min()) if positive.size else None,
                             float(dists.max()), max_steps)
    span = radii[-1] - radii[0]
    times = tuple((r - radii[0]) / span if span > 0 else 0.0 for r in radii)

    entry = sorted((float(d), u, v) for d, (u, v) in zip(dists, space.edges))
    parent = list(range(n))
    size = [1] * n
    min_id = list(range(n))
    class_of = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    events, f_edges = [], []
    deaths = {}
    counts = [0] * len(radii)
    pointer = 0
    for step, radius in enumerate(radii):
        while pointer < len(entry) and entry[pointer][0] <= radius:
            d, u, v = entry[pointer]
            pointer += 1
            ru, rv = find(u), find(v)
            if ru == rv:
                raise ModelStateError("edge set contains a cycle; not a tree")
            if (size[ru], -min_id[ru]) >= (size[rv], -min_id[rv]):
                winner, loser = ru, rv
            else:
                winner, loser = rv, ru
            events.append(FiltrationEvent(step, class_of[winner],
                                          class_of[loser], (u, v)))
            deaths[class_of[loser]] = times[step]
            parent[loser] = winner
            size[winner] += size[loser]
            min_id[winner] = min(min_id[winner], min_id[loser])
            counts[step] += 1
            f_edges.append((u, v, times[step]))

    if len(events) != n - 1:
        raise ModelStateError(
            f"filtration produced {len(events)} merges for {n} vertices; "
            "the space is not a connected tree")
    deaths[class_of[find(0)]] = math.inf
    return Filtration(space, tuple(radii), times, tuple(events), deaths,
                      tuple(f_edges), tuple(counts), (radii[0], radii[-1]))


def annexation_curve(filtration: Filtration) -> list:
    """(normalized time, merge count) per filtration step."""
    if not filtration.events:
        raise ModelStateError("filtration has no events")
    return list(zip(filtration.times, filtration.annexation_counts))


def peak_annexation_time(filtration: Filtration) -> float:
    """Normalized time of the step with the most annexations (earliest tie)."""
    curve = annexation_curve(filtration)
    counts = np.array([c for _, c in curve])
    return float(curve[int(np.argmax(counts))][0])
