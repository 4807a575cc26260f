"""Persistent concept extraction, scoring, and inference.

Cutting the annexation-time-annotated tree at a chosen time and keeping
the connected components of sufficient size yields the concepts; each
member stimuli vector is a concept prototype. Concepts are graded by
purity (largest label share) and a rank score favoring large pure
concepts, and queried through the mean Mahalanobis distance between a
stimuli vector and the concept's prototypes (a distance: smaller means
more similar).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatchError, InvalidParameterError,
                     MissingLabelError)
from .topology import Filtration

RANK_EPSILON = 1e-6
DEFAULT_SHRINKAGE = 1e-3
DEFAULT_MIN_SIZE = 2


@dataclass(frozen=True)
class CovarianceModel:
    """Diagonal pooled covariance with shrinkage toward the mean variance."""

    variances: np.ndarray
    shrinkage: float = DEFAULT_SHRINKAGE

    @classmethod
    def fit(cls, X, shrinkage: float = DEFAULT_SHRINKAGE) -> "CovarianceModel":
        X = np.asarray(X, dtype=np.float64)
        var = X.var(axis=0)
        mean_var = float(var.mean())
        if mean_var <= 0.0:
            var = np.ones(X.shape[1])   # all-constant corpus: plain euclidean
        else:
            var = (1.0 - shrinkage) * var + shrinkage * mean_var
            var = np.maximum(var, 1e-12 * mean_var)
        return cls(var, shrinkage)

    @classmethod
    def identity(cls, dim: int) -> "CovarianceModel":
        return cls(np.ones(dim), 0.0)

    def distances(self, x, P) -> np.ndarray:
        """Mahalanobis distances from x to each row of P."""
        x = np.asarray(x, dtype=np.float64)
        P = np.atleast_2d(np.asarray(P, dtype=np.float64))
        if x.shape[0] != P.shape[1] or x.shape[0] != self.variances.shape[0]:
            raise DimensionMismatchError(
                f"dim {x.shape[0]} vs prototypes {P.shape[1]} vs model "
                f"{self.variances.shape[0]}")
        diff = P - x[None, :]
        return np.sqrt(((diff * diff) / self.variances[None, :]).sum(axis=1))


@dataclass(frozen=True)
class Concept:
    """A persistent component: member vertices and their stimuli vectors."""

    id: int
    member_ids: tuple
    prototypes: tuple            # StimuliVector per member, same order
    formation_time: float

    @property
    def size(self) -> int:
        return len(self.member_ids)

    @property
    def labels(self) -> tuple:
        return tuple(p.category_label for p in self.prototypes)

    def matrix(self) -> np.ndarray:
        return np.vstack([p.vector for p in self.prototypes])


@dataclass(frozen=True)
class ConceptSet:
    concepts: tuple
    cut_time: float
    min_size: int
    covariance: CovarianceModel

    def __len__(self):
        return len(self.concepts)


def cut_components(filtration: Filtration, cut_time: float,
                   keep_equal_time: bool = True) -> list:
    """Connected components after dropping late annexation edges.

    Edges annotated with a time later than ``cut_time`` are removed
    (strictly later by default; ``keep_equal_time=False`` also drops
    edges at exactly the cut time). Returns components as sorted id
    lists, deterministically ordered by (-size, smallest member).
    """
    n = filtration.n_vertices
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v, t in filtration.edges:
        keep = t <= cut_time if keep_equal_time else t < cut_time
        if keep:
            parent[find(u)] = find(v)
    groups = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    comps = [sorted(g) for g in groups.values()]
    comps.sort(key=lambda g: (-len(g), g[0]))
    return comps


def extract_concepts(filtration: Filtration, cut_time: float,
                     min_size: int = DEFAULT_MIN_SIZE,
                     keep_equal_time: bool = True,
                     covariance: CovarianceModel | None = None) -> ConceptSet:
    """Concepts = components of the cut tree with at least min_size members.

    Concept ids run in descending size order (ties: smallest member id).
    The covariance model defaults to a shrunk diagonal fit over all of
    the space's stimuli vectors.
    """
    if not 0.0 <= cut_time <= 1.0:
        raise InvalidParameterError("cut_time must lie in [0, 1]")
    if min_size < 1:
        raise InvalidParameterError("min_size must be >= 1")
    stimuli = filtration.space.stimuli
    if covariance is None:
        covariance = CovarianceModel.fit(filtration.space.matrix())

    edge_time = {}
    for u, v, t in filtration.edges:
        edge_time[(u, v)] = t

    concepts = []
    for comp in cut_components(filtration, cut_time, keep_equal_time):
        if len(comp) < min_size:
            continue
        members = set(comp)
        internal = [t for (u, v), t in edge_time.items()
                    if u in members and v in members
                    and (t <= cut_time if keep_equal_time else t < cut_time)]
        concepts.append(Concept(
            id=len(concepts),
            member_ids=tuple(comp),
            prototypes=tuple(stimuli[v] for v in comp),
            formation_time=max(internal) if internal else 0.0))
    return ConceptSet(tuple(concepts), cut_time, min_size, covariance)


def purity(concept: Concept, label_universe=None) -> float:
    """Largest label proportion among the concept's prototypes."""
    labels = concept.labels
    if any(lab is None for lab in labels):
        raise MissingLabelError("concept has unlabeled prototypes")
    counts = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    return max(counts.values()) / len(labels)


def rank_score(concept: Concept, epsilon: float = RANK_EPSILON) -> float:
    """Size over impurity: larger and purer concepts rank higher."""
    return concept.size / (1.0 - purity(concept) + epsilon)


def concept_response(stimuli_vector, concept: Concept,
                     covariance: CovarianceModel) -> float:
    """Mean Mahalanobis distance from a stimuli vector to the prototypes."""
    gamma = np.asarray(getattr(stimuli_vector, "vector", stimuli_vector),
                       dtype=np.float64)
    return float(covariance.distances(gamma, concept.matrix()).mean())


def responses(stimuli_vector, concept_set: ConceptSet) -> np.ndarray:
    """Concept responses in concept-id order (all non-negative)."""
    return np.array([concept_response(stimuli_vector, c, concept_set.covariance)
                     for c in concept_set.concepts])


def response_matrix(stimuli, concept_set: ConceptSet) -> np.ndarray:
    return np.vstack([responses(s, concept_set) for s in stimuli])


@dataclass(frozen=True)
class SweepResult:
    """Grid evaluation of (cut time, min size) cells; NaN marks degenerate cells."""

    cut_times: tuple
    min_sizes: tuple
    mean_purity: np.ndarray       # (len(cut_times), len(min_sizes))
    mean_error: np.ndarray        # mean test error %, same shape
    concept_counts: np.ndarray = field(default=None)


def supervised_sweep(filtration: Filtration, cut_times, min_sizes,
                     classifier_params=None, protocol=None) -> SweepResult:
    """Cross-validate the concept parameter grid.

    For each cell, concepts are extracted, the trivial all-samples
    component is discarded, mean purity over the surviving concepts is
    recorded, and a linear classifier on the concept responses is
    cross-validated. Cells without usable concepts stay NaN.
    """
    from .evaluation import SplitProtocol, TrainParams, cross_validate

    classifier_params = classifier_params or TrainParams()
    protocol = protocol or SplitProtocol()
    stimuli = filtration.space.stimuli
    y = [s.category_label for s in stimuli]
    if any(lab is None for lab in y):
        raise MissingLabelError("sweep requires labeled stimuli")

    cut_times = tuple(cut_times)
    min_sizes = tuple(min_sizes)
    shape = (len(cut_times), len(min_sizes))
    pur = np.full(shape, math.nan)
    err = np.full(shape, math.nan)
    cnt = np.zeros(shape, dtype=np.int64)
    covariance = CovarianceModel.fit(filtration.space.matrix())

    for a, t in enumerate(cut_times):
        for b, m in enumerate(min_sizes):
            cs = extract_concepts(filtration, t, m, covariance=covariance)
            usable = tuple(c for c in cs.concepts if c.size < len(stimuli))
            cnt[a, b] = len(usable)
            if not usable:
                continue
            pur[a, b] = float(np.mean([purity(c) for c in usable]))
            cs_usable = ConceptSet(usable, t, m, covariance)
            X = response_matrix(stimuli, cs_usable)
            result = cross_validate(X, y, classifier_params, protocol)
            err[a, b] = result.overall
    return SweepResult(cut_times, min_sizes, pur, err, cnt)
