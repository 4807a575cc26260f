"""Hierarchical visual-word dictionary via divisive 2-means clustering.

The descriptor corpus is split recursively: each node's member set is
divided by Lloyd 2-means (farthest-pair initialization, fully
deterministic), giving at most 2^f words at depth f. Nodes whose members
cannot be split (fewer than two, or all identical) become leaves whose
word stands in at every deeper level, so per-level labeling always works.
Word assignment descends the tree picking the closer child at each step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError, ModelStateError


@dataclass
class WordNode:
    word_id: int
    centroid: np.ndarray
    children: tuple = ()   # () or (WordNode, WordNode)
    depth: int = 0

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class Dictionary:
    """Binary tree of word centroids over descriptor space."""

    depth: int
    root: WordNode | None = None
    nodes: dict[int, WordNode] = field(default_factory=dict)
    seed: int = 0

    @property
    def is_trained(self) -> bool:
        return self.root is not None

    def level_words(self, level: int) -> list[int]:
        """Word ids available at a level: depth-f nodes plus shallower leaves."""
        if not self.is_trained:
            raise ModelStateError("dictionary is not trained")
        if not 1 <= level <= self.depth:
            raise InvalidParameterError(f"level must be in [1, {self.depth}]")
        out = [n.word_id for n in self.nodes.values()
               if n.depth == level or (n.is_leaf and n.depth < level)]
        return sorted(out)

    def assign(self, descriptor) -> tuple[int, ...]:
        """Word id at every level [1..depth] by nearest-child descent."""
        if not self.is_trained:
            raise ModelStateError("dictionary is not trained")
        d = np.asarray(descriptor, dtype=np.float64)
        node = self.root
        out = []
        for _ in range(self.depth):
            if not node.is_leaf:
                c0, c1 = node.children
                d0 = float(np.linalg.norm(d - c0.centroid))
                d1 = float(np.linalg.norm(d - c1.centroid))
                node = c1 if d1 < d0 else c0   # tie keeps the lower word id
            out.append(node.word_id)
        return tuple(out)


def assign_words(descriptor, dictionary: Dictionary) -> tuple[int, ...]:
    return dictionary.assign(descriptor)


def _farthest_pair(X):
    """Indices of the most distant member pair (first occurrence on ties)."""
    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d2, -1.0)
    flat = int(np.argmax(d2))
    i, j = divmod(flat, X.shape[0])
    return (i, j) if i < j else (j, i), float(max(d2[i, j], 0.0))


def _two_means(X, max_iter):
    """Deterministic Lloyd 2-means. Returns (labels, c0, c1) or None."""
    (i, j), gap = _farthest_pair(X)
    if gap <= 0.0:
        return None   # all members identical
    c0, c1 = X[i].copy(), X[j].copy()
    labels = None
    for _ in range(max(1, max_iter)):
        d0 = np.linalg.norm(X - c0, axis=1)
        d1 = np.linalg.norm(X - c1, axis=1)
        new = d1 < d0   # ties go to the first (lower-id) child
        if not new.any() or new.all():
            break       # a side emptied; keep the previous consistent state
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        c0 = X[~labels].mean(axis=0)
        c1 = X[labels].mean(axis=0)
    if labels is None:
        return None
    return labels, c0, c1


def train_dictionary(descriptors, depth: int, seed: int = 0,
                     max_iter: int = 100) -> Dictionary:
    """Train the word tree on a descriptor corpus.

    ``seed`` is recorded for provenance; the farthest-pair initialization
    makes training fully deterministic regardless of its value.
    """
    X = np.ascontiguousarray(descriptors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InsufficientDataError("empty descriptor corpus")
    if X.shape[0] < 2:
        raise InsufficientDataError("need at least 2 descriptors")
    if depth < 1:
        raise InvalidParameterError("depth must be >= 1")

    dictionary = Dictionary(depth=depth, seed=seed)
    root = WordNode(0, X.mean(axis=0), depth=0)
    dictionary.nodes[0] = root
    dictionary.root = root
    next_id = 1

    queue = [(root, np.arange(X.shape[0]))]
    while queue:
        node, members = queue.pop(0)
        if node.depth >= depth or members.size < 2:
            continue
        split = _two_means(X[members], max_iter)
        if split is None:
            continue
        labels, c0, c1 = split
        left = WordNode(next_id, c0, depth=node.depth + 1)
        right = WordNode(next_id + 1, c1, depth=node.depth + 1)
        next_id += 2
        node.children = (left, right)
        dictionary.nodes[left.word_id] = left
        dictionary.nodes[right.word_id] = right
        queue.append((left, members[~labels]))
        queue.append((right, members[labels]))
    return dictionary
