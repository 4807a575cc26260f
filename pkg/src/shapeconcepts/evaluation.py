"""Supervised evaluation tools: linear max-margin classification with
repeated stratified splits, an exact t-SNE embedding of concept-response
space, and the majority-label region grid used to visualize it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import tsne_kl_grad
from .errors import (DimensionMismatchError, InsufficientDataError,
                     InvalidParameterError)


# ---------------------------------------------------------------------------
# one-vs-rest hinge-loss linear classifier

@dataclass(frozen=True)
class TrainParams:
    epochs: int = 300
    step_size: float = 0.5
    regularization: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class LinearClassifier:
    classes: tuple
    weights: np.ndarray     # (n_classes, dim)
    biases: np.ndarray      # (n_classes,)
    params: TrainParams

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.weights.shape[1]:
            raise DimensionMismatchError(
                f"features dim {X.shape[1]} vs weights {self.weights.shape[1]}")
        return X @ self.weights.T + self.biases

    def predict(self, X) -> list:
        scores = self.decision(X)
        return [self.classes[k] for k in np.argmax(scores, axis=1)]


def train_classifier(X, y, params: TrainParams = TrainParams()) -> LinearClassifier:
    """One-vs-rest hinge loss by seeded stochastic subgradient descent.

    Deterministic per seed; prediction is the argmax class score with
    ties going to the lexicographically smaller label (classes are kept
    sorted, argmax takes the first maximum).
    """
    X = np.asarray(X, dtype=np.float64)
    y = list(y)
    classes = tuple(sorted(set(y)))
    if len(classes) < 2:
        raise InvalidParameterError("classification needs at least 2 classes")
    n, dim = X.shape
    weights = np.zeros((len(classes), dim))
    biases = np.zeros(len(classes))
    y_arr = np.array(y, dtype=object)
    for c, cls in enumerate(classes):
        target = np.where(y_arr == cls, 1.0, -1.0)
        rng = np.random.default_rng([params.seed, c])
        w = np.zeros(dim)
        b = 0.0
        t = 0
        for _ in range(params.epochs):
            for i in rng.permutation(n):
                t += 1
                eta = params.step_size / (1.0 + params.step_size
                                          * params.regularization * t)
                margin = target[i] * (w @ X[i] + b)
                w *= (1.0 - eta * params.regularization)
                if margin < 1.0:
                    w += eta * target[i] * X[i]
                    b += eta * target[i]
        weights[c] = w
        biases[c] = b
    return LinearClassifier(classes, weights, biases, params)


# ---------------------------------------------------------------------------
# repeated stratified cross-validation

@dataclass(frozen=True)
class SplitProtocol:
    split_ratio: float = 0.75
    repetitions: int = 5
    seed: int = 0


@dataclass(frozen=True)
class CrossValResult:
    per_class: dict          # label -> mean test error %
    overall: float           # mean pooled test error %
    repetitions: int


def stratified_split(y, split_ratio: float, rng):
    """Per-class shuffled train/test index split."""
    y = np.asarray(y, dtype=object)
    train_idx, test_idx = [], []
    for cls in sorted(set(y.tolist())):
        idx = np.flatnonzero(y == cls)
        if idx.size < 2:
            raise InsufficientDataError(
                f"category {cls!r} has {idx.size} sample(s); cannot stratify")
        idx = rng.permutation(idx)
        n_train = int(np.clip(round(split_ratio * idx.size), 1, idx.size - 1))
        train_idx.extend(idx[:n_train].tolist())
        test_idx.extend(idx[n_train:].tolist())
    return np.array(sorted(train_idx)), np.array(sorted(test_idx))


def cross_validate(X, y, params: TrainParams = TrainParams(),
                   protocol: SplitProtocol = SplitProtocol(),
                   classifier_factory=None) -> CrossValResult:
    """Mean per-class test error over repeated stratified splits."""
    X = np.asarray(X, dtype=np.float64)
    y = list(y)
    classes = sorted(set(y))
    factory = classifier_factory or (lambda Xt, yt: train_classifier(Xt, yt, params))
    per_class = {cls: [] for cls in classes}
    pooled = []
    for rep in range(protocol.repetitions):
        rng = np.random.default_rng([protocol.seed, rep])
        train_idx, test_idx = stratified_split(y, protocol.split_ratio, rng)
        model = factory(X[train_idx], [y[i] for i in train_idx])
        pred = model.predict(X[test_idx])
        truth = [y[i] for i in test_idx]
        wrong = np.array([p != t for p, t in zip(pred, truth)])
        pooled.append(100.0 * wrong.mean())
        for cls in classes:
            mask = np.array([t == cls for t in truth])
            per_class[cls].append(100.0 * wrong[mask].mean())
    return CrossValResult({cls: float(np.mean(v)) for cls, v in per_class.items()},
                          float(np.mean(pooled)), protocol.repetitions)


# ---------------------------------------------------------------------------
# exact t-SNE

@dataclass(frozen=True)
class Embedding2D:
    coords: np.ndarray       # (n, 2)
    kl: float                # objective value of the returned embedding


def _entropy_probs(d2_row, beta):
    p = np.exp(-d2_row * beta)
    s = p.sum()
    if s <= 0.0:
        return 0.0, np.zeros_like(p)
    p = p / s
    nz = p > 0
    h = float(-(p[nz] * np.log(p[nz])).sum())
    return h, p


def joint_probabilities(X, perplexity: float, tol: float = 1e-5,
                        max_tries: int = 64) -> np.ndarray:
    """Symmetrized t-SNE affinities with per-point bandwidth search.

    Each point's Gaussian bandwidth is binary-searched so the conditional
    distribution's entropy matches log(perplexity).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 4:
        raise InsufficientDataError("t-SNE needs at least 4 points")
    if not 0 < perplexity < n:
        raise InvalidParameterError("perplexity must be in (0, n_points)")
    sq = (X * X).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        row = np.delete(d2[i], i)
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(max_tries):
            h, p = _entropy_probs(row, beta)
            if abs(h - target) < tol:
                break
            if h > target:           # too spread out: sharpen
                lo = beta
                beta = beta * 2.0 if not np.isfinite(hi) else (beta + hi) / 2.0
            else:
                hi = beta
                beta = (lo + beta) / 2.0
        P[i] = np.insert(p, i, 0.0)
    P = (P + P.T) / (2.0 * n)
    P = np.maximum(P, 1e-12)
    np.fill_diagonal(P, 0.0)
    return P


def tsne(X, perplexity: float = 12.0, iterations: int = 500,
         step_size: float = 10.0, seed: int = 0, momentum_early: float = 0.5,
         momentum_late: float = 0.8, momentum_switch: int = 250) -> Embedding2D:
    """Exact t-SNE to two dimensions by momentum gradient descent.

    Deterministic per seed. The optimizer keeps the lowest-divergence
    iterate seen, so the returned embedding's KL never exceeds the
    initialization's. ``iterations=0`` returns the seeded initialization.
    """
    P = joint_probabilities(X, perplexity)
    n = P.shape[0]
    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, 1e-4, (n, 2))
    kl, grad = tsne_kl_grad(P, Y)
    best_kl, best_Y = kl, Y.copy()
    velocity = np.zeros_like(Y)
    for it in range(iterations):
        m = momentum_early if it < momentum_switch else momentum_late
        velocity = m * velocity - step_size * grad
        Y = Y + velocity
        kl, grad = tsne_kl_grad(P, Y)
        if kl < best_kl:
            best_kl, best_Y = kl, Y.copy()
    return Embedding2D(best_Y, float(best_kl))


# ---------------------------------------------------------------------------
# majority-label region grid

@dataclass(frozen=True)
class RegionGrid:
    xs: np.ndarray           # (resolution,) cell center x coordinates
    ys: np.ndarray           # (resolution,)
    labels: np.ndarray       # (resolution, resolution) object array
    weights: np.ndarray      # (resolution, resolution) in [0, 1]
    k: int


def region_grid(embedding: Embedding2D, labels, k_fraction: float = 0.05,
                resolution: int = 100) -> RegionGrid:
    """Color a uniform grid by the majority label of each cell's neighbors.

    Per cell center, the k = ceil(k_fraction * n) nearest instances vote;
    the cell takes the majority label (ties: lexicographically smallest)
    weighted by the majority's proportion of the k votes. Grid bounds are
    the embedding bounding box padded by 5%.
    """
    coords = np.asarray(embedding.coords, dtype=np.float64)
    labels = list(labels)
    n = coords.shape[0]
    if len(labels) != n:
        raise DimensionMismatchError(f"{len(labels)} labels for {n} points")
    if not 0.0 < k_fraction <= 1.0:
        raise InvalidParameterError("k_fraction must be in (0, 1]")
    if resolution < 2:
        raise InvalidParameterError("resolution must be >= 2")
    k = int(np.ceil(k_fraction * n))
    if k > n:
        raise InvalidParameterError(f"k={k} exceeds the {n} instances")

    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    pad = 0.05 * np.where(hi > lo, hi - lo, 1.0)
    xs = np.linspace(lo[0] - pad[0], hi[0] + pad[0], resolution)
    ys = np.linspace(lo[1] - pad[1], hi[1] + pad[1], resolution)

    out_labels = np.empty((resolution, resolution), dtype=object)
    out_weights = np.zeros((resolution, resolution))
    for a, cx in enumerate(xs):
        for b, cy in enumerate(ys):
            d2 = (coords[:, 0] - cx) ** 2 + (coords[:, 1] - cy) ** 2
            nearest = np.argsort(d2, kind="stable")[:k]
            counts = {}
            for idx in nearest:
                lab = labels[idx]
                counts[lab] = counts.get(lab, 0) + 1
            best = max(sorted(counts), key=lambda lab: counts[lab])
            out_labels[a, b] = best
            out_weights[a, b] = counts[best] / k
    return RegionGrid(xs, ys, out_labels, out_weights, k)
