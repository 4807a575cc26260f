"""Pure numpy implementations of the hot kernels.

These are the fallback for :mod:`shapeconcepts._kernels._speedups`; both
backends implement the same contracts and are cross-checked in the test
suite. Keep the arithmetic here aligned with the Cython source — the
histogram kernel in particular must bin with the exact same float
expression so both backends produce identical descriptors.
"""

import numpy as np

BACKEND = "pure"


def jsd(p, q):
    """Base-2 Jensen-Shannon divergence of two L1-normalized vectors.

    Zero entries contribute nothing (0*log 0 := 0). The result is clamped
    to [0, 1] to absorb float roundoff at the boundaries.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    m = 0.5 * (p + q)
    pm = p > 0.0
    qm = q > 0.0
    left = float(np.sum(p[pm] * np.log2(p[pm] / m[pm])))
    right = float(np.sum(q[qm] * np.log2(q[qm] / m[qm])))
    val = 0.5 * left + 0.5 * right
    return min(1.0, max(0.0, val))


def _jsd_row_block(row, block):
    """JSD of one distribution against each row of a block."""
    m = 0.5 * (row[None, :] + block)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(row[None, :] > 0.0, row[None, :] * np.log2(row[None, :] / m), 0.0)
        right = np.where(block > 0.0, block * np.log2(block / m), 0.0)
    vals = 0.5 * left.sum(axis=1) + 0.5 * right.sum(axis=1)
    return np.clip(vals, 0.0, 1.0)


def jsd_matrix(X, Y=None):
    """Pairwise base-2 JSD between rows of X (and rows of Y, if given).

    Returns an (n, n) symmetric matrix for a single argument, otherwise
    the (n, m) cross matrix. Rows must already be L1-normalized.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if Y is None:
        n = X.shape[0]
        out = np.zeros((n, n), dtype=np.float64)
        for i in range(n - 1):
            vals = _jsd_row_block(X[i], X[i + 1:])
            out[i, i + 1:] = vals
            out[i + 1:, i] = vals
        return out
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    out = np.empty((X.shape[0], Y.shape[0]), dtype=np.float64)
    for i in range(X.shape[0]):
        out[i] = _jsd_row_block(X[i], Y)
    return out


def pair_feature_histogram(points, normals, pairs, nbins=11):
    """Accumulate the three Darboux-frame angle features of point pairs.

    For every pair (i, j) the source point is the one whose normal is more
    aligned with the connecting line; with u the source normal, d the unit
    vector source->target, v = norm(d x u) and w = u x v, the features are

        alpha = v . n_target        in [-1, 1]
        phi   = u . d               in [-1, 1]
        theta = atan2(w . n_target, u . n_target)   in [-pi, pi]

    each binned into ``nbins`` equal-width bins. Degenerate pairs
    (coincident points, d parallel to u) are skipped. Returns the
    concatenated (3 * nbins,) float64 count vector.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    pairs = np.ascontiguousarray(pairs, dtype=np.int64)
    hist = np.zeros(3 * nbins, dtype=np.float64)
    if pairs.size == 0:
        return hist

    pi = points[pairs[:, 0]]
    pj = points[pairs[:, 1]]
    d = pj - pi
    dist = np.sqrt((d * d).sum(axis=1))
    ok = dist > 1e-12
    d = d[ok]
    dist = dist[ok]
    ni = normals[pairs[ok, 0]]
    nj = normals[pairs[ok, 1]]
    dhat = d / dist[:, None]

    dot_i = (ni * dhat).sum(axis=1)
    dot_j = (nj * dhat).sum(axis=1)
    # source = endpoint whose normal is more parallel to the line; ties keep i
    swap = np.abs(dot_j) > np.abs(dot_i)
    u = np.where(swap[:, None], nj, ni)
    nt = np.where(swap[:, None], ni, nj)
    ds = np.where(swap[:, None], -dhat, dhat)

    v = np.cross(ds, u)
    vnorm = np.sqrt((v * v).sum(axis=1))
    ok2 = vnorm > 1e-12
    u, nt, ds, v = u[ok2], nt[ok2], ds[ok2], v[ok2] / vnorm[ok2, None]
    if u.shape[0] == 0:
        return hist
    w = np.cross(u, v)

    alpha = (v * nt).sum(axis=1)
    phi = (u * ds).sum(axis=1)
    theta = np.arctan2((w * nt).sum(axis=1), (u * nt).sum(axis=1))

    for k, (feat, lo, hi) in enumerate(
            ((alpha, -1.0, 1.0), (phi, -1.0, 1.0), (theta, -np.pi, np.pi))):
        b = ((feat - lo) / (hi - lo) * nbins).astype(np.int64)
        np.clip(b, 0, nbins - 1, out=b)
        hist[k * nbins:(k + 1) * nbins] = np.bincount(b, minlength=nbins)
    return hist


def tsne_kl_grad(P, Y):
    """KL divergence and its exact gradient for a t-SNE embedding.

    P is the (n, n) symmetric joint-probability matrix (zero diagonal),
    Y the (n, 2) embedding. Low-dimensional affinities use the Student-t
    kernel w_ij = 1 / (1 + ||y_i - y_j||^2). Returns (kl, grad) with
    grad_i = 4 * sum_j (p_ij - q_ij) * w_ij * (y_i - y_j).
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    n = Y.shape[0]
    diff0 = Y[:, None, 0] - Y[None, :, 0]
    diff1 = Y[:, None, 1] - Y[None, :, 1]
    w = 1.0 / (1.0 + diff0 * diff0 + diff1 * diff1)
    np.fill_diagonal(w, 0.0)
    s = w.sum()
    Q = w / s

    mask = (~np.eye(n, dtype=bool)) & (P > 0.0)
    kl = float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))

    pqw = (P - Q) * w
    grad = np.empty_like(Y)
    grad[:, 0] = 4.0 * (pqw * diff0).sum(axis=1)
    grad[:, 1] = 4.0 * (pqw * diff1).sum(axis=1)
    return kl, grad
