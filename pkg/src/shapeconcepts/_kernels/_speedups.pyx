# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot kernels.

Same contracts as shapeconcepts._kernels._pure; the histogram kernel bins
with the identical float expression so both backends agree bit-for-bit on
descriptors.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, fabs, log, log2, sqrt, M_PI

cnp.import_array()

BACKEND = "compiled"


cdef double _jsd_rows(const double[:, ::1] X, Py_ssize_t i,
                      const double[:, ::1] Y, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t k, d = X.shape[1]
    cdef double p, q, m, left = 0.0, right = 0.0, val
    for k in range(d):
        p = X[i, k]
        q = Y[j, k]
        m = 0.5 * (p + q)
        if p > 0.0:
            left += p * log2(p / m)
        if q > 0.0:
            right += q * log2(q / m)
    val = 0.5 * left + 0.5 * right
    if val < 0.0:
        val = 0.0
    if val > 1.0:
        val = 1.0
    return val


def jsd(p, q):
    """Base-2 Jensen-Shannon divergence of two L1-normalized vectors."""
    cdef cnp.ndarray[double, ndim=2] P = np.ascontiguousarray(p, dtype=np.float64).reshape(1, -1)
    cdef cnp.ndarray[double, ndim=2] Q = np.ascontiguousarray(q, dtype=np.float64).reshape(1, -1)
    if P.shape[1] != Q.shape[1]:
        raise ValueError(f"shape mismatch: ({P.shape[1]},) vs ({Q.shape[1]},)")
    return _jsd_rows(P, 0, Q, 0)


def jsd_matrix(X, Y=None):
    """Pairwise base-2 JSD between rows of X (and rows of Y, if given)."""
    cdef cnp.ndarray[double, ndim=2] A = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] B
    cdef Py_ssize_t i, j, n, m
    cdef double v
    cdef cnp.ndarray[double, ndim=2] out
    if Y is None:
        n = A.shape[0]
        out = np.zeros((n, n), dtype=np.float64)
        with nogil:
            for i in range(n - 1):
                for j in range(i + 1, n):
                    v = _jsd_rows(A, i, A, j)
                    out[i, j] = v
                    out[j, i] = v
        return out
    B = np.ascontiguousarray(Y, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"shape mismatch: rows of dim {A.shape[1]} vs {B.shape[1]}")
    n = A.shape[0]
    m = B.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    with nogil:
        for i in range(n):
            for j in range(m):
                out[i, j] = _jsd_rows(A, i, B, j)
    return out


def pair_feature_histogram(points, normals, pairs, int nbins=11):
    """Darboux-frame angle histogram over point pairs (see pure docstring)."""
    cdef cnp.ndarray[double, ndim=2] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] N = np.ascontiguousarray(normals, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=2] E = np.ascontiguousarray(pairs, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] hist = np.zeros(3 * nbins, dtype=np.float64)
    cdef Py_ssize_t k, npairs = E.shape[0]
    cdef Py_ssize_t ia, ib, s, t
    cdef double dx, dy, dz, dist
    cdef double ux, uy, uz, tx, ty, tz, dsx, dsy, dsz
    cdef double vx, vy, vz, vnorm, wx, wy, wz
    cdef double dot_i, dot_j, alpha, phi, theta
    cdef long long b
    cdef double nb = <double> nbins

    with nogil:
        for k in range(npairs):
            ia = E[k, 0]
            ib = E[k, 1]
            dx = P[ib, 0] - P[ia, 0]
            dy = P[ib, 1] - P[ia, 1]
            dz = P[ib, 2] - P[ia, 2]
            dist = sqrt(dx * dx + dy * dy + dz * dz)
            if dist <= 1e-12:
                continue
            dx /= dist
            dy /= dist
            dz /= dist
            dot_i = N[ia, 0] * dx + N[ia, 1] * dy + N[ia, 2] * dz
            dot_j = N[ib, 0] * dx + N[ib, 1] * dy + N[ib, 2] * dz
            if fabs(dot_j) > fabs(dot_i):
                s = ib
                t = ia
                dsx = -dx
                dsy = -dy
                dsz = -dz
            else:
                s = ia
                t = ib
                dsx = dx
                dsy = dy
                dsz = dz
            ux = N[s, 0]
            uy = N[s, 1]
            uz = N[s, 2]
            tx = N[t, 0]
            ty = N[t, 1]
            tz = N[t, 2]
            vx = dsy * uz - dsz * uy
            vy = dsz * ux - dsx * uz
            vz = dsx * uy - dsy * ux
            vnorm = sqrt(vx * vx + vy * vy + vz * vz)
            if vnorm <= 1e-12:
                continue
            vx /= vnorm
            vy /= vnorm
            vz /= vnorm
            wx = uy * vz - uz * vy
            wy = uz * vx - ux * vz
            wz = ux * vy - uy * vx

            alpha = vx * tx + vy * ty + vz * tz
            phi = ux * dsx + uy * dsy + uz * dsz
            theta = atan2(wx * tx + wy * ty + wz * tz,
                          ux * tx + uy * ty + uz * tz)

            b = <long long> ((alpha - (-1.0)) / 2.0 * nb)
            if b < 0:
                b = 0
            if b >= nbins:
                b = nbins - 1
            hist[b] += 1.0
            b = <long long> ((phi - (-1.0)) / 2.0 * nb)
            if b < 0:
                b = 0
            if b >= nbins:
                b = nbins - 1
            hist[nbins + b] += 1.0
            b = <long long> ((theta - (-M_PI)) / (2.0 * M_PI) * nb)
            if b < 0:
                b = 0
            if b >= nbins:
                b = nbins - 1
            hist[2 * nbins + b] += 1.0
    return hist


def tsne_kl_grad(P, Y):
    """KL divergence and exact gradient of a t-SNE embedding."""
    cdef cnp.ndarray[double, ndim=2] Pm = np.ascontiguousarray(P, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] Ym = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t n = Ym.shape[0]
    cdef cnp.ndarray[double, ndim=2] W = np.empty((n, n), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] grad = np.zeros((n, 2), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double d0, d1, w, s = 0.0, kl = 0.0, pij, qij, f, g0, g1

    with nogil:
        for i in range(n):
            W[i, i] = 0.0
            for j in range(i + 1, n):
                d0 = Ym[i, 0] - Ym[j, 0]
                d1 = Ym[i, 1] - Ym[j, 1]
                w = 1.0 / (1.0 + d0 * d0 + d1 * d1)
                W[i, j] = w
                W[j, i] = w
                s += 2.0 * w
        for i in range(n):
            g0 = 0.0
            g1 = 0.0
            for j in range(n):
                if i == j:
                    continue
                w = W[i, j]
                qij = w / s
                pij = Pm[i, j]
                if pij > 0.0:
                    kl += pij * log(pij / qij)
                f = 4.0 * (pij - qij) * w
                g0 += f * (Ym[i, 0] - Ym[j, 0])
                g1 += f * (Ym[i, 1] - Ym[j, 1])
            grad[i, 0] = g0
            grad[i, 1] = g1
    return kl, grad
