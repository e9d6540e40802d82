# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the per-sentence numeric kernels.

Mirrors ``_pykernels`` exactly; see that module for the contracts.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, sqrt

cnp.import_array()

BACKEND = "cython"


def distance_matrix(double[:, ::1] transformed, double eps):
    cdef Py_ssize_t n = transformed.shape[0]
    cdef Py_ssize_t b = transformed.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] dist = out
    cdef Py_ssize_t i, j, k
    cdef double acc, delta, value

    for i in range(n):
        dist[i, i] = sqrt(eps)
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(b):
                delta = transformed[i, k] - transformed[j, k]
                acc += delta * delta
            value = sqrt(acc + eps)
            dist[i, j] = value
            dist[j, i] = value
    return out


def structural_loss_grad(double[:, ::1] transformed, double[:, ::1] gold_dist,
                         double eps):
    cdef Py_ssize_t n = transformed.shape[0]
    cdef Py_ssize_t b = transformed.shape[1]
    cdef cnp.ndarray[double, ndim=2] grad_arr = np.zeros((n, b), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, delta, dist, residual, loss, coeff, scale

    loss = n * sqrt(eps)  # the i = j diagonal terms
    scale = -2.0 / (<double> n * <double> n)
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(b):
                delta = transformed[i, k] - transformed[j, k]
                acc += delta * delta
            dist = sqrt(acc + eps)
            residual = gold_dist[i, j] - dist
            loss += fabs(residual) + fabs(gold_dist[j, i] - dist)
            if residual > 0.0:
                coeff = scale / dist
            elif residual < 0.0:
                coeff = -scale / dist
            else:
                continue
            for k in range(b):
                delta = coeff * (transformed[i, k] - transformed[j, k])
                grad[i, k] += delta
                grad[j, k] -= delta
    return loss / (<double> n * <double> n), grad_arr


def softmax_xent_loss_grad(double[:, ::1] logits, long[::1] labels):
    cdef Py_ssize_t n = logits.shape[0]
    cdef Py_ssize_t l = logits.shape[1]
    cdef cnp.ndarray[double, ndim=2] grad_arr = np.zeros((n, l), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, k, m = 0
    cdef double best, total, loss = 0.0, inv_m

    for i in range(n):
        if labels[i] >= 0:
            m += 1
    if m == 0:
        return 0.0, grad_arr
    inv_m = 1.0 / m

    for i in range(n):
        if labels[i] < 0:
            continue
        best = logits[i, 0]
        for k in range(1, l):
            if logits[i, k] > best:
                best = logits[i, k]
        total = 0.0
        for k in range(l):
            total += exp(logits[i, k] - best)
        loss -= (logits[i, labels[i]] - best - log(total)) * inv_m
        for k in range(l):
            grad[i, k] = exp(logits[i, k] - best) / total * inv_m
        grad[i, labels[i]] -= inv_m
    return loss, grad_arr


def depth_loss_grad(double[:, ::1] transformed, double[::1] gold_depth):
    cdef Py_ssize_t n = transformed.shape[0]
    cdef Py_ssize_t c = transformed.shape[1]
    cdef cnp.ndarray[double, ndim=2] grad_arr = np.zeros((n, c), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, k
    cdef double norm, residual, loss = 0.0, coeff

    for i in range(n):
        norm = 0.0
        for k in range(c):
            norm += transformed[i, k] * transformed[i, k]
        residual = gold_depth[i] - norm
        loss += fabs(residual)
        if residual > 0.0:
            coeff = -2.0 / n
        elif residual < 0.0:
            coeff = 2.0 / n
        else:
            continue
        for k in range(c):
            grad[i, k] = coeff * transformed[i, k]
    return loss / n, grad_arr
