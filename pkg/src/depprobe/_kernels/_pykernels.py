"""Numpy implementation of the per-sentence numeric kernels.

This is the fallback backend when the compiled extension is unavailable;
both backends must return identical values up to floating-point noise.
All inputs are float64; ``labels`` entries of ``-1`` mark words excluded
from the cross-entropy term.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def distance_matrix(transformed: np.ndarray, eps: float) -> np.ndarray:
    """Pairwise smoothed L2 distances between the rows of ``transformed``."""
    sq = np.sum(transformed**2, axis=1)
    gram = transformed @ transformed.T
    squared = sq[:, None] + sq[None, :] - 2.0 * gram
    np.maximum(squared, 0.0, out=squared)
    np.fill_diagonal(squared, 0.0)  # clear rounding residue; d(h, h) = sqrt(eps)
    return np.sqrt(squared + eps)


def structural_loss_grad(transformed, gold_dist, eps):
    """Mean absolute distance error over all ordered word pairs.

    Returns ``(loss, grad)`` where ``grad`` is the derivative with respect
    to the transformed points (n-by-b). The i = j terms contribute a
    constant sqrt(eps) to the loss and nothing to the gradient.
    """
    n = transformed.shape[0]
    dist = distance_matrix(transformed, eps)
    residual = gold_dist - dist
    loss = np.abs(residual).sum() / (n * n)

    weight = np.sign(residual) / dist
    np.fill_diagonal(weight, 0.0)
    scale = -2.0 / (n * n)
    grad = scale * (weight.sum(axis=1)[:, None] * transformed - weight @ transformed)
    return loss, grad


def softmax_xent_loss_grad(logits, labels):
    """Mean cross-entropy over labeled words; label -1 excludes a word.

    Returns ``(loss, grad)`` with ``grad`` shaped like ``logits``. The mean
    is over included words only; with none included both are zero.
    """
    n, _ = logits.shape
    included = labels >= 0
    m = int(included.sum())
    grad = np.zeros_like(logits)
    if m == 0:
        return 0.0, grad

    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))

    rows = np.nonzero(included)[0]
    loss = -log_probs[rows, labels[rows]].sum() / m
    grad[rows] = probs[rows] / m
    grad[rows, labels[rows]] -= 1.0 / m
    return loss, grad


def depth_loss_grad(transformed, gold_depth):
    """Mean absolute error between squared row norms and gold depths."""
    n = transformed.shape[0]
    norms = np.sum(transformed**2, axis=1)
    residual = gold_depth - norms
    loss = np.abs(residual).sum() / n
    grad = (-2.0 / n) * np.sign(residual)[:, None] * transformed
    return loss, grad
