"""Triplet and contrastive ranking losses, as plain floats and as differentiable batch means."""

import numpy as np

from ..errors import DimensionError, ParameterError
from .tensor import Tensor, as_tensor, relu, sqrt, square

DISTANCE_EPSILON = 1e-12


def _pair(fa, fb):
    fa = np.asarray(fa, dtype=np.float64).ravel()
    fb = np.asarray(fb, dtype=np.float64).ravel()
    if fa.shape != fb.shape:
        raise DimensionError(f'Embedding lengths differ: {fa.size} != {fb.size}')
    return fa, fb


def triplet_loss(fa, fp, fn, margin: float = 0.2) -> float:
    """``max(|fa - fp|^2 - |fa - fn|^2 + margin, 0)``."""
    if margin < 0:
        raise ParameterError('margin must be non-negative')
    fa, fp = _pair(fa, fp)
    _, fn = _pair(fa, fn)
    return max(float(np.sum((fa - fp) ** 2) - np.sum((fa - fn) ** 2)) + margin, 0.0)


def contrastive_loss(fa, fb, same: bool, margin: float = 1.0) -> float:
    """``|fa - fb|^2`` for a matching pair, ``max(margin - |fa - fb|, 0)^2`` otherwise."""
    if margin <= 0:
        raise ParameterError('margin must be positive')
    fa, fb = _pair(fa, fb)
    distance = float(np.linalg.norm(fa - fb))
    if same:
        return distance ** 2
    return max(margin - distance, 0.0) ** 2


def batch_triplet_loss(anchors: Tensor, positives: Tensor, negatives: Tensor, margin: float = 0.2) -> Tensor:
    """Mean triplet loss over ``(B, D)`` embedding batches."""
    if not anchors.shape == positives.shape == negatives.shape:
        raise DimensionError(f'Triplet batch shapes differ: {anchors.shape}, {positives.shape}, {negatives.shape}')
    d_pos = square(anchors - positives).sum(axis=1)
    d_neg = square(anchors - negatives).sum(axis=1)
    return relu(d_pos - d_neg + margin).mean()


def batch_contrastive_loss(left: Tensor, right: Tensor, same, margin: float = 1.0) -> Tensor:
    """Mean contrastive loss over ``(B, D)`` pairs; ``same`` is a length-B boolean mask."""
    if left.shape != right.shape:
        raise DimensionError(f'Pair batch shapes differ: {left.shape}, {right.shape}')
    same = np.asarray(same, dtype=left.data.dtype)
    squared = square(left - right).sum(axis=1)
    hinge = square(relu(as_tensor(margin) - sqrt(squared + DISTANCE_EPSILON)))
    return (squared * same + hinge * (1.0 - same)).mean()
