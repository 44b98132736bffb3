from dataclasses import dataclass, field
from os import path
from typing import List, Optional, Sequence

import numpy as np
from scipy.stats import entropy

from ..errors import DimensionError, ParameterError
from ..logging import mainLogger
from ..utils import read_json, write_json
from .histograms import ComponentHistogramSet, build_histograms, fd_bin_edges

DEFAULT_EPSILON = 1e-6
WEIGHT_MODES = ('inverse', 'direct')


@dataclass
class DivergenceMatrix:
    """``matrix[i, j] = KL(p_i || p_j)`` for one component."""
    component: int
    matrix: np.ndarray


@dataclass
class SaliencyWeights:
    """Average divergence ``phi`` and weight ``w`` per component."""
    phi: np.ndarray
    w: np.ndarray
    bins: List[int] = field(default_factory=list)
    constant: List[bool] = field(default_factory=list)
    edges: List[np.ndarray] = field(default_factory=list)
    mode: str = 'inverse'

    def __len__(self):
        return len(self.w)


def kl_divergence(p, q, epsilon: float = DEFAULT_EPSILON) -> float:
    """Base-2 relative entropy of ``p`` from ``q`` after adding ``epsilon`` to every bin and renormalising."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise DimensionError(f'Distributions have different lengths: {p.size} != {q.size}')
    if epsilon < 0:
        raise ParameterError('epsilon must be non-negative')
    return float(entropy(p + epsilon, q + epsilon, base=2))


def divergence_matrix(hists: ComponentHistogramSet, epsilon: float = DEFAULT_EPSILON) -> DivergenceMatrix:
    n_writers = hists.n_writers
    if n_writers < 2:
        raise DimensionError(f'Divergence matrix needs at least 2 writers, got {n_writers}')
    matrix = np.zeros((n_writers, n_writers))
    for i in range(n_writers):
        for j in range(n_writers):
            if i != j:
                matrix[i, j] = kl_divergence(hists.probabilities[i], hists.probabilities[j], epsilon)
    return DivergenceMatrix(hists.component, matrix)


def average_divergence(divergences: DivergenceMatrix) -> float:
    matrix = divergences.matrix if isinstance(divergences, DivergenceMatrix) else np.asarray(divergences)
    n_writers = matrix.shape[0]
    if n_writers < 2:
        raise DimensionError('Average divergence needs at least 2 writers')
    off_diagonal = matrix.sum() - np.trace(matrix)
    return float(off_diagonal / (n_writers * (n_writers - 1)))


def significance_weights(phi, mode: str = 'inverse') -> SaliencyWeights:
    """Turn average divergences into component weights.

    ``inverse``: ``w = 1 / (1 + phi)``. ``direct``: ``w = (1 + phi) / (1 + max(phi))``, which
    ranks components the other way round. Both map into ``(0, 1]``.
    """
    phi = np.asarray(phi, dtype=np.float64).ravel()
    if np.any(phi < 0):
        raise ParameterError('Average divergences must be non-negative')
    if mode == 'inverse':
        w = 1.0 / (1.0 + phi)
    elif mode == 'direct':
        w = (1.0 + phi) / (1.0 + phi.max()) if phi.size else phi.copy()
    else:
        raise ParameterError(f'weight mode must be one of {WEIGHT_MODES}')
    return SaliencyWeights(phi, w, mode=mode)


def fit_saliency(alpha, writer_ids: Sequence, epsilon: float = DEFAULT_EPSILON, mode: str = 'inverse',
                 writers: Optional[Sequence] = None, executor=None) -> SaliencyWeights:
    """Component weights from the per-writer coefficient histograms of training fragments."""
    alpha = np.asarray(alpha, dtype=np.float64)

    def component(k: int):
        hists = build_histograms(alpha, writer_ids, k, fd_bin_edges(alpha[:, k]), writers)
        return average_divergence(divergence_matrix(hists, epsilon)), hists

    mapper = executor.map if executor is not None else map
    results = list(mapper(component, range(alpha.shape[1])))
    weights = significance_weights([phi for phi, _ in results], mode)
    weights.bins = [len(h.edges) - 1 for _, h in results]
    weights.constant = [bool(h.constant) for _, h in results]
    weights.edges = [h.edges for _, h in results]
    if any(weights.constant):
        mainLogger.warning('%d constant components carry no writer information', sum(weights.constant))
    return weights


def save_saliency(weights: SaliencyWeights, directory: str) -> None:
    write_json({
        'mode': weights.mode,
        'components': [
            {'k': k, 'phi': float(weights.phi[k]), 'w': float(weights.w[k]),
             'B': weights.bins[k] if weights.bins else None,
             'constant': weights.constant[k] if weights.constant else False,
             'edges': weights.edges[k] if weights.edges else None}
            for k in range(len(weights.w))
        ],
    }, path.join(directory, 'saliency.json'))


def load_saliency(directory: str) -> SaliencyWeights:
    meta = read_json(path.join(directory, 'saliency.json'))
    components = meta['components']
    return SaliencyWeights(phi=np.array([c['phi'] for c in components], dtype=np.float64),
                           w=np.array([c['w'] for c in components], dtype=np.float64),
                           bins=[c['B'] for c in components],
                           constant=[c['constant'] for c in components],
                           edges=[np.asarray(c['edges'], dtype=np.float64) if c['edges'] is not None else None
                                  for c in components],
                           mode=meta['mode'])
