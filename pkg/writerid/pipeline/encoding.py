"""Fragment descriptors and word scoring for the three descriptor modes."""

from typing import List, Optional, Sequence

import numpy as np

from ..classifier import ScoreVector, WriterModel, fuse_word, score_fragments, weight_descriptors
from ..errors import ParameterError
from ..saliency import SaliencyWeights
from ..sparsepca import SparseBasis, project
from .features import PatchSet

MODES = ('baseline', 'sparse', 'weighted')


def describe(embeddings, basis: Optional[SparseBasis] = None, saliency: Optional[SaliencyWeights] = None,
             mode: str = 'weighted') -> np.ndarray:
    """Raw embeddings (``baseline``), sparse coefficients (``sparse``) or saliency-weighted ones (``weighted``)."""
    if mode not in MODES:
        raise ParameterError(f'descriptor mode must be one of {MODES}')
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if mode == 'baseline':
        return embeddings
    alpha = project(embeddings, basis).alpha
    if mode == 'sparse':
        return alpha
    return weight_descriptors(alpha, saliency).Zhat


def score_words(models: Sequence[WriterModel], descriptors, patch_set: PatchSet) -> List[Optional[ScoreVector]]:
    """One fused score vector per word of ``patch_set``; ``None`` for words without fragments."""
    writers = [m.writer_id for m in models]
    scores = score_fragments(models, descriptors)
    word_index = patch_set.word_index
    fused = []
    for i, word in enumerate(patch_set.words):
        rows = scores[word_index == i]
        fused.append(fuse_word(rows, writers, word.word_id) if rows.shape[0] else None)
    return fused
