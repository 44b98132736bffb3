from dataclasses import dataclass
from math import ceil, log2
from typing import List, Optional, Sequence

import numpy as np

from ..errors import DimensionError, ParameterError
from ..logging import mainLogger


@dataclass(frozen=True)
class BinEdges:
    edges: np.ndarray
    constant: bool = False
    rule: str = 'freedman-diaconis'

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1


@dataclass
class ComponentHistogramSet:
    """Per-writer histograms of one component over shared edges.

    ``counts`` and ``probabilities`` are ``(W, B)``; row ``i`` belongs to ``writers[i]``.
    """
    component: int
    edges: np.ndarray
    writers: List
    counts: np.ndarray
    probabilities: np.ndarray
    constant: bool = False

    @property
    def n_writers(self) -> int:
        return len(self.writers)


def fd_bin_edges(values) -> BinEdges:
    """Freedman-Diaconis bin edges spanning ``[min, max]``.

    ``width = 2 IQR n^(-1/3)``, ``B = ceil((max - min) / width)``; quartiles use linear
    interpolation. A zero IQR falls back to Sturges (``ceil(log2 n) + 1`` bins); constant
    values give one bin of unit width centred on the value, flagged ``constant``.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size < 2:
        raise ParameterError('Freedman-Diaconis binning needs at least 2 values')
    low, high = float(values.min()), float(values.max())
    if low == high:
        return BinEdges(np.array([low - 0.5, low + 0.5]), constant=True, rule='constant')
    n = values.size
    q25, q75 = np.percentile(values, [25, 75])
    iqr = q75 - q25
    if iqr > 0:
        width = 2.0 * iqr / np.cbrt(n)
        n_bins, rule = max(1, int(ceil((high - low) / width))), 'freedman-diaconis'
    else:
        n_bins, rule = int(ceil(log2(n))) + 1, 'sturges'
    return BinEdges(np.linspace(low, high, n_bins + 1), rule=rule)


def bin_index(values, edges: np.ndarray) -> np.ndarray:
    """Half-open ``h_b <= v < h_(b+1)`` assignment, last bin closed, outliers clamped."""
    index = np.searchsorted(edges, np.asarray(values, dtype=np.float64), side='right') - 1
    return np.clip(index, 0, len(edges) - 2)


def build_histograms(alpha, writer_ids: Sequence, k: int, edges: Optional[BinEdges] = None,
                     writers: Optional[Sequence] = None) -> ComponentHistogramSet:
    """Histogram column ``k`` of ``alpha`` per writer.

    Edges default to :func:`fd_bin_edges` over the pooled column. Writers listed in
    ``writers`` without any row are excluded with a warning.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    writer_ids = np.asarray(writer_ids)
    if alpha.ndim != 2 or alpha.shape[0] != writer_ids.shape[0]:
        raise DimensionError(f'{alpha.shape[0]} coefficient rows but {writer_ids.shape[0]} writer labels')
    column = alpha[:, k]
    edges = fd_bin_edges(column) if edges is None else edges
    present = sorted(set(writer_ids.tolist()))
    if writers is None:
        writers = present
    else:
        missing = [w for w in writers if w not in set(present)]
        if missing:
            mainLogger.warning('Writers without fragments excluded from component %d histograms: %s', k, missing)
        writers = [w for w in writers if w not in set(missing)]

    index = bin_index(column, edges.edges)
    counts = np.zeros((len(writers), edges.n_bins), dtype=np.int64)
    for row, writer in enumerate(writers):
        counts[row] = np.bincount(index[writer_ids == writer], minlength=edges.n_bins)
    probabilities = counts / counts.sum(axis=1, keepdims=True)
    return ComponentHistogramSet(k, edges.edges, list(writers), counts, probabilities, edges.constant)
