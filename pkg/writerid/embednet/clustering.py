import numpy as np
from sklearn.metrics import pairwise_distances

from ..errors import DimensionError, ExitCode, WriterIdError


class DegenerateClusterError(WriterIdError):
    """Raised when two cluster centroids coincide and the index ratio is infinite."""
    exit_code = ExitCode.EVALUATION


def davies_bouldin(embeddings, labels) -> float:
    """Davies-Bouldin index of labelled embeddings; lower means tighter, better separated clusters.

    ``mean_i max_{j != i} (s_i + s_j) / d(c_i, c_j)`` with ``s`` the mean distance of members
    to their centroid and ``d`` the Euclidean centroid distance.

    Raises:
        DimensionError: fewer than 2 clusters, or embeddings and labels disagree in length.
        DegenerateClusterError: two centroids coincide.
    """
    embeddings = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    labels = np.asarray(labels)
    if embeddings.shape[0] != labels.shape[0]:
        raise DimensionError(f'{embeddings.shape[0]} embeddings but {labels.shape[0]} labels')
    clusters = sorted(set(labels.tolist()))
    if len(clusters) < 2:
        raise DimensionError('Davies-Bouldin index needs at least 2 clusters')

    centroids = np.stack([embeddings[labels == c].mean(axis=0) for c in clusters])
    scatter = np.array([np.linalg.norm(embeddings[labels == c] - centroids[i], axis=1).mean()
                        for i, c in enumerate(clusters)])
    separation = pairwise_distances(centroids)
    np.fill_diagonal(separation, np.inf)
    if np.any(separation == 0):
        i, j = np.argwhere(separation == 0)[0]
        raise DegenerateClusterError(f'Clusters {clusters[i]} and {clusters[j]} have coincident centroids')
    ratios = (scatter[:, None] + scatter[None, :]) / separation
    return float(ratios.max(axis=1).mean())
