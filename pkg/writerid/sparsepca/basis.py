from dataclasses import dataclass, field
from os import path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionError, ExitCode, ParameterError, WriterIdError
from ..logging import mainLogger
from ..utils import read_json, write_json
from .elasticnet import ConvergenceError, fit_sparse_loading

DEFAULT_MAX_COMPONENTS = 64
DEFAULT_RIDGE = 1e-4
LAMBDA1_FRACTIONS = (0.01, 0.02, 0.05, 0.1, 0.2)
SPARSITY_RANGE = (0.5, 0.9)
ZERO_TOLERANCE = 1e-12


class DegenerateComponentError(WriterIdError):
    """Raised when an elastic-net loading is identically zero."""
    exit_code = ExitCode.FITTING


class FitError(WriterIdError):
    """Raised when more than half of the requested components are degenerate."""
    exit_code = ExitCode.FITTING


@dataclass(frozen=True)
class DataMatrix:
    """Fragment embeddings ``(N, D)`` with the column means removed when ``centered``."""
    values: np.ndarray
    means: np.ndarray
    centered: bool = True

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 2:
            raise DimensionError(f'Data matrix needs at least 2 rows, got shape {values.shape}')
        if not np.all(np.isfinite(values)):
            raise DimensionError('Data matrix contains NaN or infinite values')
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_rows(cls, rows, center: bool = True) -> 'DataMatrix':
        rows = np.asarray(rows, dtype=np.float64)
        means = rows.mean(axis=0) if center else np.zeros(rows.shape[1])
        return cls(rows - means, means, center)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


@dataclass
class SparseBasis:
    """Unit-norm sparse loadings ``(D, L)`` and the fit that produced them."""
    loadings: np.ndarray
    means: np.ndarray
    lam: float
    lam1: float
    sparsity: List[float] = field(default_factory=list)
    dropped: List[int] = field(default_factory=list)
    requested: int = 0

    @property
    def n_components(self) -> int:
        return self.loadings.shape[1]

    @property
    def n_features(self) -> int:
        return self.loadings.shape[0]

    @property
    def mean_sparsity(self) -> float:
        return float(np.mean(self.sparsity)) if self.sparsity else 0.0


@dataclass
class CoefficientMatrix:
    """Projection coefficients ``alpha`` ``(N, L)``, one row per fragment."""
    alpha: np.ndarray
    writer_ids: Optional[Sequence] = None
    fragment_index: Optional[Sequence[int]] = None

    @property
    def n_components(self) -> int:
        return self.alpha.shape[1]


def default_components(n_features: int) -> int:
    return max(1, min(DEFAULT_MAX_COMPONENTS, n_features // 4))


def svd_principal_targets(X: DataMatrix, L: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Leading ``L`` principal targets ``Z = XV``, loadings ``V`` and all singular values of ``X``.

    Each loading column is sign-flipped so that its first non-zero entry is positive.
    """
    values = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=np.float64)
    n_rows, n_features = values.shape
    if L < 1 or L > min(n_rows, n_features):
        raise ParameterError(f'Cannot extract {L} components from a {n_rows}x{n_features} matrix')
    _, singular_values, vt = np.linalg.svd(values, full_matrices=False)
    V = vt[:L].T.copy()
    for k in range(L):
        nonzero = np.flatnonzero(np.abs(V[:, k]) > ZERO_TOLERANCE)
        if nonzero.size and V[nonzero[0], k] < 0:
            V[:, k] = -V[:, k]
    return values @ V, V, singular_values


def normalize_loading(beta: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    norm = np.linalg.norm(beta)
    if norm == 0:
        raise DegenerateComponentError('Sparse loading is identically zero')
    return beta / norm


def fit_basis(X: DataMatrix, L: Optional[int] = None, lam: float = DEFAULT_RIDGE, lam1: float = 0.0,
              executor=None) -> SparseBasis:
    """Fit ``L`` sparse loadings, one elastic-net regression per fixed SVD target.

    Components whose loading vanishes are dropped and reported.

    Arguments:
        executor: optional ``Executor`` (anything with ``map``) fitting components in parallel;
            results are collected in component order.

    Raises:
        FitError: more than ``L / 2`` components are degenerate.
    """
    if not isinstance(X, DataMatrix):
        X = DataMatrix(np.asarray(X, dtype=np.float64), np.zeros(np.shape(X)[1]), centered=False)
    L = default_components(X.shape[1]) if L is None else L
    Z, _, _ = svd_principal_targets(X, L)
    gram = X.values.T @ X.values

    def fit_component(k: int) -> np.ndarray:
        return fit_sparse_loading(X.values, Z[:, k], lam, lam1, gram=gram).beta

    mapper = executor.map if executor is not None else map
    betas: Iterable[np.ndarray] = list(mapper(fit_component, range(L)))

    columns, sparsity, dropped = [], [], []
    for k, beta in enumerate(betas):
        try:
            column = normalize_loading(beta)
        except DegenerateComponentError:
            mainLogger.warning('Sparse component %d is degenerate and was dropped', k)
            dropped.append(k)
            continue
        columns.append(column)
        sparsity.append(float(np.mean(np.abs(column) <= ZERO_TOLERANCE)))
    if len(dropped) > L / 2:
        raise FitError(f'{len(dropped)} of {L} sparse components are degenerate')
    loadings = np.stack(columns, axis=1)
    mainLogger.info('Fitted %d sparse components (mean sparsity %.3f, lambda1=%g)',
                    loadings.shape[1], float(np.mean(sparsity)), lam1)
    return SparseBasis(loadings, X.means, lam, lam1, sparsity, dropped, L)


def lambda1_ceiling(X: DataMatrix, L: int) -> float:
    """Smallest ``lambda1`` zeroing every loading: ``2 max_k |X'Z_k|_inf``."""
    Z, _, _ = svd_principal_targets(X, L)
    return float(2.0 * np.abs(X.values.T @ Z).max())


def reconstruction_error(rows: np.ndarray, loadings: np.ndarray) -> float:
    """Relative error of projecting ``rows`` onto the span of the loadings."""
    projector = loadings @ np.linalg.pinv(loadings)
    residual = rows - rows @ projector
    denominator = np.linalg.norm(rows)
    return float(np.linalg.norm(residual) / denominator) if denominator > 0 else 0.0


def select_lambda1(X: DataMatrix, L: Optional[int] = None, lam: float = DEFAULT_RIDGE,
                   fractions: Sequence[float] = LAMBDA1_FRACTIONS, seed: int = 0,
                   sparsity_range: Tuple[float, float] = SPARSITY_RANGE, holdout: float = 0.2) -> float:
    """Pick ``lambda1`` from a grid of fractions of :func:`lambda1_ceiling`.

    Candidates are fitted on a random split of the rows and scored by reconstruction error on
    the held-out rows. The best candidate whose mean sparsity lies in ``sparsity_range`` wins;
    without one, the candidate nearest to the range is taken.
    """
    L = default_components(X.shape[1]) if L is None else L
    rng = np.random.default_rng(seed)
    order = rng.permutation(X.shape[0])
    n_holdout = max(1, int(round(holdout * X.shape[0])))
    held, train = order[:n_holdout], order[n_holdout:]
    if train.size < 2:
        raise ParameterError('Too few rows to hold out a validation split')
    train_matrix = DataMatrix(X.values[train], X.means, X.centered)
    L = min(L, train.size, X.shape[1])
    ceiling = lambda1_ceiling(train_matrix, L)

    low, high = sparsity_range
    scored = []
    for fraction in fractions:
        candidate = fraction * ceiling
        try:
            basis = fit_basis(train_matrix, L, lam, candidate)
        except (FitError, DegenerateComponentError, ConvergenceError) as ex:
            mainLogger.debug('lambda1=%g skipped: %s', candidate, ex)
            continue
        error = reconstruction_error(X.values[held], basis.loadings)
        distance = max(low - basis.mean_sparsity, basis.mean_sparsity - high, 0.0)
        scored.append((distance, error, candidate))
        mainLogger.debug('lambda1=%g: sparsity %.3f, held-out error %.4f', candidate, basis.mean_sparsity, error)
    if not scored:
        raise FitError('No lambda1 candidate produced a usable sparse basis')
    return min(scored)[2]


def project(X, basis: SparseBasis, center: bool = True) -> CoefficientMatrix:
    """``alpha = X V``; raw rows are centered with the basis means first unless ``center`` is off."""
    if isinstance(X, DataMatrix):
        rows = X.values
    else:
        rows = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if center:
            rows = rows - basis.means
    if rows.shape[1] != basis.n_features:
        raise DimensionError(f'Rows have {rows.shape[1]} features, basis expects {basis.n_features}')
    return CoefficientMatrix(rows @ basis.loadings)


def subsample_rows(n_rows: int, cap: int, seed: int) -> np.ndarray:
    """Sorted indices of at most ``cap`` rows drawn uniformly without replacement."""
    if cap <= 0 or cap >= n_rows:
        return np.arange(n_rows)
    return np.sort(np.random.default_rng(seed).choice(n_rows, cap, replace=False))


def save_basis(basis: SparseBasis, directory: str) -> None:
    basis.loadings.astype('<f8').tofile(path.join(directory, 'sparse_loadings.f64'))
    write_json({
        'L': basis.n_components,
        'requested': basis.requested,
        'D': basis.n_features,
        'lambda': basis.lam,
        'lambda1': basis.lam1,
        'means': basis.means,
        'sparsity': basis.sparsity,
        'dropped': basis.dropped,
    }, path.join(directory, 'sparse_basis.json'))


def load_basis(directory: str) -> SparseBasis:
    meta = read_json(path.join(directory, 'sparse_basis.json'))
    loadings = np.fromfile(path.join(directory, 'sparse_loadings.f64'), dtype='<f8')
    if loadings.size != meta['D'] * meta['L']:
        raise DimensionError(f'Sparse loadings hold {loadings.size} values, expected {meta["D"]}x{meta["L"]}')
    return SparseBasis(loadings.reshape(meta['D'], meta['L']), np.asarray(meta['means'], dtype=np.float64),
                       meta['lambda'], meta['lambda1'], meta['sparsity'], meta['dropped'], meta['requested'])
