import struct
from dataclasses import dataclass, field
from os import path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.metrics.pairwise import euclidean_distances
from sklearn.model_selection import StratifiedKFold

from ..errors import DimensionError, ExitCode, ParameterError, WriterIdError
from ..logging import mainLogger
from ..utils import mkdir
from .smo import solve_smo

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_GRID = ('scale', 0.01, 0.1, 1.0)
MODEL_MAGIC = b'WSVM'
MODEL_VERSION = 1
_HEADER = struct.Struct('<4sIIIIddd')

Gamma = Union[str, float]


class ClassifierError(WriterIdError):
    """Raised when writer models cannot be trained or read back."""
    exit_code = ExitCode.FITTING


@dataclass
class WeightedDescriptors:
    """Saliency-weighted coefficient rows ``Zhat = Z o w`` with one writer label per row."""
    Zhat: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.Zhat = np.atleast_2d(np.asarray(self.Zhat, dtype=np.float64))
        self.labels = np.asarray(self.labels)
        if self.Zhat.shape[0] != self.labels.shape[0]:
            raise DimensionError(f'{self.Zhat.shape[0]} descriptor rows but {self.labels.shape[0]} labels')

    @property
    def writers(self) -> List:
        return sorted(set(self.labels.tolist()))


@dataclass
class WriterModel:
    """One-vs-all RBF SVM of a single writer.

    ``alphas`` are the non-zero dual variables of the support vectors, ``labels`` their
    ``+1``/``-1`` targets.
    """
    writer_id: str
    support_vectors: np.ndarray
    alphas: np.ndarray
    labels: np.ndarray
    bias: float
    C: float
    gamma: float
    stats: Dict = field(default_factory=dict)

    @property
    def dual_coef(self) -> np.ndarray:
        return self.alphas * self.labels

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionError(f'Descriptor has {X.shape[1]} features, model `{self.writer_id}` '
                                 f'expects {self.n_features}')
        return rbf_kernel(X, self.support_vectors, self.gamma) @ self.dual_coef + self.bias


@dataclass(frozen=True)
class SvmGrid:
    C: Tuple[float, ...] = DEFAULT_C_GRID
    gamma: Tuple[Gamma, ...] = DEFAULT_GAMMA_GRID
    folds: int = 3
    tol: float = 1e-3
    max_iter: int = 100_000
    cv_max_samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.C or not self.gamma:
            raise ParameterError('SVM grid needs at least one C and one gamma')
        if any(c <= 0 for c in self.C):
            raise ParameterError('SVM C values must be positive')
        if any(g != 'scale' and (isinstance(g, str) or g <= 0) for g in self.gamma):
            raise ParameterError("SVM gamma values must be positive or 'scale'")
        if self.folds < 2:
            raise ParameterError('SVM cross-validation needs at least 2 folds')


def rbf_kernel(X: np.ndarray, Y: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * euclidean_distances(X, Y, squared=True))


def resolve_gamma(gamma: Gamma, X: np.ndarray) -> float:
    """``'scale'`` is ``1 / (n_features * var(X))``."""
    if gamma != 'scale':
        return float(gamma)
    variance = float(np.asarray(X).var())
    return 1.0 / (X.shape[1] * variance) if variance > 0 else 1.0


def class_weighted_C(C: float, y: np.ndarray) -> np.ndarray:
    """Per-sample box bound; negatives get ``C * n_pos / n_neg``."""
    n_pos = int(np.sum(y > 0))
    n_neg = int(np.sum(y < 0))
    return np.where(y > 0, C, C * n_pos / max(n_neg, 1))


def fit_binary(X: np.ndarray, y: np.ndarray, C: float, gamma: float, tol: float = 1e-3,
               max_iter: int = 100_000, sq_distances: Optional[np.ndarray] = None):
    D2 = euclidean_distances(X, squared=True) if sq_distances is None else sq_distances
    solution = solve_smo(np.exp(-gamma * D2), y, class_weighted_C(C, y), tol, max_iter)
    support = solution.alphas > 0
    return solution, support


def _decision(X_train, y, solution, support, gamma, X):
    return rbf_kernel(X, X_train[support], gamma) @ (solution.alphas[support] * y[support]) + solution.bias


def _ordered_grid(grid: SvmGrid, X: np.ndarray) -> List[Tuple[float, float]]:
    gammas = sorted({resolve_gamma(g, X) for g in grid.gamma})
    return [(float(c), g) for c in sorted(grid.C) for g in gammas]


def _cv_subsample(y: np.ndarray, cap: int, seed: int) -> np.ndarray:
    if cap <= 0 or cap >= y.size:
        return np.arange(y.size)
    rng = np.random.default_rng(seed)
    chosen = []
    for label in (1.0, -1.0):
        members = np.flatnonzero(y == label)
        quota = max(1, int(round(cap * members.size / y.size)))
        chosen.append(rng.choice(members, min(quota, members.size), replace=False))
    return np.sort(np.concatenate(chosen))


def select_parameters(X: np.ndarray, y: np.ndarray, grid: SvmGrid, writer_id: str = '') -> Tuple[float, float, float]:
    """Grid search by stratified cross-validation accuracy; ties keep the smaller C, then gamma."""
    candidates = _ordered_grid(grid, X)
    rows = _cv_subsample(y, grid.cv_max_samples, grid.seed)
    X_cv, y_cv = X[rows], y[rows]
    n_pos, n_neg = int(np.sum(y_cv > 0)), int(np.sum(y_cv < 0))
    folds = min(grid.folds, n_pos, n_neg)
    if folds < grid.folds:
        mainLogger.warning('Writer %s: cross-validation reduced from %d to %d folds', writer_id, grid.folds, folds)
    if folds < 2:
        C, gamma = candidates[0]
        mainLogger.warning('Writer %s: too few fragments per class to cross-validate; using C=%g gamma=%g',
                           writer_id, C, gamma)
        return C, gamma, float('nan')

    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=grid.seed)
    D2 = euclidean_distances(X_cv, squared=True)
    best = (-1.0, None)
    for C, gamma in candidates:
        correct = 0
        for train, test in splitter.split(X_cv, y_cv):
            solution, support = fit_binary(X_cv[train], y_cv[train], C, gamma, grid.tol, grid.max_iter,
                                           D2[np.ix_(train, train)])
            predicted = np.where(_decision(X_cv[train], y_cv[train], solution, support, gamma, X_cv[test]) >= 0,
                                 1.0, -1.0)
            correct += int(np.sum(predicted == y_cv[test]))
        accuracy = correct / y_cv.size
        if accuracy > best[0]:
            best = (accuracy, (C, gamma))
    (C, gamma), accuracy = best[1], best[0]
    return C, gamma, accuracy


def train_writer_model(data: WeightedDescriptors, writer_id, grid: SvmGrid = SvmGrid()) -> WriterModel:
    X = data.Zhat
    y = np.where(data.labels == writer_id, 1.0, -1.0)
    C, gamma, cv_accuracy = select_parameters(X, y, grid, str(writer_id))
    solution, support = fit_binary(X, y, C, gamma, grid.tol, grid.max_iter)
    training_accuracy = float(np.mean(
        np.where(_decision(X, y, solution, support, gamma, X) >= 0, 1.0, -1.0) == y))
    stats = {'n_pos': int(np.sum(y > 0)), 'n_neg': int(np.sum(y < 0)), 'n_sv': int(support.sum()),
             'iterations': solution.iterations, 'converged': solution.converged,
             'cv_accuracy': cv_accuracy, 'training_accuracy': training_accuracy}
    mainLogger.debug('Writer %s: C=%g gamma=%g %s', writer_id, C, gamma, stats)
    return WriterModel(str(writer_id), X[support].copy(), solution.alphas[support].copy(), y[support].copy(),
                       solution.bias, C, gamma, stats)


def train_ovr_svm(data: WeightedDescriptors, grid: SvmGrid = SvmGrid(), executor=None) -> List[WriterModel]:
    """One RBF SVM per writer, that writer's fragments positive and all others negative.

    Models are returned in writer-id order.

    Raises:
        ClassifierError: fewer than 2 writers, or a writer with fewer than 2 fragments.
    """
    writers = data.writers
    if len(writers) < 2:
        raise ClassifierError(f'One-vs-all training needs at least 2 writers, got {len(writers)}')
    counts = {w: int(np.sum(data.labels == w)) for w in writers}
    sparse = [w for w, n in counts.items() if n < 2]
    if sparse:
        raise ClassifierError(f'Writers with fewer than 2 fragments: {sparse}')
    mapper = executor.map if executor is not None else map
    return list(mapper(lambda w: train_writer_model(data, w, grid), writers))


def save_models(models: Sequence[WriterModel], directory: str) -> List[str]:
    svm_dir = path.join(directory, 'svm')
    mkdir(svm_dir)
    files = []
    for model in models:
        writer_id = model.writer_id.encode('utf-8')
        n_sv, n_features = model.support_vectors.shape
        file_name = path.join(svm_dir, f'writer_{model.writer_id}.bin')
        with open(file_name, 'wb') as fp:
            fp.write(_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, len(writer_id), n_sv, n_features,
                                  model.bias, model.C, model.gamma))
            fp.write(writer_id)
            fp.write(model.support_vectors.astype('<f8').tobytes())
            fp.write(model.alphas.astype('<f8').tobytes())
            fp.write(model.labels.astype('<f8').tobytes())
        files.append(file_name)
    return files


def load_model(file_name: str) -> WriterModel:
    with open(file_name, 'rb') as fp:
        payload = fp.read()
    if len(payload) < _HEADER.size:
        raise ClassifierError(f'Truncated writer model `{file_name}`')
    magic, version, id_length, n_sv, n_features, bias, C, gamma = _HEADER.unpack_from(payload)
    if magic != MODEL_MAGIC or version != MODEL_VERSION:
        raise ClassifierError(f'`{file_name}` is not a version {MODEL_VERSION} writer model')
    offset = _HEADER.size
    writer_id = payload[offset:offset + id_length].decode('utf-8')
    offset += id_length
    values = np.frombuffer(payload, dtype='<f8', offset=offset)
    if values.size != n_sv * n_features + 2 * n_sv:
        raise ClassifierError(f'Writer model `{file_name}` holds {values.size} values')
    support_vectors = values[:n_sv * n_features].reshape(n_sv, n_features).astype(np.float64)
    alphas = values[n_sv * n_features:n_sv * (n_features + 1)].astype(np.float64)
    labels = values[n_sv * (n_features + 1):].astype(np.float64)
    return WriterModel(writer_id, support_vectors, alphas, labels, bias, C, gamma)


def load_models(directory: str, writer_ids: Sequence[str]) -> List[WriterModel]:
    return [load_model(path.join(directory, 'svm', f'writer_{w}.bin')) for w in writer_ids]
