"""Elastic-net regression by cyclic coordinate descent.

Minimises ``|z - X b|^2 + lambda |b|^2 + lambda1 |b|_1`` over ``b``, working on the Gram
matrix ``G = X'X`` and ``c = X'z``. Each coordinate update is a soft-threshold:

    b_j = S(c_j - sum_{k != j} G_jk b_k, lambda1 / 2) / (G_jj + lambda)
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import DimensionError, ExitCode, ParameterError, WriterIdError

TOLERANCE = 1e-8
MAX_SWEEPS = 10_000


class ConvergenceError(WriterIdError):
    """Raised when coordinate descent hits the sweep cap; carries the last iterate and residual."""
    exit_code = ExitCode.FITTING

    def __init__(self, message: str, beta: np.ndarray, residual: float):
        super().__init__(message)
        self.beta = beta
        self.residual = residual


@dataclass
class LoadingFit:
    beta: np.ndarray
    sweeps: int
    objectives: List[float] = field(default_factory=list)


def soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def objective(X: np.ndarray, z: np.ndarray, beta: np.ndarray, lam: float, lam1: float) -> float:
    residual = z - X @ beta
    return float(residual @ residual + lam * beta @ beta + lam1 * np.abs(beta).sum())


def fit_sparse_loading(X: np.ndarray, z: np.ndarray, lam: float, lam1: float, tol: float = TOLERANCE,
                       max_sweeps: int = MAX_SWEEPS, track_objective: bool = False,
                       gram: Optional[np.ndarray] = None) -> LoadingFit:
    """Elastic-net loading of target ``z`` on the columns of ``X``.

    Arguments:
        X (numpy.ndarray): ``(N, D)`` data.
        z (numpy.ndarray): ``(N,)`` target.
        lam (float): ridge penalty.
        lam1 (float): L1 penalty.
        tol (float): stop when the largest coordinate change of a sweep is below it.
        max_sweeps (int): sweep cap.
        track_objective (bool): record the objective after every sweep.
        gram (numpy.ndarray): precomputed ``X'X``, shared across targets.

    Raises:
        ConvergenceError: ``max_sweeps`` reached.
    """
    X = np.asarray(X, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != z.shape[0]:
        raise DimensionError(f'data shapes not aligned: {X.shape}, {z.shape}')
    if lam < 0 or lam1 < 0:
        raise ParameterError('lambda and lambda1 must be >= 0')
    if max_sweeps <= 0:
        raise ParameterError('max_sweeps must be > 0')

    G = X.T @ X if gram is None else gram
    c = X.T @ z
    denominators = np.diag(G) + lam
    n_features = X.shape[1]
    beta = np.zeros(n_features)
    fitted = np.zeros(n_features)
    objectives = []
    half_l1 = lam1 / 2.0

    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for j in range(n_features):
            old = beta[j]
            if denominators[j] <= 0:
                new = 0.0
            else:
                rho = c[j] - fitted[j] + G[j, j] * old
                new = soft_threshold(rho, half_l1) / denominators[j]
            if new != old:
                fitted += G[:, j] * (new - old)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        if track_objective:
            objectives.append(objective(X, z, beta, lam, lam1))
        if max_change < tol:
            return LoadingFit(beta, sweep, objectives)

    residual = float(np.linalg.norm(z - X @ beta))
    raise ConvergenceError(f'Coordinate descent did not converge in {max_sweeps} sweeps', beta, residual)
