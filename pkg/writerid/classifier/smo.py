"""Sequential minimal optimisation of the soft-margin SVM dual.

Minimises ``1/2 a'Qa - e'a`` with ``Q_ij = y_i y_j K_ij``, ``0 <= a_i <= C_i`` and ``y'a = 0``,
moving the maximal violating pair at every iteration.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, ParameterError
from ..logging import mainLogger

TAU = 1e-12


@dataclass
class DualSolution:
    alphas: np.ndarray
    bias: float
    iterations: int
    converged: bool


def _bias(alphas: np.ndarray, y: np.ndarray, C: np.ndarray, G: np.ndarray) -> float:
    yG = y * G
    at_upper = alphas >= C
    at_lower = alphas <= 0
    free = ~(at_upper | at_lower)
    if np.any(free):
        rho = yG[free].mean()
    else:
        upper_bounds = np.concatenate([yG[at_upper & (y < 0)], yG[at_lower & (y > 0)]])
        lower_bounds = np.concatenate([yG[at_upper & (y > 0)], yG[at_lower & (y < 0)]])
        ub = upper_bounds.min() if upper_bounds.size else np.inf
        lb = lower_bounds.max() if lower_bounds.size else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
    return float(-rho)


def solve_smo(K: np.ndarray, y: np.ndarray, C, tol: float = 1e-3, max_iter: int = 100_000) -> DualSolution:
    """Solve the dual on a precomputed kernel matrix.

    Arguments:
        K (numpy.ndarray): ``(n, n)`` kernel matrix.
        y (numpy.ndarray): labels in ``{-1, +1}``.
        C: scalar or per-sample box bound.
        tol (float): stop when the maximal KKT violation ``m - M`` drops below it.
        max_iter (int): iteration cap; reaching it logs a warning and returns the current iterate.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if K.shape != (n, n):
        raise DimensionError(f'Kernel matrix {K.shape} does not match {n} labels')
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ParameterError('Labels must be -1 or +1')
    C = np.broadcast_to(np.asarray(C, dtype=np.float64), (n,)).copy()
    if np.any(C <= 0):
        raise ParameterError('C must be positive')

    alphas = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K)
    positive = y > 0
    iterations, converged = 0, False
    while iterations < max_iter:
        below_upper = alphas < C
        above_lower = alphas > 0
        up = (positive & below_upper) | (~positive & above_lower)
        low = (positive & above_lower) | (~positive & below_upper)
        score = -y * G
        if not np.any(up) or not np.any(low):
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        violation = score[i] - score[j]
        if violation < tol:
            converged = True
            break

        curvature = max(diag[i] + diag[j] - 2.0 * K[i, j], TAU)
        step = violation / curvature
        step = min(step, C[i] - alphas[i] if y[i] > 0 else alphas[i])
        step = min(step, alphas[j] if y[j] > 0 else C[j] - alphas[j])
        alphas[i] += y[i] * step
        alphas[j] -= y[j] * step
        alphas[i] = min(max(alphas[i], 0.0), C[i])
        alphas[j] = min(max(alphas[j], 0.0), C[j])
        G += step * y * (K[:, i] - K[:, j])
        iterations += 1

    if not converged:
        mainLogger.warning('SMO stopped at the %d iteration cap before reaching tolerance %g', max_iter, tol)
    return DualSolution(alphas, _bias(alphas, y, C, G), iterations, converged)
