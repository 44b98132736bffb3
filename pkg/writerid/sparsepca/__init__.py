from .elasticnet import ConvergenceError, LoadingFit, fit_sparse_loading, soft_threshold, objective
from .basis import DataMatrix, SparseBasis, CoefficientMatrix, DegenerateComponentError, FitError, \
    svd_principal_targets, normalize_loading, fit_basis, project, select_lambda1, lambda1_ceiling, \
    default_components, subsample_rows, save_basis, load_basis, reconstruction_error
