"""Unsupervised feature selection with an adaptive graph and l2,0 row sparsity."""
from .dataset import (DataMatrix, FormatError, StandardizationSpec, ValidationError,
                      apply_centering, load_matrix, save_matrix, standardize)
from .evaluation import EvalReport, accuracy, evaluate, hungarian_map, kmeans, nmi
from .graph import (GraphLaplacian, degree_matrix, graph_entropy_penalty, laplacian,
                    update_similarity)
from .solver import (NumericError, SelectionResult, SolverConfig, extract_selected,
                     global_objective, solve)
from .sparse_opt import (AmhihtConfig, AmhihtResult, amhiht_solve, hard_threshold_step,
                         regularized_objective, smooth_gradient, smooth_loss)
from .spectral import (SpectralAux, compute_aux, init_pseudo_labels,
                       orthogonality_residual, update_pseudo_labels)
from .synthetic import planted_clusters

__version__ = "0.1.0"
