"""Scalable Gaussian processes: dense, graph-structured and Fourier backends."""

from .dense import (
    CholeskyGp,
    dense_inv_transform,
    dense_lpdf,
    dense_lpdf_grad,
    dense_whiten,
    gp_regression_posterior,
)
from .exceptions import BudgetExceeded, FactorizationError, UnsupportedParameterError, ValidationError
from .fourier import (
    TruncatedBasis,
    adjoint_inv_transform,
    coefficient_scales,
    fourier_inv_transform,
    fourier_lpdf,
    fourier_lpdf_grad,
    fourier_whiten,
    pack_rfft,
    pack_rfft2,
    pad_grid,
    truncated_inv_transform,
    unpack_rfft,
    unpack_rfft2,
)
from .graph import (
    DagGp,
    EdgeList,
    graph_inv_transform,
    graph_lpdf,
    graph_lpdf_grad_f,
    graph_whiten,
    nearest_neighbor_graph,
    parse_edge_list,
)
from .grid import MaskedGrid
from .kernels import (
    Kernel,
    Spectrum1D,
    Spectrum2D,
    cov_matrix,
    matern_cov,
    matern_spectrum_1d,
    matern_spectrum_2d,
    periodic_kernel_row,
    se_cov,
    se_spectrum_1d,
    se_spectrum_2d,
)

__version__ = "0.1.0"
