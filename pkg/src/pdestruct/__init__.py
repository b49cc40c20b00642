"""Numerical verification of transport-equation solution structure.

Checks and constructs the representations ``f(x, y) = phi(k x - y)``,
``f = sum_i (x+y)**(i-1) phi_i(x-y)`` and ``f = phi(x+y) + psi(x-y)`` on
analytic catalog functions and grid-sampled data, together with regularity
diagnostics such as the Baire lambda-function and oscillation maps.
"""

from ._kernels import BACKEND
from .baire_lambda import LambdaField, lambda_1d, lambda_field, usc_violations
from .decomposition import (
    DecompositionResult,
    WaveSplit,
    decompose_dn,
    decompose_wave,
    extract_profile,
    reconstruct_dn,
    residual_first_order,
)
from .differencing import (
    d1_field,
    diff_quotient,
    directional_quotient,
    dn_apply,
    fd_partial,
    partial_ladder,
)
from .errors import (
    CatalogError,
    DegenerateInputError,
    DomainError,
    HypothesisViolation,
    NonDifferentiableError,
    NumericalError,
    PdeStructError,
    UnsupportedDimensionError,
    UnsupportedOrderError,
    ValidationError,
)
from .function_model import (
    Function2D,
    GridSample,
    GridSpec,
    Profile1D,
    Rect,
    catalog_get,
    catalog_names,
    eval2d,
    from_grid,
    linear_combination,
    load_grid,
    parse_function_spec,
    sample_grid,
)
from .regularity import (
    constancy_along_characteristics,
    constancy_pipeline,
    discontinuity_field,
    lipschitz_cover,
    nowhere_dense,
    oscillation,
)
from .vector_transport import (
    VectorMap,
    gateaux_residual,
    l_directional_derivative,
    probe_pairs,
    vector_catalog_get,
    verify_translation,
)

__version__ = "0.1.0"
