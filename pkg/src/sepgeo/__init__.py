"""Geometric separability toolkit for bipartite density matrices."""

from .bipartite import (
    BipartiteState,
    PeresResult,
    PureProductState,
    SegmentMembership,
    partial_transpose,
    peres_check,
    product_embed,
    product_transform,
    segment_membership,
)
from .errors import (
    FailsPrecondition,
    IterationBudgetExceeded,
    NonConvergence,
    NotStrictlyPositive,
)
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    OperatorBasis,
    conjugate,
    entropy,
    hs_distance,
    hs_inner,
    matrix_from_json,
    matrix_to_json,
    maximally_mixed,
    spectral_decompose,
    su_basis,
    transpose,
)
from .qubit import (
    StandardForm,
    bar,
    boost,
    corner_decomposition,
    from_four_vector,
    octahedron_separable,
    schmidt_2x2,
    separable_2x2,
    standard_form_eigenvalues,
    to_four_vector,
)
from .schmidt import (
    SchmidtDecomposition,
    correlation_expand,
    hermitian_factorize,
    product_minimize,
    transform_to_schmidt,
)
from .solver import (
    BoundaryTrace,
    SeparableApproximation,
    boundary_trace,
    closest_separable,
    hull_project,
    max_product_overlap,
)
from .states import (
    SectionPlane,
    bell_state,
    builtin_plane,
    make_state,
    map_section,
    plane_through,
    ppt_entangled_3x3,
    werner_state,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
