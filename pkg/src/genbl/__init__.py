"""Bayes linear adjustment with projection onto linear inequality constraints."""

from .adjustment import AdjustedBeliefs, adjust, adjust_sequential, adjusted_expectation, adjusted_variance
from .belief import (
    BeliefStructure,
    EigenFactorisation,
    ValidationReport,
    eigen_factorise,
    mahalanobis_sq,
    nearest_psd,
    sym_pseudo_inverse,
    validate,
)
from .constraints import (
    ConstraintSet,
    box,
    monotone_chain,
    monotone_partial,
    nonneg_cone,
    satisfies,
    second_difference,
)
from .errors import DimensionError, GBLError, InfeasibleError, PinnedInfeasibleError, ValidationError
from .genvar import (
    GeneralisedBeliefs,
    cantelli_shrink,
    constraint_discrepancy,
    generalise,
    generalised_variance,
    register_shrink,
)
from .kernels import KernelSpec, gram, gram_cross, haversine_km, kronecker_cov, matern52, product_kernel, sqexp
from .projection import ProjectionResult, kkt_residual, project, whitened_project

__version__ = "0.1.0"
