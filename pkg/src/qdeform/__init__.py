"""Deformed exponential families of states on finite matrix algebras.

Scalar calculus for ``phi(u) = u / (lam + u)`` lives in :mod:`qdeform.scalar`,
matrix functions in :mod:`qdeform.operators`, the normalization ``alpha`` and
the states built from it in :mod:`qdeform.states`, and the search for
operator-monotonicity counterexamples in :mod:`qdeform.monotonicity`.
"""

from .scalar import (
    ConvergenceError,
    DeformationParameter,
    DomainError,
    ScalarEvalConfig,
    exp_phi,
    exp_phi_derivative,
    log_exp_phi,
    log_phi,
    phi,
    scan_constant_C,
    secant_f,
)
from .operators import EigenSystem, apply_fn, eig_hermitian, loewner2_det
from .states import (
    Direction,
    FaithfulDensity,
    HypothesisError,
    NotCenteredError,
    NotFaithfulError,
    alpha_derivative,
    alpha_of,
    center_direction,
    escort,
    geodesic_sample,
    make_state,
    solve_alpha,
    verify_alpha_bounds,
)
from .monotonicity import (
    LoewnerCertificate,
    SearchConfig,
    SearchExhausted,
    build_counterexample,
    validate_certificate,
)

__version__ = "0.1.0"
