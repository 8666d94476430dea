"""Dominant spectra of positive kernel operators.

Given a nonnegative kernel with a rank-one lower bound (a Doeblin-type
minorization), the dominant eigenvalue is the unique root of a scalar
Birman-Schwinger function built from the resolvent of the rank-one-
subtracted remainder.  The package computes that root, the eigenvector,
the left functional, and the rank-one spectral projection, and checks
everything against independent brute-force oracles.
"""

__version__ = "0.1.0"

from . import errors
from .change_of_measure import (
    MeasureChange,
    changed_space,
    conjugate_kernel,
    inverse_change,
    transform_schur,
    transport_function,
)
from .corrected_kernels import (
    BellExpansionReport,
    CorrectedKernelSequence,
    bell_polynomial,
    bell_polynomial_bruteforce,
    build_corrected_kernels,
    corrected_kernel_bell_form,
    corrected_kernel_bruteforce,
    moment_scalars,
    neumann_kernel_resolvent,
    neumann_tail_bound,
    rank_one_norm,
    variant_expansion,
    verify_bell_expansion,
    verify_resolvent_identity,
)
from .doeblin import (
    CertificateReport,
    MinorizationCertificate,
    NotFoundWithin,
    NotMinorizable,
    RankOneSplit,
    extract_minorization,
    load_certificate,
    positivity_improving_check,
    power_doeblin_search,
    rank_one_split,
    save_certificate,
    verify_certificate,
)
from .kernel_op import (
    Kernel,
    PowerIterationResult,
    SchurBound,
    SchurReport,
    apply,
    compose,
    constant_kernel,
    gaussian_kernel,
    growth_radius,
    iterate_kernel,
    kernel_from_csv,
    separable_kernel,
    spectral_radius_oracle,
    tight_schur_bound,
    verify_schur,
)
from .matrix_pf import (
    PeripheralReport,
    characteristic_polynomial,
    eigenvalues_via_charpoly,
    left_eigen_residual,
    pf_solve,
    power_doeblin_analyze,
)
from .measure import (
    GridFunction,
    MeasureSpace,
    WeightFunctional,
    make_counting_space,
    make_interval_space,
    pair,
    same_space,
)
from .mollified import (
    ConvergenceStudy,
    LiftedKernelState,
    Mollifier,
    convergence_study,
    kernel_space_norm,
    mollified_functional,
    mollified_recursion,
    point_recursion,
)
from .resolvent import (
    BirmanSchwingerEvaluator,
    RankOneOperator,
    fredholm_det_rank_one,
    rank_one_resolvent_apply,
    sherman_morrison_apply,
)
from .spectral import (
    DominanceReport,
    SpectralDiagnostics,
    SpectralResult,
    eigenfunction_from_residue,
    eigenfunction_series,
    find_dominant,
    series_term_norms,
    solve,
    spectral_projection,
    verify_dominance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
