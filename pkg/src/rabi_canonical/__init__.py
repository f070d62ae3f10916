"""Canonical-form analysis of the Rabi model in the Bargmann-Fock representation."""
from .birkhoff import (
    CanonicalSystem,
    SystemDescriptor,
    TransformSeries,
    canonical_polynomials,
    recurrence_solve,
    verify_canonicalization,
)
from .errors import (
    ConvergenceError,
    DegenerateRationalError,
    KummerUndefinedError,
    NotEntireError,
    NotFoundError,
    NotNormalizedError,
    RabiCanonicalError,
    ResonanceError,
    SpuriousRootError,
)
from .juddian import (
    JuddianPoint,
    baseline_curve_n1,
    baseline_curve_n2,
    reconstruct_eigenfunction,
    solve_terminating,
    terminating_equations,
)
from .kummer import canonical_solution_pair, kummer_1f1
from .model import RabiParams, canonical_system, classify_solution_case, indicial_roots, initial_system
from .oracle import converged_spectrum, degeneracy_scan
from .series import (
    InversePowerSeries,
    LaurentMatrixSeries,
    PolynomialMatrix,
    laurent_expand_rational,
    matrix_series_invert,
    matrix_series_multiply,
)

__version__ = "0.1.0"
