"""Spectral analysis and inverse reconstruction for Sturm-Liouville operators
with a frozen argument, ``-y'' + q(x) y(a) = lambda y`` on ``(0, pi)``."""

from .core import (
    asymptotic_rho,
    CaseError,
    CaseLabel,
    classify_case,
    ConstantFunction,
    FrozenK,
    FrozenSLError,
    Grid,
    Identity,
    Matrix,
    NotRealizableError,
    Potential,
    ProblemConfig,
    RootFindingError,
    Scalar,
    Spectrum,
    spectrum_residuals,
    WFunction,
)
from .forward import (
    CharFn,
    check_degeneration_spectrum,
    compute_spectrum,
    designated_indices,
    eval_delta_direct,
    eval_delta_W,
)
from .inverse import (
    extract_W,
    InverseOptions,
    isospectral_family,
    reconstruct_delta,
    recover_degenerate,
    recover_nondegenerate,
    solve_panelwise,
)
from .operators import (
    build_A,
    det_A_closed,
    solve_main_degenerate,
    solve_main_nondegenerate,
    w_from_q,
    w_from_q_matrix,
    w_from_q_piecewise,
)

__version__ = "0.1.0"
