"""Numerical toolkit for p-approximate Schauder frames on finite-dimensional l^p spaces."""

__version__ = "0.1.0"

from .config import DEFAULT_TOL, Tolerances
from .sip import SipSpace, verify_sip_axioms
from .operators import NotInvertibleError, AdjointMap, generalized_adjoint_apply, invert, pnorm_estimate
from .frames import (
    PASF,
    FrameReport,
    IndexSet,
    analysis_apply,
    basis_pasf,
    canonical_dual,
    certify,
    certify_many,
    extremal_pasf,
    frame_operator,
    load_frame,
    parsevalize,
    partial_frame_operator,
    random_pasf,
    save_frame,
    synthesis_apply,
)
from .identities import (
    NotParsevalError,
    general_identity_sides,
    hilbert_suite,
    lemma_uv_check,
    lower_bound_eval,
    operator_identity_residual,
    parseval_identity_sides,
)
from .search import SearchConfig, find_hypothesis_violation, minimize_ratio
from .estimator import FrameTransformer
