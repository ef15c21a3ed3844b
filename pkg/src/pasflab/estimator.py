"""scikit-learn compatible wrapper around a p-approximate Schauder frame."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_exponent, check_vectors
from .frames import PASF, canonical_dual, certify, frame_operator, parsevalize
from .sip import SipSpace


class FrameTransformer(TransformerMixin, BaseEstimator):
    """Analysis/synthesis pair of a frame on (K^d, l^p).

    ``fit`` takes the frame vectors ``tau_n`` as the rows of ``X``. The
    functionals are ``f_n(x) = [x, omega_n]`` with ``omega`` given at
    construction, or ``omega = tau`` when left as ``None``.

    ``transform`` applies the analysis map, ``inverse_transform``
    synthesises with the canonical dual, so
    ``inverse_transform(transform(X)) == X`` up to rounding.

    Parameters
    ----------
    p : float, default=2.0
        Exponent of the l^p space, ``1 < p < inf``.
    field : {"real", "complex"}, default="real"
    omega : array-like of shape (N, d), optional
        Representers of the analysis functionals.
    parseval : bool, default=False
        Replace ``tau_n`` by ``S^-1 tau_n`` after fitting so ``S = I``.
    restarts : int, default=8
        Random restarts for the norm-constant estimates.
    random_state : int, default=0
    max_condition : float, default=1e8
        ``fit`` refuses frames whose frame operator is worse conditioned.

    Attributes
    ----------
    frame_ : PASF
    dual_ : PASF
        Canonical dual frame.
    frame_operator_ : ndarray of shape (d, d)
    report_ : FrameReport
    analysis_bound_, synthesis_bound_ : float
        Lower bounds on the optimal constants ``c`` and ``d``.
    n_features_in_ : int
    n_components_ : int
        Number of frame elements ``N``.
    """

    def __init__(self, p=2.0, field="real", omega=None, parseval=False, restarts=8, random_state=0, max_condition=1e8):
        self.p = p
        self.field = field
        self.omega = omega
        self.parseval = parseval
        self.restarts = restarts
        self.random_state = random_state
        self.max_condition = max_condition

    def fit(self, X, y=None):
        p = check_exponent(self.p)
        tau = check_vectors(X, field=self.field)
        omega = tau if self.omega is None else check_vectors(self.omega, tau.shape[1], self.field, "omega")
        if omega.shape != tau.shape:
            raise ValueError(f"omega has shape {omega.shape}, X has shape {tau.shape}")
        F = PASF(SipSpace(tau.shape[1], p, self.field), omega, tau)
        report = certify(F, restarts=self.restarts, seed=self.random_state, max_condition=self.max_condition)
        if not report.certified:
            raise ValueError(f"frame operator is not invertible under the condition limit (condition {report.condition_S:.3g})")
        if self.parseval:
            F = parsevalize(F)
            report = certify(F, restarts=self.restarts, seed=self.random_state, max_condition=self.max_condition)
        self.frame_ = F
        self.dual_ = canonical_dual(F)
        self.frame_operator_ = frame_operator(F)
        self.report_ = report
        self.analysis_bound_ = report.c_estimate
        self.synthesis_bound_ = report.d_estimate
        self.n_features_in_ = tau.shape[1]
        self.n_components_ = tau.shape[0]
        return self

    def transform(self, X):
        """Frame coefficients ``[x, omega_n]``, shape (n_samples, N)."""
        check_is_fitted(self, "frame_")
        X = check_vectors(X, self.n_features_in_, self.field)
        return X @ self.frame_.space.duality_map(self.frame_.omega).T

    def inverse_transform(self, C):
        """Reconstruct ``sum_n c_n S^-1 tau_n``."""
        check_is_fitted(self, "frame_")
        C = np.asarray(C)
        if C.ndim != 2 or C.shape[1] != self.n_components_:
            raise ValueError(f"expected coefficients of shape (n, {self.n_components_}), got {C.shape}")
        if not np.all(np.isfinite(C)):
            raise ValueError("coefficients contain NaN or infinity")
        return C @ self.dual_.tau

    def synthesize(self, C):
        """Plain synthesis ``sum_n c_n tau_n`` (no dual)."""
        check_is_fitted(self, "frame_")
        return np.asarray(C) @ self.frame_.tau
