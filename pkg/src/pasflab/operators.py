"""Dense operators on coordinate spaces.

Matrices are plain numpy arrays. The generalized adjoint is nonlinear for
``p != 2`` and is therefore only exposed as a map (:class:`AdjointMap`),
never materialised as a matrix.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from .sip import SipSpace, lp_norm, make_rng, _weighted

PIVOT_RTOL = 1e-12


class NotInvertibleError(np.linalg.LinAlgError):
    """Raised when elimination meets a pivot below ``1e-12 * ||A||``."""

    def __init__(self, pivot: float, scale: float):
        self.pivot = float(pivot)
        self.scale = float(scale)
        super().__init__(f"not invertible: pivot {self.pivot:.3e} below {PIVOT_RTOL:g} * ||A|| = {PIVOT_RTOL * self.scale:.3e}")


def _square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def inf_norm(A: np.ndarray) -> float:
    """Max row-sum norm."""
    return float(np.abs(A).sum(axis=1).max()) if A.size else 0.0


def apply(A, x) -> np.ndarray:
    """Matrix-vector product ``A @ x`` (broadcast over leading axes of ``x``)."""
    A = np.asarray(A)
    x = np.asarray(x)
    if x.shape[-1] != A.shape[1]:
        raise ValueError(f"dimension mismatch: operator has {A.shape[1]} columns, vector has {x.shape[-1]} entries")
    return x @ A.T


def invert(A, refine: bool = False) -> Tuple[np.ndarray, float]:
    """Invert ``A`` by partial-pivot LU.

    Returns
    -------
    inverse : ndarray
    condition : float
        ``||A||_inf * ||A^-1||_inf``.

    Raises
    ------
    NotInvertibleError
        If some pivot falls below ``1e-12 * ||A||_inf``.
    """
    A = _square(A)
    scale = inf_norm(A)
    n = A.shape[0]
    if scale == 0.0:
        raise NotInvertibleError(0.0, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    k = int(np.argmin(pivots))
    if pivots[k] < PIVOT_RTOL * scale:
        raise NotInvertibleError(pivots[k], scale)
    eye = np.eye(n, dtype=A.dtype)
    inv = scipy.linalg.lu_solve((lu, piv), eye, check_finite=False)
    if refine:
        inv = inv + scipy.linalg.lu_solve((lu, piv), eye - A @ inv, check_finite=False)
    return inv, scale * inf_norm(inv)


def generalized_adjoint_apply(A, y, space: SipSpace) -> np.ndarray:
    """Koehler's generalized adjoint: the unique ``z`` with ``[Ax, y] = [x, z]`` for all ``x``.

    Computed as ``riesz(A^T J(y))``. The dual coordinates ``J(y)`` already
    carry the conjugation, so the transpose acting on them is the
    conjugate-transpose action on the functional; for ``p = 2`` the result
    is exactly ``A^H y``.
    """
    A = _square(A)
    if A.shape[0] != space.dim:
        raise ValueError(f"operator is {A.shape[0]}x{A.shape[0]}, space has dim {space.dim}")
    g = space.duality_map(y)
    return space.riesz_representer(g @ A)


class AdjointMap:
    """Lazy generalized adjoint ``A^dagger`` of a square matrix on ``space``."""

    def __init__(self, A, space: SipSpace):
        self.A = _square(A)
        self.space = space

    def __call__(self, y) -> np.ndarray:
        return generalized_adjoint_apply(self.A, y, self.space)

    def __repr__(self):
        return f"AdjointMap(dim={self.space.dim}, p={self.space.p:g})"


class NormEstimate(NamedTuple):
    value: float
    witness: np.ndarray
    converged: bool


def _ratio(A, x, p_in, p_out) -> float:
    den = float(lp_norm(x, p_in))
    return float(lp_norm(A @ x, p_out)) / den if den > 0 else 0.0


def _power_run(A, x, p_in, p_out, max_iter, tol) -> Tuple[float, np.ndarray, bool]:
    q_in = p_in / (p_in - 1.0)
    x = x / lp_norm(x, p_in)
    best = _ratio(A, x, p_in, p_out)
    best_x = x
    prev = best
    for _ in range(max_iter):
        g = _weighted(A @ x, p_out) if p_out != 2.0 else np.conj(A @ x)
        z = g @ A
        if not np.any(z):
            return best, best_x, True
        x = _weighted(z, q_in) if p_in != 2.0 else np.conj(z)
        x = x / lp_norm(x, p_in)
        r = _ratio(A, x, p_in, p_out)
        if r > best:
            best, best_x = r, x
        if abs(r - prev) <= tol * max(r, 1e-300):
            return best, best_x, True
        prev = r
    return best, best_x, False


def pnorm_estimate(
    A,
    p_in: float,
    p_out: Optional[float] = None,
    restarts: int = 8,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-12,
) -> NormEstimate:
    """Lower bound on ``sup ||Ax||_{p_out} / ||x||_{p_in}``.

    Boyd-style power iteration through the two duality maps,
    ``x <- riesz_{p_in}(A^T J_{p_out}(Ax))`` normalised, started from every
    standard basis vector and then ``restarts`` random points. Restart ``k``
    draws from its own stream keyed by ``(seed, k)``, so adding restarts can
    only raise the bound.
    """
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    p_out = p_in if p_out is None else p_out
    m, n = A.shape
    cplx = np.iscomplexobj(A)
    dtype = np.complex128 if cplx else np.float64
    starts = list(np.eye(n, dtype=dtype))
    for k in range(restarts):
        rng = make_rng(seed, k)
        x = rng.uniform(-1.0, 1.0, n)
        if cplx:
            x = x + 1j * rng.uniform(-1.0, 1.0, n)
        starts.append(x.astype(dtype))

    best, witness, converged = -1.0, starts[0], True
    for x0 in starts:
        if not np.any(x0):
            continue
        r, x, ok = _power_run(A, x0, p_in, p_out, max_iter, tol)
        if r > best:
            best, witness, converged = r, x, ok
    return NormEstimate(_ratio(A, witness, p_in, p_out), witness, converged)
